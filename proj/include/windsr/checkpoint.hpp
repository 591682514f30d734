#pragma once

#include <optional>
#include <string>

#include "windsr/models.hpp"

namespace windsr {

// Everything needed to reload and sample without the training config:
// architecture, schedule parameters, embedding frequencies, normalization
// maxima and the target grid shape. Weights follow the JSON header as raw
// 32-bit floats in parameter-registry order.
struct CheckpointHeader {
    ModelSpec model;
    int schedule_steps = 5;
    std::vector<double> embedding_freqs;
    double norm_max_lr = 0.0;
    double norm_max_hr = 0.0;
    int hr_rows = 0;
    int hr_cols = 0;
    std::int64_t param_count = 0;

    std::string to_json() const;
    static CheckpointHeader from_json(const std::string& text);
};

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     Predictor<float>& model);

struct LoadedCheckpoint {
    CheckpointHeader header;
    Predictor<float> model;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace windsr
