#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "windsr/datapipe.hpp"
#include "windsr/models.hpp"

namespace windsr {

// Runtime configuration shared by the pipeline commands. Parsed from JSON;
// every field can be overridden from the command line by its dotted name.
struct RunConfig {
    struct Paths {
        std::string lr_store;
        std::string hr_store;
        std::string truth_store;
        std::string checkpoint;
        std::string out_dir = ".";
        std::vector<std::pair<std::string, std::string>> pred_stores; // name -> path
        std::vector<std::string> member_stores;
    } paths;

    struct Training {
        int epochs = 30;
        int batch = 8;
        double lr_start = 1e-4;
        double lr_end = 1e-5;
        double weight_decay_start = 1e-5;
        double weight_decay_end = 1e-6;
        std::uint64_t seed = 0;
        std::string kind = "diffusion_unet";
        std::vector<int> channels = {16, 32, 48, 64};
        int blocks_per_level = 2;
        int embed_frequencies = 16;
        int schedule_steps = 5;
        bool continuous_time = true;
        bool squared_loss = false;
    } training;

    struct Sampling {
        int members = 15;
        int steps = 5;
        std::uint64_t seed = 0;
        bool keep_members = false;
        bool stochastic_sigma = false;
        double eta = 1.0; // used only with stochastic_sigma
    } sampling;

    struct Metrics {
        std::string aggregation = "batch"; // or "global"
        int batch_frames = 32;
        bool series = true;
        bool maps = true;
    } metrics;

    struct Validation {
        std::string station_file;
        int slot_minutes = 60;
        std::vector<std::pair<std::string, std::string>> products; // name -> store path
        std::string extract = "nearest";                           // or "bilinear"
    } validation;

    SynthConfig synth;
    int threads = 0;

    void validate_common() const;
};

RunConfig run_config_from_json(const std::string& json_text);

} // namespace windsr
