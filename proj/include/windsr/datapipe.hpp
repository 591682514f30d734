#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "windsr/field.hpp"
#include "windsr/grids.hpp"
#include "windsr/rng.hpp"
#include "windsr/store.hpp"

namespace windsr {

// One training/inference unit: four conditioning frames upsampled to the
// high-res grid (t-6h, t-3h, t0, t+3h, in that order) plus the target.
// `raw_lr` keeps the undecimated low-res frames for post-upsampling
// baselines; the diffusion path never reads it.
struct SampleWindow {
    UtcTime t0 = 0;
    Grid2D hr_grid;
    std::vector<std::vector<float>> conditioning; // 4 frames, hr grid
    std::vector<float> target;                    // hr grid
    Grid2D lr_grid;
    std::vector<std::vector<float>> raw_lr; // 4 frames, lr grid
};

enum class BatchMode { random, sequential };

struct BatchSpec {
    int batch_size = 8;
    BatchMode mode = BatchMode::random;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size < 1) raise(errc::invalid_argument, "batch_size must be >= 1");
    }
};

// Subsamples the low-res series to the 3-hourly 00,03,...,21 UTC marks and
// trims both series to their common time range.
std::pair<FieldSeries, FieldSeries> align_timestamps(const FieldSeries& lr, const FieldSeries& hr);

// Maximum over all frames and cells of a training split (m/s input).
double fit_norm_max(const FieldSeries& train);

// Divides by norm_max and flips units to normalized. Values above norm_max
// stay above 1: test splits are scaled by the training maximum, not clipped.
FieldSeries normalize(const FieldSeries& series, double norm_max);

// Builds the 4+1 window at t0; throws errc::boundary when any context frame
// is missing.
SampleWindow assemble_window(const FieldSeries& lr, const FieldSeries& hr, UtcTime t0,
                             const Grid2D& hr_grid);

// Streams sample windows out of a pair of aligned stores, normalizing on
// the fly. Random mode draws valid anchors uniformly with replacement for
// one epoch (epoch length = number of valid windows); sequential mode walks
// them in time order. Frames are decoded lazily from the memory-mapped
// stores; nothing is ever fully materialized.
class BatchGenerator {
public:
    BatchGenerator(const DatasetStore& lr, const DatasetStore& hr, const BatchSpec& spec);

    // Next batch, at most spec.batch_size windows; empty when a sequential
    // pass is exhausted. Random mode restarts a fresh epoch automatically.
    std::vector<SampleWindow> next();

    void rewind(); // restart the sequence (same seed, same order)

    std::int64_t valid_windows() const { return static_cast<std::int64_t>(anchors_.size()); }
    UtcTime anchor_time(std::int64_t i) const;

private:
    SampleWindow window_at(std::int64_t anchor) const;

    const DatasetStore& lr_;
    const DatasetStore& hr_;
    BatchSpec spec_;
    double lr_norm_ = 1.0;
    double hr_norm_ = 1.0;
    std::vector<std::int64_t> anchors_; // hr frame indices with full context
    std::vector<std::int64_t> lr_base_; // lr frame index of t0-6h per anchor
    std::int64_t cursor_ = 0;
    std::int64_t emitted_this_epoch_ = 0;
    Rng rng_;
};

// Synthetic paired-dataset generator: smooth drifting Gaussian-bump fields
// in a plausible m/s range, with the low-res side produced by `degrade`.
struct SynthConfig {
    int hr_rows = 64;
    int hr_cols = 64;
    std::int64_t frames = 128;
    double kernel_sigma = 1.0; // gaussian blur
    int scale = 4;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    GeoBox geobox{47.75, 35.0, 18.75, 6.0}; // default study area
    UtcTime t0 = 1609459200;                // 2021-01-01T00:00:00Z
    int step_hours = 3;

    void validate() const;
};

SynthConfig synth_config_from_json(const std::string& json_text);

struct SynthResult {
    std::string lr_path;
    std::string hr_path;
};

// Writes `<prefix>_hr.f32grid` / `<prefix>_lr.f32grid` (+ sidecars).
SynthResult synth_generate(const SynthConfig& config, const std::string& prefix);

} // namespace windsr
