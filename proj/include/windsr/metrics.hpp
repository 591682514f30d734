#pragma once

#include <span>
#include <vector>

#include "windsr/field.hpp"

namespace windsr {

// Standard structural-similarity settings: 11x11 Gaussian window with
// sigma 1.5, stabilizers C1 = (k1*L)^2, C2 = (k2*L)^2. L stays 1 on
// normalized data even when test values exceed 1 (no-clip normalization).
struct SSIMParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;

    double c1() const { return k1 * data_range * k1 * data_range; }
    double c2() const { return k2 * data_range * k2 * data_range; }
};

// Mean squared cellwise difference, 64-bit accumulation.
double mse(std::span<const float> pred, std::span<const float> truth);

// 20*log10(1/sqrt(MSE)) against peak 1; MSE = 0 maps to +infinity.
double psnr_from_mse(double mse_value);
double psnr(std::span<const float> pred, std::span<const float> truth);

// Per-pixel SSIM over valid window placements: the map is
// (rows-window+1) x (cols-window+1), georeferenced to the covered centers.
Field ssim_map(const Field& pred, const Field& truth, const SSIMParams& params = {});

// Mean of the SSIM map, identical accumulation order by construction.
double ssim(const Field& pred, const Field& truth, const SSIMParams& params = {});

struct BatchMetrics {
    UtcTime t_start = 0;
    int frames = 0;
    double mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

// Metrics per `batch_frames`-frame chunk (96-hour windows at 3-hourly
// steps with the default 32), in time order; the last chunk may be short.
std::vector<BatchMetrics> temporal_series(const FieldSeries& pred, const FieldSeries& truth,
                                          int batch_frames = 32, const SSIMParams& params = {});

// Cellwise mean of per-frame SSIM maps over the whole series.
Field mean_ssim_map(const FieldSeries& pred, const FieldSeries& truth, const SSIMParams& params = {});

} // namespace windsr
