#pragma once

#include <cstdint>
#include <vector>

#include "windsr/field.hpp"

namespace windsr {

// Synthetic degradation per the blur/decimate/noise model: low-res =
// (hr (*) kernel) downsampled by `scale`, plus Gaussian noise.
struct DegradationParams {
    std::vector<float> kernel; // (2k+1) x (2k+1), row-major, sums to 1
    int kernel_size = 1;       // side length, odd
    int scale = 1;             // decimation factor
    double noise_sigma = 0.0;

    void validate() const;
};

// Normalized Gaussian kernel with side 2*ceil(3*sigma)+1.
DegradationParams gaussian_degradation(double sigma, int scale, double noise_sigma);

// Resamples `field` onto `target` by bilinear interpolation of cell centers
// in lat/lon space, clamping at the domain edge. The two grids must share a
// geobox: resampling changes resolution, not extent.
Field bilinear_resample(const Field& field, const Grid2D& target);

// Applies blur + decimation + seeded Gaussian noise. The output keeps the
// input geobox; output cell (i,j) holds the blurred input at (i*scale,
// j*scale). Deterministic given `seed`.
Field degrade(const Field& hr, const DegradationParams& params, std::uint64_t seed);

// Pointwise sqrt(u^2 + v^2) of wind components in m/s.
Field wind_speed(const Field& u, const Field& v);

enum class ExtractMethod { nearest, bilinear };

// Value at (lat, lon): nearest cell center by default (ties toward lower
// row, then lower column), bilinear behind the flag for sensitivity checks.
double extract_gridpoint(const Field& field, double lat, double lon,
                         ExtractMethod method = ExtractMethod::nearest);

} // namespace windsr
