#include "windsr/grids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "windsr/rng.hpp"

namespace windsr {

void DegradationParams::validate() const {
    if (kernel_size < 1 || kernel_size % 2 == 0)
        raise(errc::invalid_argument, "kernel side must be odd and positive");
    if (kernel.size() != static_cast<size_t>(kernel_size) * kernel_size)
        raise(errc::invalid_argument, "kernel buffer does not match its declared side");
    if (scale < 1) raise(errc::invalid_argument, "decimation scale must be >= 1");
    if (noise_sigma < 0.0) raise(errc::invalid_argument, "noise sigma must be >= 0");
    double sum = 0.0;
    for (float w : kernel) {
        if (!std::isfinite(w)) raise(errc::invalid_argument, "kernel entries must be finite");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-5) raise(errc::invalid_argument, "kernel must be normalized to sum 1");
}

DegradationParams gaussian_degradation(double sigma, int scale, double noise_sigma) {
    if (sigma < 0.0) raise(errc::invalid_argument, "gaussian sigma must be >= 0");
    DegradationParams p;
    p.scale = scale;
    p.noise_sigma = noise_sigma;
    int k = sigma > 0.0 ? static_cast<int>(std::ceil(3.0 * sigma)) : 0;
    p.kernel_size = 2 * k + 1;
    p.kernel.resize(static_cast<size_t>(p.kernel_size) * p.kernel_size);
    double sum = 0.0;
    for (int i = -k; i <= k; ++i)
        for (int j = -k; j <= k; ++j) {
            double w = sigma > 0.0 ? std::exp(-(i * i + j * j) / (2.0 * sigma * sigma)) : 1.0;
            p.kernel[static_cast<size_t>(i + k) * p.kernel_size + (j + k)] = static_cast<float>(w);
            sum += w;
        }
    for (float& w : p.kernel) w = static_cast<float>(w / sum);
    p.validate();
    return p;
}

Field bilinear_resample(const Field& field, const Grid2D& target) {
    if (!(field.grid.box == target.box))
        raise(errc::extent, "resampling requires matching geoboxes");
    Field out(target, field.units);
    const Grid2D& src = field.grid;
    // Fractional source index of each target center; spacing ratios are
    // exact because both grids span the same box edge-to-edge.
    const double row_ratio = static_cast<double>(src.rows - 1) / (target.rows - 1);
    const double col_ratio = static_cast<double>(src.cols - 1) / (target.cols - 1);
    for (int i = 0; i < target.rows; ++i) {
        double sr = i * row_ratio;
        int r0 = std::min(static_cast<int>(sr), src.rows - 2);
        double fr = sr - r0;
        for (int j = 0; j < target.cols; ++j) {
            double sc = j * col_ratio;
            int c0 = std::min(static_cast<int>(sc), src.cols - 2);
            double fc = sc - c0;
            double v00 = field.at(r0, c0);
            double v01 = field.at(r0, c0 + 1);
            double v10 = field.at(r0 + 1, c0);
            double v11 = field.at(r0 + 1, c0 + 1);
            double v = (1.0 - fr) * ((1.0 - fc) * v00 + fc * v01) + fr * ((1.0 - fc) * v10 + fc * v11);
            out.at(i, j) = static_cast<float>(v);
        }
    }
    return out;
}

Field degrade(const Field& hr, const DegradationParams& params, std::uint64_t seed) {
    params.validate();
    const Grid2D& g = hr.grid;
    if (params.kernel_size > g.rows || params.kernel_size > g.cols)
        raise(errc::kernel, "degradation kernel larger than the field");

    // Blur with edge replication; the study area is regional, not periodic.
    std::vector<float> blurred(static_cast<size_t>(g.cell_count()));
    const int k = params.kernel_size / 2;
    for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
            double acc = 0.0;
            for (int di = -k; di <= k; ++di) {
                int r = std::clamp(i + di, 0, g.rows - 1);
                for (int dj = -k; dj <= k; ++dj) {
                    int c = std::clamp(j + dj, 0, g.cols - 1);
                    acc += static_cast<double>(params.kernel[static_cast<size_t>(di + k) * params.kernel_size + (dj + k)]) *
                           hr.at(r, c);
                }
            }
            blurred[static_cast<size_t>(i) * g.cols + j] = static_cast<float>(acc);
        }

    // Decimate: output (i,j) samples input (i*scale, j*scale). The result
    // keeps the input geobox and is re-gridded over the full extent.
    int out_rows = (g.rows - 1) / params.scale + 1;
    int out_cols = (g.cols - 1) / params.scale + 1;
    Field out(Grid2D(out_rows, out_cols, g.box), hr.units);
    Rng rng(seed);
    for (int i = 0; i < out_rows; ++i)
        for (int j = 0; j < out_cols; ++j) {
            double v = blurred[static_cast<size_t>(i) * params.scale * g.cols + static_cast<size_t>(j) * params.scale];
            if (params.noise_sigma > 0.0) v += params.noise_sigma * rng.normal();
            out.at(i, j) = static_cast<float>(v);
        }
    return out;
}

Field wind_speed(const Field& u, const Field& v) {
    if (!(u.grid == v.grid)) raise(errc::extent, "wind components must share a grid");
    if (u.units != Units::meters_per_second || v.units != Units::meters_per_second)
        raise(errc::invalid_argument, "wind components must be in m/s");
    Field out(u.grid, Units::meters_per_second);
    for (size_t i = 0; i < out.values.size(); ++i) {
        double uu = u.values[i];
        double vv = v.values[i];
        out.values[i] = static_cast<float>(std::sqrt(uu * uu + vv * vv));
    }
    return out;
}

double extract_gridpoint(const Field& field, double lat, double lon, ExtractMethod method) {
    const Grid2D& g = field.grid;
    if (!g.box.contains(lat, lon)) raise(errc::extent, "point outside the field's geobox");
    if (method == ExtractMethod::bilinear) {
        double sr = (g.box.north - lat) / g.lat_spacing();
        double sc = (lon - g.box.west) / g.lon_spacing();
        int r0 = std::clamp(static_cast<int>(sr), 0, g.rows - 2);
        int c0 = std::clamp(static_cast<int>(sc), 0, g.cols - 2);
        double fr = sr - r0;
        double fc = sc - c0;
        return (1.0 - fr) * ((1.0 - fc) * field.at(r0, c0) + fc * field.at(r0, c0 + 1)) +
               fr * ((1.0 - fc) * field.at(r0 + 1, c0) + fc * field.at(r0 + 1, c0 + 1));
    }
    // Nearest cell center, Euclidean in lat/lon. Scanning in ascending
    // (row, col) order with a strict < keeps the lower row, then lower
    // column, on ties.
    int best_r = 0, best_c = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.rows; ++i) {
        double dlat = g.lat_of_row(i) - lat;
        for (int j = 0; j < g.cols; ++j) {
            double dlon = g.lon_of_col(j) - lon;
            double d = dlat * dlat + dlon * dlon;
            if (d < best_d) {
                best_d = d;
                best_r = i;
                best_c = j;
            }
        }
    }
    return field.at(best_r, best_c);
}

} // namespace windsr
