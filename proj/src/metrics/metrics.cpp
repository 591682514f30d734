#include "windsr/metrics.hpp"

#include <cmath>
#include <limits>

#include "windsr/error.hpp"

namespace windsr {

double mse(std::span<const float> pred, std::span<const float> truth) {
    if (pred.size() != truth.size()) raise(errc::shape, "mse inputs differ in size");
    if (pred.empty()) raise(errc::shape, "mse needs at least one value");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double psnr_from_mse(double mse_value) {
    if (mse_value < 0.0) raise(errc::invalid_argument, "negative mse");
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(1.0 / std::sqrt(mse_value));
}

double psnr(std::span<const float> pred, std::span<const float> truth) {
    return psnr_from_mse(mse(pred, truth));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        double d = i - half;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum; // separable halves each sum to 1
    return w;
}

// Separable valid-mode filtering: rows first, then columns.
void filter_valid(const std::vector<double>& src, int rows, int cols,
                  const std::vector<double>& window, std::vector<double>& tmp,
                  std::vector<double>& dst) {
    const int w = static_cast<int>(window.size());
    const int out_cols = cols - w + 1;
    const int out_rows = rows - w + 1;
    tmp.assign(static_cast<size_t>(rows) * out_cols, 0.0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < out_cols; ++j) {
            double acc = 0.0;
            const double* row = src.data() + static_cast<size_t>(i) * cols + j;
            for (int k = 0; k < w; ++k) acc += window[k] * row[k];
            tmp[static_cast<size_t>(i) * out_cols + j] = acc;
        }
    dst.assign(static_cast<size_t>(out_rows) * out_cols, 0.0);
    for (int i = 0; i < out_rows; ++i)
        for (int j = 0; j < out_cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < w; ++k)
                acc += window[k] * tmp[static_cast<size_t>(i + k) * out_cols + j];
            dst[static_cast<size_t>(i) * out_cols + j] = acc;
        }
}

} // namespace

Field ssim_map(const Field& pred, const Field& truth, const SSIMParams& params) {
    if (!(pred.grid == truth.grid)) raise(errc::shape, "ssim inputs must share a grid");
    const int rows = pred.grid.rows, cols = pred.grid.cols;
    if (rows < params.window || cols < params.window)
        raise(errc::shape, "field smaller than the ssim window");

    const size_t n = pred.values.size();
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
        a[i] = pred.values[i];
        b[i] = truth.values[i];
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    std::vector<double> window = gaussian_window(params.window, params.sigma);
    std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
    filter_valid(a, rows, cols, window, tmp, mu_a);
    filter_valid(b, rows, cols, window, tmp, mu_b);
    filter_valid(aa, rows, cols, window, tmp, m_aa);
    filter_valid(bb, rows, cols, window, tmp, m_bb);
    filter_valid(ab, rows, cols, window, tmp, m_ab);

    const int half = params.window / 2;
    const int out_rows = rows - params.window + 1;
    const int out_cols = cols - params.window + 1;
    // Map grid covers the window-center cells of the valid region.
    GeoBox box{pred.grid.lat_of_row(half), pred.grid.lat_of_row(rows - 1 - half),
               pred.grid.lon_of_col(cols - 1 - half), pred.grid.lon_of_col(half)};
    Field map(Grid2D(out_rows, out_cols, box), Units::normalized);

    const double c1 = params.c1();
    const double c2 = params.c2();
    for (size_t i = 0; i < map.values.size(); ++i) {
        double ma = mu_a[i], mb = mu_b[i];
        double va = m_aa[i] - ma * ma;
        double vb = m_bb[i] - mb * mb;
        double cov = m_ab[i] - ma * mb;
        double value = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (va + vb + c2));
        map.values[i] = static_cast<float>(value);
    }
    return map;
}

double ssim(const Field& pred, const Field& truth, const SSIMParams& params) {
    Field map = ssim_map(pred, truth, params);
    double acc = 0.0;
    for (float v : map.values) acc += static_cast<double>(v);
    return acc / static_cast<double>(map.values.size());
}

std::vector<BatchMetrics> temporal_series(const FieldSeries& pred, const FieldSeries& truth,
                                          int batch_frames, const SSIMParams& params) {
    if (batch_frames < 1) raise(errc::invalid_argument, "batch size must be >= 1");
    if (pred.size() != truth.size() || pred.t0 != truth.t0 || pred.step_hours != truth.step_hours)
        raise(errc::alignment, "series are not aligned");
    std::vector<BatchMetrics> out;
    for (size_t start = 0; start < pred.size(); start += batch_frames) {
        size_t end = std::min(pred.size(), start + batch_frames);
        BatchMetrics m;
        m.t_start = pred.time_of(start);
        m.frames = static_cast<int>(end - start);
        double mse_acc = 0.0, ssim_acc = 0.0;
        for (size_t k = start; k < end; ++k) {
            mse_acc += mse(pred.frames[k], truth.frames[k]);
            ssim_acc += ssim(pred.field_at(k), truth.field_at(k), params);
        }
        m.mse = mse_acc / m.frames;
        m.ssim = ssim_acc / m.frames;
        m.psnr = psnr_from_mse(m.mse);
        out.push_back(m);
    }
    return out;
}

Field mean_ssim_map(const FieldSeries& pred, const FieldSeries& truth, const SSIMParams& params) {
    if (pred.frames.empty()) raise(errc::invalid_argument, "mean ssim map needs at least one frame");
    if (pred.size() != truth.size()) raise(errc::alignment, "series are not aligned");
    Field first = ssim_map(pred.field_at(0), truth.field_at(0), params);
    std::vector<double> acc(first.values.begin(), first.values.end());
    for (size_t k = 1; k < pred.size(); ++k) {
        Field map = ssim_map(pred.field_at(k), truth.field_at(k), params);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += map.values[i];
    }
    const double inv = 1.0 / static_cast<double>(pred.size());
    for (size_t i = 0; i < acc.size(); ++i) first.values[i] = static_cast<float>(acc[i] * inv);
    return first;
}

} // namespace windsr
