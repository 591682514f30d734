#include <doctest.h>

#include <cmath>

#include "windsr/metrics.hpp"
#include "windsr/rng.hpp"

using namespace windsr;

namespace {

const GeoBox kBox{47.75, 35.0, 18.75, 6.0};

Field random_field(int rows, int cols, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Field f(Grid2D(rows, cols, kBox), Units::normalized);
    Rng rng(seed);
    for (auto& v : f.values) v = static_cast<float>(rng.uniform(lo, hi));
    return f;
}

// Direct per-window double loop with an explicitly normalized 2-D Gaussian
// window; independent of the separable implementation.
double ssim_oracle(const Field& a, const Field& b, const SSIMParams& p) {
    const int w = p.window;
    std::vector<double> win(static_cast<size_t>(w) * w);
    double sum = 0.0;
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
            double di = i - w / 2, dj = j - w / 2;
            win[static_cast<size_t>(i) * w + j] = std::exp(-(di * di + dj * dj) / (2 * p.sigma * p.sigma));
            sum += win[static_cast<size_t>(i) * w + j];
        }
    for (auto& v : win) v /= sum;

    const int rows = a.grid.rows, cols = a.grid.cols;
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i + w <= rows; ++i)
        for (int j = 0; j + w <= cols; ++j) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int di = 0; di < w; ++di)
                for (int dj = 0; dj < w; ++dj) {
                    double wt = win[static_cast<size_t>(di) * w + dj];
                    double va = a.at(i + di, j + dj);
                    double vb = b.at(i + di, j + dj);
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
            acc += ((2 * ma * mb + p.c1()) * (2 * cov + p.c2())) /
                   ((ma * ma + mb * mb + p.c1()) * (var_a + var_b + p.c2()));
            ++count;
        }
    return acc / count;
}

} // namespace

TEST_CASE("mse basics and the scalar loop oracle") {
    std::vector<float> zeros(64, 0.0f), ones(64, 1.0f);
    CHECK(mse(zeros, zeros) == 0.0);
    CHECK(mse(ones, zeros) == doctest::Approx(1.0));

    Field a = random_field(8, 8, 1), b = random_field(8, 8, 2);
    double want = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        double d = static_cast<double>(a.values[i]) - b.values[i];
        want += d * d;
    }
    want /= a.values.size();
    CHECK(std::abs(mse(a.values, b.values) - want) < 1e-12);

    std::vector<float> short_buf(32, 0.0f);
    CHECK_THROWS_AS(mse(short_buf, zeros), Error);
}

TEST_CASE("mse is invariant under a shared constant shift") {
    Field a = random_field(6, 6, 3), b = random_field(6, 6, 4);
    double base = mse(a.values, b.values);
    for (auto& v : a.values) v += 2.5f;
    for (auto& v : b.values) v += 2.5f;
    CHECK(mse(a.values, b.values) == doctest::Approx(base).epsilon(1e-5));
}

TEST_CASE("psnr values and sentinel") {
    CHECK(psnr_from_mse(0.01) == doctest::Approx(20.0));
    CHECK(psnr_from_mse(1.0) == doctest::Approx(0.0));
    CHECK(std::isinf(psnr_from_mse(0.0)));
    std::vector<float> a(16, 0.5f);
    CHECK(std::isinf(psnr(a, a)));
}

TEST_CASE("psnr strictly decreases along a noise sweep") {
    Field truth = random_field(8, 8, 5);
    double prev = std::numeric_limits<double>::infinity();
    for (int level = 1; level <= 6; ++level) {
        Field noisy = truth;
        Rng rng(100 + level);
        for (auto& v : noisy.values)
            v += static_cast<float>(0.02 * level * rng.normal());
        double p = psnr(noisy.values, truth.values);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("ssim of identical fields is exactly one") {
    Field a = random_field(16, 16, 7);
    CHECK(ssim(a, a) == 1.0);
    Field map = ssim_map(a, a);
    for (float v : map.values) CHECK(v == 1.0f);
}

TEST_CASE("ssim of constant fields matches the closed form") {
    // variance terms cancel against C2: SSIM = (2ab+C1)/(a^2+b^2+C1)
    Field a(Grid2D(16, 16, kBox), Units::normalized);
    Field b(Grid2D(16, 16, kBox), Units::normalized);
    std::fill(a.values.begin(), a.values.end(), 0.2f);
    std::fill(b.values.begin(), b.values.end(), 0.8f);
    SSIMParams p;
    double va = 0.2, vb = 0.8;
    double want = (2 * va * vb + p.c1()) / (va * va + vb * vb + p.c1());
    CHECK(ssim(a, b) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("ssim matches the windowed-statistics oracle on random fixtures") {
    SSIMParams p;
    for (int trial = 0; trial < 20; ++trial) {
        Field a = random_field(16, 16, 200 + trial);
        Field b = random_field(16, 16, 300 + trial);
        CHECK(std::abs(ssim(a, b) - ssim_oracle(a, b, p)) < 1e-6);
    }
}

TEST_CASE("ssim is symmetric and mean(map) equals ssim bitwise") {
    Field a = random_field(20, 20, 8), b = random_field(20, 20, 9);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-9);
    for (int trial = 0; trial < 20; ++trial) {
        Field x = random_field(16, 16, 400 + trial);
        Field y = random_field(16, 16, 500 + trial);
        Field map = ssim_map(x, y);
        double acc = 0.0;
        for (float v : map.values) acc += static_cast<double>(v);
        CHECK(ssim(x, y) == acc / map.values.size()); // bit-level identity
    }
}

TEST_CASE("a single perturbed pixel only disturbs the map within one window radius") {
    Field a = random_field(24, 24, 11);
    Field b = a;
    b.at(12, 12) += 0.5f;
    Field base = ssim_map(a, a);
    Field hit = ssim_map(a, b);
    // map index (i,j) covers input rows i..i+10; pixel (12,12) touches map
    // rows 2..12 only
    for (int i = 0; i < hit.grid.rows; ++i)
        for (int j = 0; j < hit.grid.cols; ++j) {
            bool inside = i >= 2 && i <= 12 && j >= 2 && j <= 12;
            if (!inside) CHECK(hit.at(i, j) == base.at(i, j));
        }
    CHECK(hit.at(7, 7) < 1.0f);
}

TEST_CASE("ssim rejects fields smaller than the window") {
    Field a = random_field(8, 8, 12);
    CHECK_THROWS_AS(ssim(a, a), Error);
}

namespace {

FieldSeries series_of(std::vector<Field> frames) {
    FieldSeries s;
    s.t0 = 0;
    s.step_hours = 3;
    s.grid = frames[0].grid;
    s.units = Units::normalized;
    for (auto& f : frames) s.frames.push_back(f.values);
    return s;
}

} // namespace

TEST_CASE("temporal series counts batches and flags a corrupted one") {
    std::vector<Field> pred, truth;
    for (int k = 0; k < 64; ++k) {
        Field t = random_field(16, 16, 1000 + k);
        Field p = t;
        pred.push_back(p);
        truth.push_back(t);
    }
    auto clean = temporal_series(series_of(pred), series_of(truth), 32);
    CHECK(clean.size() == 2); // 64 frames -> 2 entries
    for (const auto& b : clean) CHECK(b.ssim == doctest::Approx(1.0));

    // corrupt frames 32..63 only: exactly one depressed SSIM entry
    for (int k = 32; k < 64; ++k) {
        Rng rng(2000 + k);
        for (auto& v : pred[k].values) v += static_cast<float>(0.3 * rng.normal());
    }
    auto series = temporal_series(series_of(pred), series_of(truth), 32);
    CHECK(series[0].ssim == doctest::Approx(1.0));
    CHECK(series[1].ssim < 0.9);
    CHECK(series[1].mse > series[0].mse);

    // constant series pair gives a constant metric series
    std::vector<Field> cp(8, pred[0]), ct(8, pred[0]);
    auto flat = temporal_series(series_of(cp), series_of(ct), 4);
    CHECK(flat.size() == 2);
    CHECK(flat[0].ssim == flat[1].ssim);
    CHECK(flat[0].mse == flat[1].mse);
}

TEST_CASE("mean ssim map averages frames and localizes regional corruption") {
    Field t0 = random_field(24, 24, 21);
    Field t1 = random_field(24, 24, 22);
    Field p0 = t0;
    Field p1 = t1;
    // single frame: the mean map equals that frame's map
    Field single = mean_ssim_map(series_of({p0}), series_of({t0}));
    Field direct = ssim_map(p0, t0);
    CHECK(single.values == direct.values);

    // two frames: elementwise average
    Field m0 = ssim_map(p0, t0), m1 = ssim_map(p1, t1);
    Field mean2 = mean_ssim_map(series_of({p0, p1}), series_of({t0, t1}));
    for (size_t i = 0; i < mean2.values.size(); ++i)
        CHECK(mean2.values[i] == doctest::Approx(0.5 * (m0.values[i] + m1.values[i])).epsilon(1e-6));

    // systematic corruption in one corner drags that region's mean down
    std::vector<Field> preds, truths;
    for (int k = 0; k < 6; ++k) {
        Field t = random_field(24, 24, 3000 + k);
        Field p = t;
        Rng rng(4000 + k);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) p.at(i, j) += static_cast<float>(0.4 * rng.normal());
        preds.push_back(p);
        truths.push_back(t);
    }
    Field mm = mean_ssim_map(series_of(preds), series_of(truths));
    float min_v = 2.0f;
    int min_i = -1, min_j = -1;
    for (int i = 0; i < mm.grid.rows; ++i)
        for (int j = 0; j < mm.grid.cols; ++j)
            if (mm.at(i, j) < min_v) {
                min_v = mm.at(i, j);
                min_i = i;
                min_j = j;
            }
    CHECK(min_i < 8);
    CHECK(min_j < 8);
}
