#include "windsr/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace windsr {

namespace {
constexpr std::int64_t k3h = 3 * 3600;

bool on_synoptic_mark(UtcTime t) { return ((t % k3h) + k3h) % k3h == 0; }
} // namespace

std::pair<FieldSeries, FieldSeries> align_timestamps(const FieldSeries& lr, const FieldSeries& hr) {
    if (lr.step_hours != 1 && lr.step_hours != 3)
        raise(errc::invalid_argument, "low-res step must be 1h or 3h");
    if (hr.step_hours != 3) raise(errc::invalid_argument, "high-res step must be 3h");
    if (lr.frames.empty() || hr.frames.empty()) raise(errc::empty, "cannot align empty series");

    // Keep the low-res frames on the 00,03,...,21 UTC schedule.
    std::vector<size_t> lr_keep;
    for (size_t k = 0; k < lr.size(); ++k)
        if (on_synoptic_mark(lr.time_of(k))) lr_keep.push_back(k);
    if (lr_keep.empty()) raise(errc::alignment, "low-res series never hits a 3-hourly mark");

    UtcTime lo = std::max(lr.time_of(lr_keep.front()), hr.time_of(0));
    UtcTime hi = std::min(lr.time_of(lr_keep.back()), hr.time_of(hr.size() - 1));
    if (lo > hi) raise(errc::alignment, "series do not overlap in time");

    FieldSeries out_lr;
    out_lr.step_hours = 3;
    out_lr.grid = lr.grid;
    out_lr.units = lr.units;
    FieldSeries out_hr;
    out_hr.step_hours = 3;
    out_hr.grid = hr.grid;
    out_hr.units = hr.units;

    bool first = true;
    for (size_t k : lr_keep) {
        UtcTime t = lr.time_of(k);
        if (t < lo || t > hi) continue;
        std::int64_t hk = hr.index_of(t);
        if (hk < 0) continue; // hr offset from the synoptic marks
        if (first) {
            out_lr.t0 = t;
            out_hr.t0 = t;
            first = false;
        }
        out_lr.frames.push_back(lr.frames[k]);
        out_hr.frames.push_back(hr.frames[hk]);
    }
    if (out_lr.frames.empty()) raise(errc::alignment, "no shared 3-hourly timestamps");
    return {std::move(out_lr), std::move(out_hr)};
}

double fit_norm_max(const FieldSeries& train) {
    if (train.frames.empty()) raise(errc::empty, "cannot fit normalization on an empty series");
    if (train.units != Units::meters_per_second)
        raise(errc::invalid_argument, "normalization is fitted on m/s data");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& frame : train.frames)
        for (float v : frame) {
            if (!std::isfinite(v)) raise(errc::data, "non-finite value in training series");
            best = std::max(best, static_cast<double>(v));
        }
    if (!(best > 0.0)) raise(errc::data, "training maximum must be positive");
    return best;
}

FieldSeries normalize(const FieldSeries& series, double norm_max) {
    if (!(norm_max > 0.0)) raise(errc::invalid_argument, "norm_max must be positive");
    FieldSeries out = series;
    out.units = Units::normalized;
    for (auto& frame : out.frames)
        for (float& v : frame) v = static_cast<float>(static_cast<double>(v) / norm_max);
    return out;
}

SampleWindow assemble_window(const FieldSeries& lr, const FieldSeries& hr, UtcTime t0,
                             const Grid2D& hr_grid) {
    static const std::int64_t offsets[4] = {-2 * k3h, -k3h, 0, k3h};
    SampleWindow w;
    w.t0 = t0;
    w.hr_grid = hr_grid;
    w.lr_grid = lr.grid;
    std::int64_t hr_k = hr.index_of(t0);
    if (hr_k < 0) raise(errc::boundary, "target frame missing at " + format_iso8601(t0));
    for (std::int64_t off : offsets) {
        std::int64_t k = lr.index_of(t0 + off);
        if (k < 0)
            raise(errc::boundary, "context frame missing at " + format_iso8601(t0 + off));
        Field up = bilinear_resample(lr.field_at(k), hr_grid);
        w.conditioning.push_back(std::move(up.values));
        w.raw_lr.push_back(lr.frames[k]);
    }
    w.target = hr.frames[hr_k];
    return w;
}

BatchGenerator::BatchGenerator(const DatasetStore& lr, const DatasetStore& hr, const BatchSpec& spec)
    : lr_(lr), hr_(hr), spec_(spec), rng_(spec.seed) {
    spec_.validate();
    const StoreMeta& lm = lr.meta();
    const StoreMeta& hm = hr.meta();
    if (!(lm.geobox == hm.geobox)) raise(errc::extent, "stores cover different geoboxes");
    if (lm.step_hours != 3 || hm.step_hours != 3)
        raise(errc::invalid_argument, "batch generation expects aligned 3-hourly stores");
    lr_norm_ = lm.norm_max.value_or(0.0);
    hr_norm_ = hm.norm_max.value_or(0.0);
    if (!(lr_norm_ > 0.0) || !(hr_norm_ > 0.0))
        raise(errc::invalid_argument, "stores must carry fitted norm_max sidecar values");

    // Valid anchors need lr frames at t0-6h..t0+3h and the hr target at t0.
    for (std::int64_t hk = 0; hk < hm.times; ++hk) {
        UtcTime t0 = hm.time_of(hk);
        std::int64_t span = t0 - lm.t0;
        if (span % k3h != 0) continue;
        std::int64_t lk = span / k3h;
        if (lk - 2 < 0 || lk + 1 >= lm.times) continue;
        anchors_.push_back(hk);
        lr_base_.push_back(lk - 2);
    }
    if (anchors_.empty()) raise(errc::empty, "no valid sample windows in the store pair");
}

UtcTime BatchGenerator::anchor_time(std::int64_t i) const { return hr_.meta().time_of(anchors_[i]); }

SampleWindow BatchGenerator::window_at(std::int64_t a) const {
    SampleWindow w;
    w.t0 = hr_.meta().time_of(anchors_[a]);
    w.hr_grid = hr_.meta().grid();
    w.lr_grid = lr_.meta().grid();
    const size_t lr_n = static_cast<size_t>(w.lr_grid.cell_count());
    Field lr_frame(w.lr_grid, Units::normalized);
    for (int c = 0; c < 4; ++c) {
        const float* src = lr_.frame_data(lr_base_[a] + c);
        for (size_t i = 0; i < lr_n; ++i)
            lr_frame.values[i] = static_cast<float>(static_cast<double>(src[i]) / lr_norm_);
        w.raw_lr.push_back(lr_frame.values);
        Field up = bilinear_resample(lr_frame, w.hr_grid);
        w.conditioning.push_back(std::move(up.values));
    }
    const float* tgt = hr_.frame_data(anchors_[a]);
    const size_t hr_n = static_cast<size_t>(w.hr_grid.cell_count());
    w.target.resize(hr_n);
    for (size_t i = 0; i < hr_n; ++i)
        w.target[i] = static_cast<float>(static_cast<double>(tgt[i]) / hr_norm_);
    return w;
}

std::vector<SampleWindow> BatchGenerator::next() {
    std::vector<SampleWindow> batch;
    const std::int64_t n = valid_windows();
    for (int b = 0; b < spec_.batch_size; ++b) {
        if (spec_.mode == BatchMode::sequential) {
            if (cursor_ >= n) break;
            batch.push_back(window_at(cursor_++));
        } else {
            if (emitted_this_epoch_ >= n) break;
            batch.push_back(window_at(static_cast<std::int64_t>(rng_.below(n))));
            ++emitted_this_epoch_;
        }
    }
    if (spec_.mode == BatchMode::random && emitted_this_epoch_ >= n) emitted_this_epoch_ = 0;
    return batch;
}

void BatchGenerator::rewind() {
    cursor_ = 0;
    emitted_this_epoch_ = 0;
    rng_ = Rng(spec_.seed);
}

void SynthConfig::validate() const {
    if (hr_rows < 2 || hr_cols < 2) raise(errc::invalid_argument, "synth grid needs >= 2 rows/cols");
    if (frames < 1) raise(errc::invalid_argument, "synth needs at least one frame");
    if (scale < 1) raise(errc::invalid_argument, "synth scale must be >= 1");
    if (kernel_sigma < 0.0 || noise_sigma < 0.0)
        raise(errc::invalid_argument, "synth sigmas must be >= 0");
    if (step_hours != 1 && step_hours != 3) raise(errc::invalid_argument, "step_hours must be 1 or 3");
    geobox.validate();
}

SynthConfig synth_config_from_json(const std::string& json_text) {
    using nlohmann::json;
    SynthConfig c;
    json j;
    try {
        j = json::parse(json_text);
        c.hr_rows = j.at("hr_rows").get<int>();
        c.hr_cols = j.at("hr_cols").get<int>();
        c.frames = j.at("frames").get<std::int64_t>();
        const auto& kern = j.at("kernel");
        if (kern.at("type").get<std::string>() != "gaussian")
            raise(errc::invalid_argument, "only gaussian kernels are supported");
        c.kernel_sigma = kern.at("sigma").get<double>();
        c.scale = j.at("scale").get<int>();
        c.noise_sigma = j.at("noise_sigma").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("t0")) c.t0 = parse_iso8601(j.at("t0").get<std::string>());
        if (j.contains("step_hours")) c.step_hours = j.at("step_hours").get<int>();
        if (j.contains("geobox")) {
            const auto& gb = j.at("geobox");
            c.geobox = GeoBox{gb.at("north").get<double>(), gb.at("south").get<double>(),
                              gb.at("east").get<double>(), gb.at("west").get<double>()};
        }
    } catch (const json::exception& e) {
        raise(errc::invalid_argument, std::string("bad synth config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

// A drifting isotropic bump; centers wrap over an extended margin so mass
// keeps flowing through the domain.
struct Bump {
    double row, col, drow, dcol, amp, sigma;
};

} // namespace

SynthResult synth_generate(const SynthConfig& config, const std::string& prefix) {
    config.validate();
    Grid2D hr_grid(config.hr_rows, config.hr_cols, config.geobox);
    DegradationParams degr = gaussian_degradation(config.kernel_sigma, config.scale, config.noise_sigma);

    Rng rng(Rng::mix(config.seed, 0x57494e44));
    const double margin = 0.25 * std::max(config.hr_rows, config.hr_cols);
    const double row_span = config.hr_rows + 2 * margin;
    const double col_span = config.hr_cols + 2 * margin;
    std::vector<Bump> bumps(12);
    for (auto& b : bumps) {
        b.row = rng.uniform(-margin, config.hr_rows + margin);
        b.col = rng.uniform(-margin, config.hr_cols + margin);
        b.drow = rng.uniform(-1.5, 1.5);
        b.dcol = rng.uniform(-1.5, 1.5);
        b.amp = rng.uniform(2.0, 9.0);
        b.sigma = rng.uniform(0.09, 0.22) * std::max(config.hr_rows, config.hr_cols);
    }

    StoreMeta hr_meta;
    hr_meta.rows = config.hr_rows;
    hr_meta.cols = config.hr_cols;
    hr_meta.times = config.frames;
    hr_meta.geobox = config.geobox;
    hr_meta.t0 = config.t0;
    hr_meta.step_hours = config.step_hours;
    hr_meta.units = Units::meters_per_second;

    int lr_rows = (config.hr_rows - 1) / config.scale + 1;
    int lr_cols = (config.hr_cols - 1) / config.scale + 1;
    StoreMeta lr_meta = hr_meta;
    lr_meta.rows = lr_rows;
    lr_meta.cols = lr_cols;

    SynthResult result{prefix + "_lr.f32grid", prefix + "_hr.f32grid"};
    StoreWriter hr_writer(result.hr_path, hr_meta);
    StoreWriter lr_writer(result.lr_path, lr_meta);

    Field hr_field(hr_grid, Units::meters_per_second);
    for (std::int64_t t = 0; t < config.frames; ++t) {
        std::fill(hr_field.values.begin(), hr_field.values.end(), 0.0f);
        for (const auto& b : bumps) {
            double cr = b.row + t * b.drow;
            double cc = b.col + t * b.dcol;
            // wrap into [-margin, size+margin)
            cr = std::fmod(cr + margin, row_span);
            if (cr < 0) cr += row_span;
            cr -= margin;
            cc = std::fmod(cc + margin, col_span);
            if (cc < 0) cc += col_span;
            cc -= margin;
            double inv2s2 = 1.0 / (2.0 * b.sigma * b.sigma);
            for (int i = 0; i < config.hr_rows; ++i) {
                double dr2 = (i - cr) * (i - cr);
                for (int j = 0; j < config.hr_cols; ++j) {
                    double d2 = dr2 + (j - cc) * (j - cc);
                    hr_field.at(i, j) += static_cast<float>(b.amp * std::exp(-d2 * inv2s2));
                }
            }
        }
        // light floor so the field reads as a plausible wind magnitude
        for (float& v : hr_field.values) v += 0.5f;
        hr_writer.append(hr_field.values.data(), hr_field.values.size());

        Field lr_field = degrade(hr_field, degr, Rng::mix(config.seed, 0x4c520000 + static_cast<std::uint64_t>(t)));
        lr_writer.append(lr_field.values.data(), lr_field.values.size());
    }
    hr_writer.finish();
    lr_writer.finish();
    return result;
}

} // namespace windsr
