#include "windsr/commands.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "windsr/checkpoint.hpp"
#include "windsr/datapipe.hpp"
#include "windsr/diffusion.hpp"
#include "windsr/ensemble.hpp"
#include "windsr/metrics.hpp"
#include "windsr/validation.hpp"

namespace windsr {

using nlohmann::json;

namespace {

void ensure_dir(const std::string& path) {
    if (path.empty() || path == ".") return;
    std::string partial;
    for (size_t i = 0; i <= path.size(); ++i) {
        if (i == path.size() || path[i] == '/') {
            if (!partial.empty() && ::mkdir(partial.c_str(), 0755) != 0 && errno != EEXIST)
                raise(errc::io, "cannot create directory " + partial);
        }
        if (i < path.size()) partial += path[i];
    }
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) raise(errc::io, "cannot write " + path);
    out << text;
}

class Manifest {
public:
    Manifest(std::string command, std::string out_dir)
        : command_(std::move(command)), out_dir_(std::move(out_dir)) {}

    void add(const std::string& path) { paths_.push_back(path); }

    void write() {
        json j;
        j["command"] = command_;
        json artifacts = json::array();
        for (const auto& p : paths_) {
            struct stat st {};
            if (::stat(p.c_str(), &st) != 0) raise(errc::io, "manifest artifact missing: " + p);
            json a;
            a["path"] = p;
            a["bytes"] = static_cast<std::int64_t>(st.st_size);
            char digest[32];
            std::snprintf(digest, sizeof(digest), "%016llx",
                          static_cast<unsigned long long>(fnv1a64_file(p)));
            a["fnv1a64"] = digest;
            artifacts.push_back(a);
        }
        j["artifacts"] = artifacts;
        write_text(join_path(out_dir_, command_ + "_manifest.json"), j.dump(2) + "\n");
    }

private:
    std::string command_;
    std::string out_dir_;
    std::vector<std::string> paths_;
};

double store_norm_max(const DatasetStore& store) {
    double best = -std::numeric_limits<double>::infinity();
    const size_t n = static_cast<size_t>(store.meta().rows) * store.meta().cols;
    for (std::int64_t k = 0; k < store.meta().times; ++k) {
        const float* f = store.frame_data(k);
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(f[i])) raise(errc::data, store.path() + " holds non-finite values");
            best = std::max(best, static_cast<double>(f[i]));
        }
    }
    if (!(best > 0.0)) raise(errc::data, store.path() + ": training maximum must be positive");
    return best;
}

ModelSpec model_spec_from_config(const RunConfig& c) {
    ModelSpec spec;
    spec.kind = predictor_kind_from_name(c.training.kind);
    spec.channels = c.training.channels;
    spec.blocks_per_level = c.training.blocks_per_level;
    spec.embed_frequencies = c.training.embed_frequencies;
    return spec;
}

// Post-upsampling baselines need an integer factor; on non-integer grids
// the input is pre-resampled to the nearest integer-factor grid and the
// output bilinearly corrected (a documented baseline-only approximation).
struct UpscalePlan {
    int factor = 1;
    int net_in_rows = 0, net_in_cols = 0;
    bool pre_resample = false;
    bool post_resample = false;
};

UpscalePlan plan_upscale(int lr_rows, int lr_cols, int hr_rows, int hr_cols) {
    UpscalePlan p;
    double ratio = static_cast<double>(hr_rows) / lr_rows;
    p.factor = std::max(1, static_cast<int>(std::lround(ratio)));
    p.net_in_rows = (hr_rows + p.factor - 1) / p.factor;
    p.net_in_cols = (hr_cols + p.factor - 1) / p.factor;
    p.pre_resample = p.net_in_rows != lr_rows || p.net_in_cols != lr_cols;
    p.post_resample = p.net_in_rows * p.factor != hr_rows || p.net_in_cols * p.factor != hr_cols;
    return p;
}

} // namespace

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io, "cannot read " + path);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

void cmd_synth(const RunConfig& config) {
    ensure_dir(config.paths.out_dir);
    SynthResult result = synth_generate(config.synth, join_path(config.paths.out_dir, "synth"));
    Manifest manifest("synth", config.paths.out_dir);
    manifest.add(result.hr_path);
    manifest.add(sidecar_path(result.hr_path));
    manifest.add(result.lr_path);
    manifest.add(sidecar_path(result.lr_path));
    manifest.write();
}

void cmd_train(const RunConfig& config) {
    nn::set_nn_threads(config.threads);
    if (config.paths.lr_store.empty() || config.paths.hr_store.empty())
        raise(errc::invalid_argument, "training needs paths.lr_store and paths.hr_store");
    ensure_dir(config.paths.out_dir);

    DatasetStore lr(config.paths.lr_store);
    DatasetStore hr(config.paths.hr_store);
    // Each dataset is normalized by its own training-split maximum; the
    // fitted values are persisted into the sidecars.
    double norm_lr = store_norm_max(lr);
    double norm_hr = store_norm_max(hr);
    lr.set_norm_max(norm_lr);
    hr.set_norm_max(norm_hr);

    BatchSpec bspec;
    bspec.batch_size = config.training.batch;
    bspec.mode = BatchMode::random;
    bspec.seed = config.training.seed;
    BatchGenerator gen(lr, hr, bspec);

    ModelSpec spec = model_spec_from_config(config);
    if (spec.kind == PredictorKind::bilinear)
        raise(errc::invalid_argument, "bilinear has nothing to train");
    UpscalePlan plan = plan_upscale(lr.meta().rows, lr.meta().cols, hr.meta().rows, hr.meta().cols);
    spec.upscale = plan.factor;

    Predictor<float> model(spec, Rng::mix(config.training.seed, 0x6d6f64656c));
    nn::AdamW<float> opt(model.params());
    Rng rng(Rng::mix(config.training.seed, 0x74726169));

    const std::int64_t steps_per_epoch =
        (gen.valid_windows() + config.training.batch - 1) / config.training.batch;
    TrainOptions topt;
    topt.schedule_steps = config.training.schedule_steps;
    topt.continuous_time = config.training.continuous_time;
    topt.squared_loss = config.training.squared_loss;

    std::ostringstream loss_log;
    loss_log << "epoch,step,loss\n";
    const Grid2D hr_grid = hr.meta().grid();
    const Grid2D lr_grid = lr.meta().grid();

    for (int epoch = 0; epoch < config.training.epochs; ++epoch) {
        double frac = config.training.epochs == 1
                          ? 0.0
                          : static_cast<double>(epoch) / (config.training.epochs - 1);
        topt.lr = config.training.lr_start + frac * (config.training.lr_end - config.training.lr_start);
        topt.weight_decay = config.training.weight_decay_start +
                            frac * (config.training.weight_decay_end - config.training.weight_decay_start);
        double epoch_loss = 0.0;
        for (std::int64_t step = 0; step < steps_per_epoch; ++step) {
            std::vector<SampleWindow> batch = gen.next();
            if (batch.empty()) break;
            double loss;
            if (spec.kind == PredictorKind::diffusion_unet) {
                loss = train_step(model, opt, batch, rng, topt);
            } else {
                const int n = static_cast<int>(batch.size());
                const bool low_res_input = spec.kind != PredictorKind::runet;
                // Post-upsampling baselines on a non-integer factor operate
                // on the nearest integer-factor grid: inputs are bilinearly
                // pre-resampled and the loss is taken on the net's own
                // output grid (the bilinear correction to the exact target
                // grid happens at inference). Baseline-only approximation.
                Grid2D in_grid = low_res_input
                                     ? (plan.pre_resample
                                            ? Grid2D(plan.net_in_rows, plan.net_in_cols, hr_grid.box)
                                            : lr_grid)
                                     : hr_grid;
                Grid2D out_grid = low_res_input && plan.post_resample
                                      ? Grid2D(plan.net_in_rows * plan.factor,
                                               plan.net_in_cols * plan.factor, hr_grid.box)
                                      : hr_grid;
                nn::Tensor4<float> input(n, 4, in_grid.rows, in_grid.cols);
                nn::Tensor4<float> target(n, 1, out_grid.rows, out_grid.cols);
                for (int ni = 0; ni < n; ++ni) {
                    const auto& frames = low_res_input ? batch[ni].raw_lr : batch[ni].conditioning;
                    for (int ci = 0; ci < 4; ++ci) {
                        if (low_res_input && plan.pre_resample) {
                            Field f(lr_grid, Units::normalized);
                            f.values = frames[ci];
                            Field up = bilinear_resample(f, in_grid);
                            std::copy(up.values.begin(), up.values.end(), input.channel(ni, ci));
                        } else {
                            std::copy(frames[ci].begin(), frames[ci].end(), input.channel(ni, ci));
                        }
                    }
                    if (low_res_input && plan.post_resample) {
                        Field t(hr_grid, Units::normalized);
                        t.values = batch[ni].target;
                        Field tt = bilinear_resample(t, out_grid);
                        std::copy(tt.values.begin(), tt.values.end(), target.channel(ni, 0));
                    } else {
                        std::copy(batch[ni].target.begin(), batch[ni].target.end(),
                                  target.channel(ni, 0));
                    }
                }
                loss = regression_train_step(model, opt, input, target, topt.lr, topt.weight_decay);
            }
            epoch_loss += loss;
            loss_log << epoch << "," << step << "," << loss << "\n";
        }
        std::fprintf(stderr, "[train] epoch %d/%d mean loss %.6f\n", epoch + 1,
                     config.training.epochs, epoch_loss / std::max<std::int64_t>(1, steps_per_epoch));
    }

    CheckpointHeader header;
    header.model = spec;
    header.schedule_steps = config.training.schedule_steps;
    header.norm_max_lr = norm_lr;
    header.norm_max_hr = norm_hr;
    header.hr_rows = hr.meta().rows;
    header.hr_cols = hr.meta().cols;
    std::string ckpt_path = config.paths.checkpoint.empty()
                                ? join_path(config.paths.out_dir, "model.ckpt")
                                : config.paths.checkpoint;
    save_checkpoint(ckpt_path, header, model);
    std::string log_path = join_path(config.paths.out_dir, "loss_log.csv");
    write_text(log_path, loss_log.str());

    Manifest manifest("train", config.paths.out_dir);
    manifest.add(ckpt_path);
    manifest.add(log_path);
    manifest.write();
}

namespace {

// Conditioning frames for one anchor: 4 low-res frames normalized by the
// training maximum and bilinearly upsampled to the target grid.
std::vector<std::vector<float>> conditioning_at(const DatasetStore& lr, std::int64_t lr_anchor,
                                                double norm_lr, const Grid2D& hr_grid) {
    std::vector<std::vector<float>> cond;
    const Grid2D lr_grid = lr.meta().grid();
    for (int c = -2; c <= 1; ++c) {
        Field f(lr_grid, Units::normalized);
        const float* src = lr.frame_data(lr_anchor + c);
        for (size_t i = 0; i < f.values.size(); ++i)
            f.values[i] = static_cast<float>(static_cast<double>(src[i]) / norm_lr);
        cond.push_back(bilinear_resample(f, hr_grid).values);
    }
    return cond;
}

} // namespace

void cmd_sample(const RunConfig& config) {
    nn::set_nn_threads(config.threads);
    if (config.paths.checkpoint.empty() || config.paths.lr_store.empty())
        raise(errc::invalid_argument, "sampling needs paths.checkpoint and paths.lr_store");
    ensure_dir(config.paths.out_dir);

    LoadedCheckpoint ckpt = load_checkpoint(config.paths.checkpoint);
    DatasetStore lr(config.paths.lr_store);
    const StoreMeta& lm = lr.meta();
    if (lm.step_hours != 3) raise(errc::invalid_argument, "sampling expects an aligned 3-hourly store");
    if (lm.times < 4) raise(errc::empty, "store too short for any sample window");

    const Grid2D hr_grid(ckpt.header.hr_rows, ckpt.header.hr_cols, lm.geobox);
    const double norm_lr = lm.units == Units::normalized ? 1.0 : ckpt.header.norm_max_lr;

    EnsembleSpec espec;
    espec.members = config.sampling.members;
    espec.steps = config.sampling.steps;
    SampleOptions sopt;
    if (config.sampling.stochastic_sigma) sopt.stochastic_eta = config.sampling.eta;

    // Valid anchors: frames with t-6h..t+3h context inside the store.
    const std::int64_t first_anchor = 2;
    const std::int64_t last_anchor = lm.times - 2;
    const std::int64_t count = last_anchor - first_anchor + 1;
    std::fprintf(stderr, "[sample] %lld windows (skipping 3 boundary frames), %d members x %d steps\n",
                 static_cast<long long>(count), espec.members, espec.steps);

    StoreMeta out_meta;
    out_meta.rows = hr_grid.rows;
    out_meta.cols = hr_grid.cols;
    out_meta.times = count;
    out_meta.geobox = lm.geobox;
    out_meta.t0 = lm.time_of(first_anchor);
    out_meta.step_hours = 3;
    out_meta.units = Units::normalized;
    out_meta.norm_max = ckpt.header.norm_max_hr;

    std::string pred_path = join_path(config.paths.out_dir, "pred.f32grid");
    StoreWriter writer(pred_path, out_meta);
    std::vector<std::unique_ptr<StoreWriter>> member_writers;
    std::vector<std::string> member_paths;
    if (config.sampling.keep_members && ckpt.header.model.kind == PredictorKind::diffusion_unet) {
        for (int m = 0; m < espec.members; ++m) {
            char name[32];
            std::snprintf(name, sizeof(name), "member_%02d.f32grid", m);
            member_paths.push_back(join_path(config.paths.out_dir, name));
            member_writers.push_back(std::make_unique<StoreWriter>(member_paths.back(), out_meta));
        }
    }

    const PredictorKind kind = ckpt.header.model.kind;
    const bool low_res_input = kind == PredictorKind::espcn || kind == PredictorKind::edsr;
    UpscalePlan plan = plan_upscale(lm.rows, lm.cols, hr_grid.rows, hr_grid.cols);
    const Grid2D lr_grid = lm.grid();
    const Grid2D net_in_grid = plan.pre_resample
                                   ? Grid2D(plan.net_in_rows, plan.net_in_cols, lm.geobox)
                                   : lr_grid;

    for (std::int64_t a = first_anchor; a <= last_anchor; ++a) {
        auto cond = conditioning_at(lr, a, norm_lr, hr_grid);
        if (kind == PredictorKind::diffusion_unet) {
            espec.base_seed = Rng::mix(config.sampling.seed, static_cast<std::uint64_t>(a));
            EnsembleResult result = ensemble_sample(ckpt.model, cond, hr_grid.rows, hr_grid.cols,
                                                    espec, config.sampling.keep_members, sopt);
            writer.append(result.mean.data(), result.mean.size());
            for (size_t m = 0; m < member_writers.size(); ++m)
                member_writers[m]->append(result.members[m].data(), result.members[m].size());
            continue;
        }
        // Regression baselines: one deterministic prediction per window.
        nn::Tensor4<float> input(1, 4, low_res_input ? net_in_grid.rows : hr_grid.rows,
                                 low_res_input ? net_in_grid.cols : hr_grid.cols);
        for (int ci = 0; ci < 4; ++ci) {
            if (low_res_input) {
                Field f(lr_grid, Units::normalized);
                const float* src = lr.frame_data(a - 2 + ci);
                for (size_t i = 0; i < f.values.size(); ++i)
                    f.values[i] = static_cast<float>(static_cast<double>(src[i]) / norm_lr);
                if (plan.pre_resample) f = bilinear_resample(f, net_in_grid);
                std::copy(f.values.begin(), f.values.end(), input.channel(0, ci));
            } else {
                std::copy(cond[ci].begin(), cond[ci].end(), input.channel(0, ci));
            }
        }
        nn::Tensor4<float> pred = ckpt.model.predict(input, /*want_grad=*/false);
        if (pred.h != hr_grid.rows || pred.w != hr_grid.cols) {
            // bilinear correction from the integer-factor grid
            Field f(Grid2D(pred.h, pred.w, lm.geobox), Units::normalized);
            std::copy(pred.data.begin(), pred.data.end(), f.values.begin());
            Field fixed = bilinear_resample(f, hr_grid);
            writer.append(fixed.values.data(), fixed.values.size());
        } else {
            writer.append(pred.data.data(), pred.size());
        }
    }
    writer.finish();
    for (auto& w : member_writers) w->finish();

    Manifest manifest("sample", config.paths.out_dir);
    manifest.add(pred_path);
    manifest.add(sidecar_path(pred_path));
    for (const auto& p : member_paths) {
        manifest.add(p);
        manifest.add(sidecar_path(p));
    }
    manifest.write();
}

namespace {

struct EvalInput {
    std::string name;
    FieldSeries series; // normalized, aligned with truth
};

json metrics_json(const FieldSeries& pred, const FieldSeries& truth, const RunConfig& config,
                  std::vector<BatchMetrics>* series_out) {
    std::vector<BatchMetrics> batches = temporal_series(pred, truth, config.metrics.batch_frames);
    double mse_b = 0.0, psnr_b = 0.0, ssim_b = 0.0;
    double mse_g = 0.0, ssim_g = 0.0;
    std::int64_t frames = 0;
    for (const auto& b : batches) {
        mse_b += b.mse;
        psnr_b += b.psnr;
        ssim_b += b.ssim;
        mse_g += b.mse * b.frames;
        ssim_g += b.ssim * b.frames;
        frames += b.frames;
    }
    const double nb = static_cast<double>(batches.size());
    json m;
    m["batches"] = batches.size();
    m["frames"] = frames;
    m["mse_per_batch"] = mse_b / nb;
    m["psnr_per_batch"] = psnr_b / nb;
    m["ssim_per_batch"] = ssim_b / nb;
    m["mse_global"] = mse_g / frames;
    m["psnr_global"] = psnr_from_mse(mse_g / frames);
    m["ssim_global"] = ssim_g / frames;
    const bool per_batch = config.metrics.aggregation == "batch";
    m["mse"] = per_batch ? m["mse_per_batch"] : m["mse_global"];
    m["psnr"] = per_batch ? m["psnr_per_batch"] : m["psnr_global"];
    m["ssim"] = per_batch ? m["ssim_per_batch"] : m["ssim_global"];
    if (series_out) *series_out = std::move(batches);
    return m;
}

std::string series_csv(const std::vector<BatchMetrics>& batches) {
    std::ostringstream out;
    out << "batch,t_start,frames,mse,psnr,ssim\n";
    for (size_t i = 0; i < batches.size(); ++i) {
        const auto& b = batches[i];
        out << i << "," << format_iso8601(b.t_start) << "," << b.frames << "," << b.mse << ","
            << b.psnr << "," << b.ssim << "\n";
    }
    return out.str();
}

std::string map_csv(const Field& map) {
    std::ostringstream out;
    for (int i = 0; i < map.grid.rows; ++i) {
        for (int j = 0; j < map.grid.cols; ++j) {
            if (j) out << ",";
            out << map.at(i, j);
        }
        out << "\n";
    }
    return out.str();
}

// 8-bit PGM on a linear scale; the min/max of the scale goes to a sidecar.
void write_pgm(const std::string& path, const Field& map) {
    float lo = map.values[0], hi = map.values[0];
    for (float v : map.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ostringstream out;
    out << "P5\n" << map.grid.cols << " " << map.grid.rows << "\n255\n";
    double span = hi > lo ? static_cast<double>(hi) - lo : 1.0;
    for (float v : map.values)
        out << static_cast<char>(static_cast<int>(std::lround((v - lo) / span * 255.0)));
    write_text(path, out.str());
    json side;
    side["min"] = lo;
    side["max"] = hi;
    side["rows"] = map.grid.rows;
    side["cols"] = map.grid.cols;
    write_text(path + ".json", side.dump(2) + "\n");
}

} // namespace

void cmd_evaluate(const RunConfig& config) {
    nn::set_nn_threads(config.threads);
    if (config.paths.truth_store.empty())
        raise(errc::invalid_argument, "evaluation needs paths.truth_store");
    ensure_dir(config.paths.out_dir);

    DatasetStore truth_store(config.paths.truth_store);

    // Normalization for scoring: predictions carry the training-split
    // high-res maximum in their sidecar; the truth (and the bilinear
    // baseline) are scaled by the same value so all series share units.
    std::optional<double> norm_hr;
    std::vector<std::pair<std::string, std::unique_ptr<DatasetStore>>> pred_stores;
    for (const auto& [name, path] : config.paths.pred_stores) {
        auto store = std::make_unique<DatasetStore>(path);
        if (store->meta().norm_max && !norm_hr) norm_hr = store->meta().norm_max;
        pred_stores.emplace_back(name, std::move(store));
    }
    if (!norm_hr) norm_hr = truth_store.meta().norm_max;
    if (!norm_hr && truth_store.meta().units == Units::normalized) norm_hr = 1.0;
    if (!norm_hr)
        raise(errc::invalid_argument,
              "no normalization maximum available (expected in a prediction or truth sidecar)");

    // Evaluation window: the intersection of all series' time ranges.
    UtcTime lo = truth_store.meta().t0;
    UtcTime hi = truth_store.meta().time_of(truth_store.meta().times - 1);
    for (const auto& [name, store] : pred_stores) {
        lo = std::max(lo, store->meta().t0);
        hi = std::min(hi, store->meta().time_of(store->meta().times - 1));
    }
    std::unique_ptr<DatasetStore> lr_store;
    if (!config.paths.lr_store.empty()) {
        lr_store = std::make_unique<DatasetStore>(config.paths.lr_store);
        lo = std::max(lo, lr_store->meta().t0);
        hi = std::min(hi, lr_store->meta().time_of(lr_store->meta().times - 1));
    }
    if (lo > hi) raise(errc::alignment, "stores share no evaluation window");

    auto slice_series = [&](const DatasetStore& store, double scale) {
        FieldSeries s;
        s.grid = store.meta().grid();
        s.units = Units::normalized;
        s.step_hours = 3;
        s.t0 = lo;
        for (UtcTime t = lo; t <= hi; t += 3 * 3600) {
            std::int64_t span = t - store.meta().t0;
            std::int64_t k = span / (3 * 3600);
            if (span % (3 * 3600) != 0 || k < 0 || k >= store.meta().times)
                raise(errc::alignment, store.path() + " missing frame at " + format_iso8601(t));
            const float* src = store.frame_data(k);
            std::vector<float> frame(src, src + static_cast<size_t>(s.grid.cell_count()));
            if (scale != 1.0)
                for (float& v : frame) v = static_cast<float>(v * scale);
            s.frames.push_back(std::move(frame));
        }
        return s;
    };

    const double truth_scale =
        truth_store.meta().units == Units::normalized ? 1.0 : 1.0 / *norm_hr;
    FieldSeries truth = slice_series(truth_store, truth_scale);

    std::vector<EvalInput> inputs;
    if (lr_store) {
        // The bilinear baseline resamples the raw low-res series (m/s) and
        // normalizes by the same high-res maximum as the truth.
        FieldSeries lr_series = slice_series(*lr_store, 1.0);
        double lr_scale = lr_store->meta().units == Units::normalized
                              ? lr_store->meta().norm_max.value_or(1.0) / *norm_hr
                              : 1.0 / *norm_hr;
        EvalInput bil;
        bil.name = "bilinear";
        bil.series.grid = truth.grid;
        bil.series.units = Units::normalized;
        bil.series.step_hours = 3;
        bil.series.t0 = lo;
        for (size_t k = 0; k < lr_series.size(); ++k) {
            Field up = bilinear_resample(lr_series.field_at(k), truth.grid);
            for (float& v : up.values) v = static_cast<float>(v * lr_scale);
            bil.series.frames.push_back(std::move(up.values));
        }
        inputs.push_back(std::move(bil));
    }
    for (const auto& [name, store] : pred_stores) {
        EvalInput in;
        in.name = name;
        in.series = slice_series(*store, 1.0);
        if (!(in.series.grid == truth.grid))
            raise(errc::extent, name + " and truth are on different grids");
        inputs.push_back(std::move(in));
    }
    if (inputs.empty()) raise(errc::invalid_argument, "nothing to evaluate");

    Manifest manifest("evaluate", config.paths.out_dir);
    json report;
    report["aggregation"] = config.metrics.aggregation;
    report["batch_frames"] = config.metrics.batch_frames;
    report["note"] =
        "psnr_per_batch averages the PSNR of each batch; psnr_global applies the peak-signal "
        "formula to the MSE pooled over all frames. The two differ whenever the error varies "
        "between batches: for example, a pooled MSE of 1.02e-03 corresponds to a global PSNR of "
        "29.91 dB, while per-batch averaging over the same frames can report 30.32 dB. Headline "
        "mse/psnr/ssim fields follow the configured aggregation.";
    json models = json::object();

    std::ostringstream table_csv;
    table_csv << "Model,MSE,PSNR,SSIM\n";
    for (auto& in : inputs) {
        std::vector<BatchMetrics> batches;
        json m = metrics_json(in.series, truth, config, &batches);
        models[in.name] = m;
        table_csv << in.name << "," << m["mse"].get<double>() << "," << m["psnr"].get<double>()
                  << "," << m["ssim"].get<double>() << "\n";
        if (config.metrics.series) {
            std::string path = join_path(config.paths.out_dir, in.name + "_series.csv");
            write_text(path, series_csv(batches));
            manifest.add(path);
        }
        if (config.metrics.maps) {
            Field map = mean_ssim_map(in.series, truth);
            std::string csv_path = join_path(config.paths.out_dir, in.name + "_mean_ssim_map.csv");
            write_text(csv_path, map_csv(map));
            manifest.add(csv_path);
            std::string pgm_path = join_path(config.paths.out_dir, in.name + "_mean_ssim_map.pgm");
            write_pgm(pgm_path, map);
            manifest.add(pgm_path);
            manifest.add(pgm_path + ".json");
        }
    }

    // Per-member error when a kept ensemble is supplied.
    if (!config.paths.member_stores.empty()) {
        json member_mse = json::array();
        std::vector<double> values;
        for (const auto& path : config.paths.member_stores) {
            DatasetStore member(path);
            FieldSeries ms = slice_series(member, 1.0);
            double acc = 0.0;
            for (size_t k = 0; k < ms.size(); ++k) acc += mse(ms.frames[k], truth.frames[k]);
            double v = acc / static_cast<double>(ms.size());
            member_mse.push_back(v);
            values.push_back(v);
        }
        std::sort(values.begin(), values.end());
        report["member_mse"] = member_mse;
        report["member_mse_median"] = values.size() % 2 == 1
                                          ? values[values.size() / 2]
                                          : 0.5 * (values[values.size() / 2 - 1] + values[values.size() / 2]);
    }

    report["models"] = models;
    std::string report_path = join_path(config.paths.out_dir, "evaluate_report.json");
    write_text(report_path, report.dump(2) + "\n");
    std::string csv_path = join_path(config.paths.out_dir, "evaluate_report.csv");
    write_text(csv_path, table_csv.str());
    manifest.add(report_path);
    manifest.add(csv_path);
    manifest.write();
}

void cmd_validate(const RunConfig& config) {
    if (config.validation.station_file.empty())
        raise(errc::invalid_argument, "validation needs validation.station_file");
    if (config.validation.products.empty())
        raise(errc::invalid_argument, "validation needs at least one product store");
    ensure_dir(config.paths.out_dir);

    ParseReport parsed = parse_observations(config.validation.station_file);
    std::vector<StationObservation> obs = collapse_hour(
        filter_slots(select_surface(parsed.records), config.validation.slot_minutes));

    ExtractMethod method = config.validation.extract == "bilinear" ? ExtractMethod::bilinear
                                                                   : ExtractMethod::nearest;
    std::vector<std::unique_ptr<DatasetStore>> stores;
    std::vector<FieldSeries> series;
    std::vector<Product> products;
    for (const auto& [name, path] : config.validation.products) {
        stores.push_back(std::make_unique<DatasetStore>(path));
        series.push_back(stores.back()->read_series());
    }
    for (size_t i = 0; i < series.size(); ++i) {
        Product p;
        p.name = config.validation.products[i].first;
        p.series = &series[i];
        p.method = method;
        if (stores[i]->meta().units == Units::normalized)
            p.denorm = stores[i]->meta().norm_max.value_or(1.0);
        products.push_back(p);
    }

    ValidationSet set = build_validation_set(obs, products);
    std::vector<ScoreRow> rows = score(set);

    json report;
    report["observations_used"] = set.records.size();
    report["observations_dropped"] = set.dropped;
    report["rows_rejected_by_parser"] = parsed.rejected;
    json table = json::array();
    for (const auto& r : rows) {
        json row;
        row["model"] = r.model;
        row["mae"] = r.mae;
        row["mse"] = r.mse;
        table.push_back(row);
    }
    report["scores"] = table;

    std::string json_path = join_path(config.paths.out_dir, "validate_report.json");
    write_text(json_path, report.dump(2) + "\n");
    std::string csv_path = join_path(config.paths.out_dir, "validate_report.csv");
    write_text(csv_path, score_table_csv(rows));

    Manifest manifest("validate", config.paths.out_dir);
    manifest.add(json_path);
    manifest.add(csv_path);
    manifest.write();
}

} // namespace windsr
