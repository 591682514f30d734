#include "windsr.h"

#include <cstring>
#include <string>

#include "windsr/checkpoint.hpp"
#include "windsr/commands.hpp"
#include "windsr/config.hpp"
#include "windsr/ensemble.hpp"
#include "windsr/metrics.hpp"
#include "windsr/store.hpp"

namespace {

thread_local std::string g_last_error;

windsr_status status_from_errc(windsr::errc code) {
    switch (code) {
        case windsr::errc::invalid_argument: return WINDSR_ERR_INVALID_ARGUMENT;
        case windsr::errc::extent: return WINDSR_ERR_EXTENT;
        case windsr::errc::shape: return WINDSR_ERR_SHAPE;
        case windsr::errc::kernel: return WINDSR_ERR_KERNEL;
        case windsr::errc::alignment: return WINDSR_ERR_ALIGNMENT;
        case windsr::errc::boundary: return WINDSR_ERR_BOUNDARY;
        case windsr::errc::io: return WINDSR_ERR_IO;
        case windsr::errc::data: return WINDSR_ERR_DATA;
        case windsr::errc::schedule: return WINDSR_ERR_SCHEDULE;
        case windsr::errc::singularity: return WINDSR_ERR_SINGULARITY;
        case windsr::errc::numeric: return WINDSR_ERR_NUMERIC;
        case windsr::errc::empty: return WINDSR_ERR_EMPTY;
    }
    return WINDSR_ERR_INTERNAL;
}

template <typename F>
windsr_status guarded(F&& fn) {
    try {
        fn();
        g_last_error.clear();
        return WINDSR_OK;
    } catch (const windsr::Error& e) {
        g_last_error = e.what();
        return status_from_errc(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return WINDSR_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return WINDSR_ERR_INTERNAL;
    }
}

windsr_status run_command(const char* config_json, void (*command)(const windsr::RunConfig&)) {
    return guarded([&] {
        if (!config_json) windsr::raise(windsr::errc::invalid_argument, "config JSON is null");
        windsr::RunConfig config = windsr::run_config_from_json(config_json);
        command(config);
    });
}

} // namespace

struct windsr_store {
    windsr::DatasetStore impl;
    explicit windsr_store(const char* path) : impl(path) {}
};

struct windsr_model {
    windsr::LoadedCheckpoint impl;
    std::string header_json;
};

extern "C" {

const char* windsr_version(void) { return "0.1.0"; }

const char* windsr_last_error(void) { return g_last_error.c_str(); }

int windsr_status_is_numeric(windsr_status status) {
    return status == WINDSR_ERR_NUMERIC || status == WINDSR_ERR_SINGULARITY ? 1 : 0;
}

windsr_status windsr_cmd_synth(const char* config_json) {
    return run_command(config_json, &windsr::cmd_synth);
}
windsr_status windsr_cmd_train(const char* config_json) {
    return run_command(config_json, &windsr::cmd_train);
}
windsr_status windsr_cmd_sample(const char* config_json) {
    return run_command(config_json, &windsr::cmd_sample);
}
windsr_status windsr_cmd_evaluate(const char* config_json) {
    return run_command(config_json, &windsr::cmd_evaluate);
}
windsr_status windsr_cmd_validate(const char* config_json) {
    return run_command(config_json, &windsr::cmd_validate);
}

windsr_status windsr_store_open(const char* path, windsr_store** out) {
    return guarded([&] {
        if (!path || !out) windsr::raise(windsr::errc::invalid_argument, "null argument");
        *out = new windsr_store(path);
    });
}

void windsr_store_close(windsr_store* store) { delete store; }

windsr_status windsr_store_info_get(const windsr_store* store, windsr_store_info* out) {
    return guarded([&] {
        if (!store || !out) windsr::raise(windsr::errc::invalid_argument, "null argument");
        const windsr::StoreMeta& m = store->impl.meta();
        out->rows = m.rows;
        out->cols = m.cols;
        out->times = m.times;
        out->north = m.geobox.north;
        out->south = m.geobox.south;
        out->east = m.geobox.east;
        out->west = m.geobox.west;
        out->t0_epoch_seconds = m.t0;
        out->step_hours = m.step_hours;
        out->normalized = m.units == windsr::Units::normalized ? 1 : 0;
        out->norm_max = m.norm_max.value_or(-1.0);
    });
}

windsr_status windsr_store_read(const windsr_store* store, int64_t index, float* buffer,
                                size_t buffer_len) {
    return guarded([&] {
        if (!store || !buffer) windsr::raise(windsr::errc::invalid_argument, "null argument");
        const windsr::StoreMeta& m = store->impl.meta();
        size_t need = static_cast<size_t>(m.rows) * m.cols;
        if (buffer_len < need)
            windsr::raise(windsr::errc::shape, "buffer too small for one frame");
        std::memcpy(buffer, store->impl.frame_data(index), need * sizeof(float));
    });
}

windsr_status windsr_model_open(const char* checkpoint_path, windsr_model** out) {
    return guarded([&] {
        if (!checkpoint_path || !out) windsr::raise(windsr::errc::invalid_argument, "null argument");
        auto* model = new windsr_model{windsr::load_checkpoint(checkpoint_path), ""};
        model->header_json = model->impl.header.to_json();
        *out = model;
    });
}

void windsr_model_close(windsr_model* model) { delete model; }

windsr_status windsr_model_header_json(const windsr_model* model, const char** out) {
    return guarded([&] {
        if (!model || !out) windsr::raise(windsr::errc::invalid_argument, "null argument");
        *out = model->header_json.c_str();
    });
}

windsr_status windsr_ensemble_sample(windsr_model* model, const float* conditioning, int32_t rows,
                                     int32_t cols, int32_t members, int32_t steps,
                                     uint64_t base_seed, float* out_mean) {
    return guarded([&] {
        if (!model || !conditioning || !out_mean)
            windsr::raise(windsr::errc::invalid_argument, "null argument");
        const size_t plane = static_cast<size_t>(rows) * cols;
        std::vector<std::vector<float>> cond(4);
        for (int c = 0; c < 4; ++c)
            cond[c].assign(conditioning + c * plane, conditioning + (c + 1) * plane);
        windsr::EnsembleSpec spec;
        spec.members = members;
        spec.steps = steps;
        spec.base_seed = base_seed;
        windsr::EnsembleResult result =
            windsr::ensemble_sample(model->impl.model, cond, rows, cols, spec);
        std::memcpy(out_mean, result.mean.data(), plane * sizeof(float));
    });
}

windsr_status windsr_mse(const float* pred, const float* truth, size_t count, double* out) {
    return guarded([&] {
        if (!pred || !truth || !out) windsr::raise(windsr::errc::invalid_argument, "null argument");
        *out = windsr::mse({pred, count}, {truth, count});
    });
}

windsr_status windsr_psnr(const float* pred, const float* truth, size_t count, double* out) {
    return guarded([&] {
        if (!pred || !truth || !out) windsr::raise(windsr::errc::invalid_argument, "null argument");
        *out = windsr::psnr({pred, count}, {truth, count});
    });
}

windsr_status windsr_ssim(const float* pred, const float* truth, int32_t rows, int32_t cols,
                          double* out) {
    return guarded([&] {
        if (!pred || !truth || !out) windsr::raise(windsr::errc::invalid_argument, "null argument");
        windsr::GeoBox box{1.0, 0.0, 1.0, 0.0};
        windsr::Grid2D grid(rows, cols, box);
        windsr::Field a(grid, windsr::Units::normalized);
        windsr::Field b(grid, windsr::Units::normalized);
        std::memcpy(a.values.data(), pred, a.values.size() * sizeof(float));
        std::memcpy(b.values.data(), truth, b.values.size() * sizeof(float));
        *out = windsr::ssim(a, b);
    });
}

} // extern "C"
