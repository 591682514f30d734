#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "windsr.h"
#include "windsr/datapipe.hpp"
#include "windsr/metrics.hpp"

// The C surface is exercised exactly as an external consumer would use it:
// status codes, opaque handles, buffer copies.

TEST_CASE("version and error text are always available") {
    CHECK(std::string(windsr_version()).size() > 0);
    CHECK(windsr_last_error() != nullptr);
}

TEST_CASE("store handles: open, info, frame reads, failure codes") {
    // build a tiny store through the C++ core, read it back through C
    windsr::SynthConfig cfg;
    cfg.hr_rows = 16;
    cfg.hr_cols = 16;
    cfg.frames = 5;
    cfg.scale = 4;
    cfg.kernel_sigma = 0.8;
    cfg.seed = 2;
    windsr::SynthResult paths = windsr::synth_generate(cfg, "/tmp/windsr_capi");

    windsr_store* store = nullptr;
    REQUIRE(windsr_store_open(paths.hr_path.c_str(), &store) == WINDSR_OK);
    windsr_store_info info{};
    REQUIRE(windsr_store_info_get(store, &info) == WINDSR_OK);
    CHECK(info.rows == 16);
    CHECK(info.cols == 16);
    CHECK(info.times == 5);
    CHECK(info.step_hours == 3);
    CHECK(info.normalized == 0);
    CHECK(info.norm_max <= 0.0); // unfitted

    std::vector<float> frame(16 * 16);
    CHECK(windsr_store_read(store, 0, frame.data(), frame.size()) == WINDSR_OK);
    CHECK(windsr_store_read(store, 99, frame.data(), frame.size()) ==
          WINDSR_ERR_INVALID_ARGUMENT);
    CHECK(std::string(windsr_last_error()).find("range") != std::string::npos);
    std::vector<float> tiny(4);
    CHECK(windsr_store_read(store, 0, tiny.data(), tiny.size()) == WINDSR_ERR_SHAPE);
    windsr_store_close(store);

    windsr_store* missing = nullptr;
    CHECK(windsr_store_open("/nonexistent/store", &missing) == WINDSR_ERR_IO);
}

TEST_CASE("metric helpers wrap the core implementations") {
    std::vector<float> a(256, 0.5f), b(256, 0.4f);
    double out = 0.0;
    REQUIRE(windsr_mse(a.data(), b.data(), a.size(), &out) == WINDSR_OK);
    CHECK(out == doctest::Approx(0.01).epsilon(1e-4));
    REQUIRE(windsr_psnr(a.data(), b.data(), a.size(), &out) == WINDSR_OK);
    CHECK(out == doctest::Approx(20.0).epsilon(1e-3));
    REQUIRE(windsr_ssim(a.data(), b.data(), 16, 16, &out) == WINDSR_OK);
    CHECK(out < 1.0);
    CHECK(windsr_mse(nullptr, b.data(), a.size(), &out) == WINDSR_ERR_INVALID_ARGUMENT);
}

TEST_CASE("numeric-status classification backs the CLI exit codes") {
    CHECK(windsr_status_is_numeric(WINDSR_ERR_NUMERIC) == 1);
    CHECK(windsr_status_is_numeric(WINDSR_ERR_SINGULARITY) == 1);
    CHECK(windsr_status_is_numeric(WINDSR_ERR_IO) == 0);
    CHECK(windsr_status_is_numeric(WINDSR_OK) == 0);
}

TEST_CASE("cmd_synth through the C API writes stores and a manifest") {
    std::string config = R"({
      "paths": {"out_dir": "/tmp/windsr_capi_synth"},
      "synth": {"hr_rows": 16, "hr_cols": 16, "frames": 6,
                 "kernel": {"type": "gaussian", "sigma": 0.8},
                 "scale": 4, "noise_sigma": 0.01, "seed": 5}
    })";
    REQUIRE(windsr_cmd_synth(config.c_str()) == WINDSR_OK);
    windsr_store* store = nullptr;
    REQUIRE(windsr_store_open("/tmp/windsr_capi_synth/synth_lr.f32grid", &store) == WINDSR_OK);
    windsr_store_info info{};
    windsr_store_info_get(store, &info);
    CHECK(info.rows == 4); // 16x16 at scale 4
    windsr_store_close(store);

    CHECK(windsr_cmd_synth("{not json") == WINDSR_ERR_INVALID_ARGUMENT);
    CHECK(windsr_cmd_synth(nullptr) == WINDSR_ERR_INVALID_ARGUMENT);
}

TEST_CASE("model handle round trip after a smoke train") {
    // one-epoch smoke training on a tiny synthetic pair
    std::string synth = R"({
      "paths": {"out_dir": "/tmp/windsr_capi_train"},
      "synth": {"hr_rows": 16, "hr_cols": 16, "frames": 12,
                 "kernel": {"type": "gaussian", "sigma": 0.8},
                 "scale": 4, "noise_sigma": 0.01, "seed": 6}
    })";
    REQUIRE(windsr_cmd_synth(synth.c_str()) == WINDSR_OK);
    std::string train = R"({
      "paths": {"lr_store": "/tmp/windsr_capi_train/synth_lr",
                 "hr_store": "/tmp/windsr_capi_train/synth_hr",
                 "out_dir": "/tmp/windsr_capi_train"},
      "training": {"epochs": 1, "batch": 4, "seed": 3,
                    "channels": [4, 8, 12, 16]}
    })";
    REQUIRE(windsr_cmd_train(train.c_str()) == WINDSR_OK);

    windsr_model* model = nullptr;
    REQUIRE(windsr_model_open("/tmp/windsr_capi_train/model.ckpt", &model) == WINDSR_OK);
    const char* header = nullptr;
    REQUIRE(windsr_model_header_json(model, &header) == WINDSR_OK);
    CHECK(std::string(header).find("diffusion_unet") != std::string::npos);

    // one ensemble-sampled window through the C buffer interface
    std::vector<float> cond(4 * 16 * 16, 0.4f);
    std::vector<float> mean(16 * 16);
    REQUIRE(windsr_ensemble_sample(model, cond.data(), 16, 16, 3, 5, 17, mean.data()) == WINDSR_OK);
    for (float v : mean) CHECK(std::isfinite(v));
    windsr_model_close(model);

    windsr_model* missing = nullptr;
    CHECK(windsr_model_open("/nonexistent.ckpt", &missing) == WINDSR_ERR_IO);
}
