#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "windsr/commands.hpp"

// End-to-end checks of the installed binary: flag handling, exit codes,
// artifact layout. WINDSR_CLI_PATH is injected by the build.

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(WINDSR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

bool file_exists(const std::string& path) {
    std::ifstream in(path);
    return in.good();
}

} // namespace

TEST_CASE("synth subcommand: bare synth config, sidecar shapes, idempotence") {
    write_file("/tmp/windsr_cli_synth.json",
               R"({"hr_rows":16,"hr_cols":16,"frames":6,
                   "kernel":{"type":"gaussian","sigma":0.8},
                   "scale":4,"noise_sigma":0.01,"seed":9})");
    CHECK(run_cli("synth --config /tmp/windsr_cli_synth.json --out /tmp/windsr_cli_a") == 0);
    CHECK(file_exists("/tmp/windsr_cli_a/synth_hr.f32grid"));
    CHECK(file_exists("/tmp/windsr_cli_a/synth_lr.json"));
    CHECK(file_exists("/tmp/windsr_cli_a/synth_manifest.json"));

    // identical config and seed give identical file hashes
    CHECK(run_cli("synth --config /tmp/windsr_cli_synth.json --out /tmp/windsr_cli_b") == 0);
    CHECK(windsr::fnv1a64_file("/tmp/windsr_cli_a/synth_hr.f32grid") ==
          windsr::fnv1a64_file("/tmp/windsr_cli_b/synth_hr.f32grid"));
    CHECK(windsr::fnv1a64_file("/tmp/windsr_cli_a/synth_lr.f32grid") ==
          windsr::fnv1a64_file("/tmp/windsr_cli_b/synth_lr.f32grid"));

    // sidecars report the decimated grid
    std::ifstream side("/tmp/windsr_cli_a/synth_lr.json");
    std::stringstream buf;
    buf << side.rdbuf();
    CHECK(buf.str().find("\"rows\": 4") != std::string::npos);

    // a different seed changes the data
    CHECK(run_cli("synth --config /tmp/windsr_cli_synth.json --seed 10 --out /tmp/windsr_cli_c") == 0);
    CHECK(windsr::fnv1a64_file("/tmp/windsr_cli_a/synth_hr.f32grid") !=
          windsr::fnv1a64_file("/tmp/windsr_cli_c/synth_hr.f32grid"));
}

TEST_CASE("exit codes: 2 for input problems, parses --set overrides") {
    CHECK(run_cli("synth --config /nonexistent.json --out /tmp/x") == 2);
    CHECK(run_cli("train --out /tmp/x") == 2); // missing stores
    write_file("/tmp/windsr_cli_bad.json", R"({"hr_rows":16})");
    CHECK(run_cli("synth --config /tmp/windsr_cli_bad.json --out /tmp/x") == 2);

    // --set plumbs dotted overrides into the config
    write_file("/tmp/windsr_cli_synth2.json",
               R"({"hr_rows":16,"hr_cols":16,"frames":6,
                   "kernel":{"type":"gaussian","sigma":0.8},
                   "scale":4,"noise_sigma":0.01,"seed":9})");
    CHECK(run_cli("synth --config /tmp/windsr_cli_synth2.json --set synth.frames=3 "
                  "--out /tmp/windsr_cli_set") == 0);
    std::ifstream side("/tmp/windsr_cli_set/synth_hr.json");
    std::stringstream buf;
    buf << side.rdbuf();
    CHECK(buf.str().find("\"times\": 3") != std::string::npos);
}

TEST_CASE("smoke pipeline: train one epoch, sample, evaluate, reports in place") {
    write_file("/tmp/windsr_cli_pipe_synth.json",
               R"({"hr_rows":16,"hr_cols":16,"frames":14,
                   "kernel":{"type":"gaussian","sigma":0.8},
                   "scale":4,"noise_sigma":0.01,"seed":11})");
    REQUIRE(run_cli("synth --config /tmp/windsr_cli_pipe_synth.json --out /tmp/windsr_cli_pipe") == 0);

    write_file("/tmp/windsr_cli_pipe_run.json", R"({
        "paths": {"lr_store": "/tmp/windsr_cli_pipe/synth_lr",
                   "hr_store": "/tmp/windsr_cli_pipe/synth_hr",
                   "truth_store": "/tmp/windsr_cli_pipe/synth_hr",
                   "checkpoint": "/tmp/windsr_cli_pipe/model.ckpt",
                   "pred_stores": {"ensemble_diffusion": "/tmp/windsr_cli_pipe/pred"}},
        "training": {"epochs": 1, "batch": 4, "seed": 1, "channels": [4, 8, 12, 16]},
        "sampling": {"members": 2, "steps": 2, "seed": 1},
        "metrics": {"batch_frames": 4}
    })");
    REQUIRE(run_cli("train --config /tmp/windsr_cli_pipe_run.json --out /tmp/windsr_cli_pipe") == 0);
    CHECK(file_exists("/tmp/windsr_cli_pipe/model.ckpt"));
    CHECK(file_exists("/tmp/windsr_cli_pipe/loss_log.csv"));

    // loss log is finite and well-formed
    std::ifstream log("/tmp/windsr_cli_pipe/loss_log.csv");
    std::string header;
    std::getline(log, header);
    CHECK(header == "epoch,step,loss");
    std::string row;
    int rows = 0;
    while (std::getline(log, row)) {
        CHECK(row.find("nan") == std::string::npos);
        ++rows;
    }
    CHECK(rows >= 1);

    REQUIRE(run_cli("sample --config /tmp/windsr_cli_pipe_run.json --out /tmp/windsr_cli_pipe") == 0);
    CHECK(file_exists("/tmp/windsr_cli_pipe/pred.f32grid"));

    // prediction store: 14 frames minus 3 boundary windows
    std::ifstream pside("/tmp/windsr_cli_pipe/pred.json");
    std::stringstream pbuf;
    pbuf << pside.rdbuf();
    CHECK(pbuf.str().find("\"times\": 11") != std::string::npos);
    CHECK(pbuf.str().find("\"units\": \"normalized\"") != std::string::npos);

    REQUIRE(run_cli("evaluate --config /tmp/windsr_cli_pipe_run.json --out /tmp/windsr_cli_pipe") == 0);
    CHECK(file_exists("/tmp/windsr_cli_pipe/evaluate_report.json"));
    CHECK(file_exists("/tmp/windsr_cli_pipe/evaluate_report.csv"));
    CHECK(file_exists("/tmp/windsr_cli_pipe/bilinear_series.csv"));
    CHECK(file_exists("/tmp/windsr_cli_pipe/ensemble_diffusion_mean_ssim_map.pgm"));

    // the report carries both aggregations and the disclosure note
    std::ifstream rep("/tmp/windsr_cli_pipe/evaluate_report.json");
    std::stringstream rbuf;
    rbuf << rep.rdbuf();
    CHECK(rbuf.str().find("psnr_per_batch") != std::string::npos);
    CHECK(rbuf.str().find("psnr_global") != std::string::npos);
    CHECK(rbuf.str().find("29.91") != std::string::npos);
    CHECK(rbuf.str().find("30.32") != std::string::npos);

    // sampling twice with one seed is byte-identical
    REQUIRE(run_cli("sample --config /tmp/windsr_cli_pipe_run.json --out /tmp/windsr_cli_pipe2") == 0);
    CHECK(windsr::fnv1a64_file("/tmp/windsr_cli_pipe/pred.f32grid") ==
          windsr::fnv1a64_file("/tmp/windsr_cli_pipe2/pred.f32grid"));

    // missing checkpoint is an input error
    write_file("/tmp/windsr_cli_nockpt.json", R"({
        "paths": {"lr_store": "/tmp/windsr_cli_pipe/synth_lr",
                   "checkpoint": "/tmp/windsr_cli_pipe/missing.ckpt"}})");
    CHECK(run_cli("sample --config /tmp/windsr_cli_nockpt.json --out /tmp/windsr_cli_pipe") == 2);
}

TEST_CASE("regression baselines train and sample through the same pipeline") {
    write_file("/tmp/windsr_cli_base_synth.json",
               R"({"hr_rows":16,"hr_cols":16,"frames":14,
                   "kernel":{"type":"gaussian","sigma":0.8},
                   "scale":4,"noise_sigma":0.0,"seed":31})");
    REQUIRE(run_cli("synth --config /tmp/windsr_cli_base_synth.json --out /tmp/windsr_cli_base") == 0);

    for (std::string kind : {"espcn", "edsr", "runet"}) {
        write_file("/tmp/windsr_cli_base_run.json", R"({
            "paths": {"lr_store": "/tmp/windsr_cli_base/synth_lr",
                       "hr_store": "/tmp/windsr_cli_base/synth_hr",
                       "checkpoint": "/tmp/windsr_cli_base/)" + kind + R"(.ckpt"},
            "training": {"epochs": 1, "batch": 4, "seed": 2, "kind": ")" + kind + R"(",
                          "channels": [4, 8, 12, 16]}
        })");
        CHECK(run_cli("train --config /tmp/windsr_cli_base_run.json --out /tmp/windsr_cli_base") == 0);
        CHECK(run_cli("sample --config /tmp/windsr_cli_base_run.json --out /tmp/windsr_cli_base/" +
                      kind) == 0);
        CHECK(file_exists("/tmp/windsr_cli_base/" + kind + "/pred.f32grid"));
    }

    // non-integer factor (16x16 hr over 5x5 lr): post-upsampling baselines
    // run on the nearest integer-factor grid with bilinear correction
    write_file("/tmp/windsr_cli_ni_synth.json",
               R"({"hr_rows":17,"hr_cols":17,"frames":14,
                   "kernel":{"type":"gaussian","sigma":0.8},
                   "scale":4,"noise_sigma":0.0,"seed":32})");
    REQUIRE(run_cli("synth --config /tmp/windsr_cli_ni_synth.json --out /tmp/windsr_cli_ni") == 0);
    write_file("/tmp/windsr_cli_ni_run.json", R"({
        "paths": {"lr_store": "/tmp/windsr_cli_ni/synth_lr",
                   "hr_store": "/tmp/windsr_cli_ni/synth_hr",
                   "checkpoint": "/tmp/windsr_cli_ni/espcn.ckpt"},
        "training": {"epochs": 1, "batch": 4, "seed": 2, "kind": "espcn",
                      "channels": [4, 8, 12, 16]}
    })");
    CHECK(run_cli("train --config /tmp/windsr_cli_ni_run.json --out /tmp/windsr_cli_ni") == 0);
    CHECK(run_cli("sample --config /tmp/windsr_cli_ni_run.json --out /tmp/windsr_cli_ni/out") == 0);
    // prediction lands on the exact 17x17 target grid despite the 4x net
    std::ifstream side("/tmp/windsr_cli_ni/out/pred.json");
    std::stringstream buf;
    buf << side.rdbuf();
    CHECK(buf.str().find("\"rows\": 17") != std::string::npos);
}

TEST_CASE("validate subcommand scores products against a station fixture") {
    write_file("/tmp/windsr_cli_val_synth.json",
               R"({"hr_rows":16,"hr_cols":16,"frames":10,
                   "kernel":{"type":"gaussian","sigma":0.8},
                   "scale":4,"noise_sigma":0.0,"seed":21})");
    REQUIRE(run_cli("synth --config /tmp/windsr_cli_val_synth.json --out /tmp/windsr_cli_val") == 0);

    // stations inside the default study area; timestamps at 00 and 12 UTC
    // slots on the first synthetic day (t0 = 2021-01-01T00:00:00Z)
    write_file("/tmp/windsr_cli_val/stations.csv",
               "station_id,lat,lon,timestamp_iso,pressure_hpa,wind_ms\n"
               "S1,41.0,12.0,2021-01-01T11:31:00Z,1001,5.0\n"
               "S1,41.0,12.0,2021-01-01T11:31:00Z,925,9.0\n"
               "S2,43.5,9.0,2021-01-01T23:55:00Z,1012,3.5\n"
               "S3,39.0,16.0,2021-01-01T06:00:00Z,1000,4.0\n");
    write_file("/tmp/windsr_cli_val_run.json", R"({
        "validation": {"station_file": "/tmp/windsr_cli_val/stations.csv",
                        "products": [
                          {"name": "hr", "store": "/tmp/windsr_cli_val/synth_hr"},
                          {"name": "lr", "store": "/tmp/windsr_cli_val/synth_lr"}]}
    })");
    REQUIRE(run_cli("validate --config /tmp/windsr_cli_val_run.json --out /tmp/windsr_cli_val") == 0);
    std::ifstream csv("/tmp/windsr_cli_val/validate_report.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "Model,MAE,MSE");
    std::string row1, row2;
    std::getline(csv, row1);
    std::getline(csv, row2);
    CHECK(row1.rfind("hr,", 0) == 0);
    CHECK(row2.rfind("lr,", 0) == 0);

    // self-scoring: a product against observations drawn from itself is zero
    // (covered at unit level; here just assert the json reports drop counts)
    std::ifstream rep("/tmp/windsr_cli_val/validate_report.json");
    std::stringstream rbuf;
    rbuf << rep.rdbuf();
    CHECK(rbuf.str().find("observations_dropped") != std::string::npos);
}
