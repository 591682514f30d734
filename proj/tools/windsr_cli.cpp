// windsr command-line front end. Functionality lives behind the shared
// library's C API (windsr.h); this binary only assembles the run config
// from a JSON file plus flag overrides and maps statuses to exit codes:
// 0 success, 2 input/config error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "windsr.h"

namespace {

using nlohmann::json;

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) {
        std::fprintf(stderr, "windsr: cannot read config %s\n", path.c_str());
        std::exit(2);
    }
    try {
        json j;
        in >> j;
        return j;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "windsr: bad config %s: %s\n", path.c_str(), e.what());
        std::exit(2);
    }
}

// Applies `--set section.key=value` style overrides; values parse as JSON
// when possible and fall back to strings.
void apply_override(json& config, const std::string& dotted, const std::string& value) {
    json* node = &config;
    std::string rest = dotted;
    size_t pos;
    while ((pos = rest.find('.')) != std::string::npos) {
        node = &(*node)[rest.substr(0, pos)];
        rest = rest.substr(pos + 1);
    }
    try {
        (*node)[rest] = json::parse(value);
    } catch (...) {
        (*node)[rest] = value;
    }
}

int run(windsr_status (*command)(const char*), const json& config) {
    windsr_status status = command(config.dump().c_str());
    if (status == WINDSR_OK) return 0;
    std::fprintf(stderr, "windsr: %s\n", windsr_last_error());
    return windsr_status_is_numeric(status) ? 3 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"windsr: diffusion-based wind-speed downscaling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    long long seed = -1;
    int epochs = -1, members = -1, steps = -1, threads = -1;
    std::string out_dir, aggregate;
    bool keep_members = false, stochastic_sigma = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run config JSON file");
        cmd->add_option("--set", overrides, "override a config field: section.key=value")
            ->take_all();
        cmd->add_option("--seed", seed, "seed override (training.seed and sampling.seed)");
        cmd->add_option("--epochs", epochs, "training epochs override");
        cmd->add_option("--members", members, "ensemble members override");
        cmd->add_option("--steps", steps, "diffusion steps override");
        cmd->add_option("--threads", threads, "worker thread cap");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--aggregate", aggregate, "metric aggregation: batch or global")
            ->check(CLI::IsMember({"batch", "global"}));
        cmd->add_flag("--keep-members", keep_members, "persist per-member ensemble outputs");
        cmd->add_flag("--stochastic-sigma", stochastic_sigma,
                      "sample with the stochastic sigma_t form instead of the deterministic step");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
    CLI::App* train = app.add_subcommand("train", "train a predictor and write a checkpoint");
    CLI::App* sample = app.add_subcommand("sample", "run ensemble-diffusion downscaling");
    CLI::App* evaluate = app.add_subcommand("evaluate", "score prediction stores against truth");
    CLI::App* validate = app.add_subcommand("validate", "score gridded products against stations");
    for (CLI::App* cmd : {synth, train, sample, evaluate, validate}) add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    json config = load_config_file(config_path);
    if (config.contains("hr_rows")) {
        // A bare synth config file: nest it so flag overrides land cleanly.
        json synth_cfg = config;
        config = json::object();
        config["synth"] = synth_cfg;
    }
    for (const auto& entry : overrides) {
        size_t eq = entry.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "windsr: --set expects key=value, got '%s'\n", entry.c_str());
            return 2;
        }
        apply_override(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
    if (seed >= 0) {
        config["training"]["seed"] = seed;
        config["sampling"]["seed"] = seed;
        config["synth"]["seed"] = seed;
    }
    if (epochs >= 0) config["training"]["epochs"] = epochs;
    if (members >= 0) config["sampling"]["members"] = members;
    if (steps >= 0) config["sampling"]["steps"] = steps;
    if (threads >= 0) config["threads"] = threads;
    if (!out_dir.empty()) config["paths"]["out_dir"] = out_dir;
    if (!aggregate.empty()) config["metrics"]["aggregation"] = aggregate;
    if (keep_members) config["sampling"]["keep_members"] = true;
    if (stochastic_sigma) config["sampling"]["stochastic_sigma"] = true;

    if (synth->parsed()) return run(&windsr_cmd_synth, config);
    if (train->parsed()) return run(&windsr_cmd_train, config);
    if (sample->parsed()) return run(&windsr_cmd_sample, config);
    if (evaluate->parsed()) return run(&windsr_cmd_evaluate, config);
    if (validate->parsed()) return run(&windsr_cmd_validate, config);
    return 2;
}
