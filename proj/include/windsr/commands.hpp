#pragma once

#include <string>

#include "windsr/config.hpp"

namespace windsr {

// Pipeline entry points behind the CLI subcommands. Each throws
// windsr::Error on failure and writes its artifacts plus a
// `<command>_manifest.json` under the configured output directory.
void cmd_synth(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_sample(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_validate(const RunConfig& config);

// FNV-1a 64-bit digest of a file, as recorded in manifests.
std::uint64_t fnv1a64_file(const std::string& path);

} // namespace windsr
