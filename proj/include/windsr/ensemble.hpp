#pragma once

#include <cstdint>
#include <vector>

#include "windsr/diffusion.hpp"
#include "windsr/field.hpp"

namespace windsr {

// Ensemble diffusion: repeated conditioned sampling with independent start
// noise, aggregated by the cellwise mean. Member m uses seed
// base_seed + m, a documented derivation for reproducibility.
struct EnsembleSpec {
    int members = 15;
    int steps = 5;
    std::uint64_t base_seed = 0;

    void validate() const {
        if (members < 1) raise(errc::invalid_argument, "ensemble needs at least one member");
        if (steps < 1) raise(errc::invalid_argument, "ensemble needs at least one step");
    }
};

struct EnsembleResult {
    std::vector<float> mean;
    std::vector<std::vector<float>> members; // kept only when requested
};

// Members run folded into the batch dimension (identical semantics to
// sequential execution); the mean reduces in member-index order with 64-bit
// accumulation, so permuting members cannot change it.
EnsembleResult ensemble_sample(Predictor<float>& model,
                               const std::vector<std::vector<float>>& conditioning, int rows,
                               int cols, const EnsembleSpec& spec, bool keep_members = false,
                               const SampleOptions& options = {});

// Cellwise sample standard deviation (n-1 denominator) across members.
std::vector<float> ensemble_spread(const std::vector<std::vector<float>>& members);

} // namespace windsr
