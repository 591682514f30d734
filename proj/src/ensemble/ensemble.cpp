#include "windsr/ensemble.hpp"

#include <cmath>

namespace windsr {

EnsembleResult ensemble_sample(Predictor<float>& model,
                               const std::vector<std::vector<float>>& conditioning, int rows,
                               int cols, const EnsembleSpec& spec, bool keep_members,
                               const SampleOptions& options) {
    spec.validate();
    NoiseSchedule schedule = schedule_linear(spec.steps);
    std::vector<std::uint64_t> seeds(spec.members);
    for (int m = 0; m < spec.members; ++m) seeds[m] = spec.base_seed + static_cast<std::uint64_t>(m);

    auto denoiser = make_denoiser(model, conditioning, rows, cols);
    const size_t n = static_cast<size_t>(rows) * cols;
    std::vector<std::vector<float>> members = sample_members<float>(denoiser, n, schedule, seeds, options);

    for (int m = 0; m < spec.members; ++m)
        for (float v : members[m])
            if (!std::isfinite(v))
                raise(errc::numeric, "ensemble member with seed " + std::to_string(seeds[m]) +
                                         " produced non-finite values");

    EnsembleResult result;
    std::vector<double> acc(n, 0.0);
    for (int m = 0; m < spec.members; ++m)
        for (size_t i = 0; i < n; ++i) acc[i] += members[m][i];
    result.mean.resize(n);
    const double inv = 1.0 / spec.members;
    for (size_t i = 0; i < n; ++i) result.mean[i] = static_cast<float>(acc[i] * inv);
    if (keep_members) result.members = std::move(members);
    return result;
}

std::vector<float> ensemble_spread(const std::vector<std::vector<float>>& members) {
    if (members.size() < 2) raise(errc::invalid_argument, "spread needs at least two members");
    const size_t n = members[0].size();
    for (const auto& m : members)
        if (m.size() != n) raise(errc::shape, "members differ in size");
    std::vector<double> mean(n, 0.0);
    for (const auto& m : members)
        for (size_t i = 0; i < n; ++i) mean[i] += m[i];
    for (auto& v : mean) v /= static_cast<double>(members.size());
    std::vector<double> var(n, 0.0);
    for (const auto& m : members)
        for (size_t i = 0; i < n; ++i) {
            double d = m[i] - mean[i];
            var[i] += d * d;
        }
    std::vector<float> out(n);
    const double inv = 1.0 / static_cast<double>(members.size() - 1);
    for (size_t i = 0; i < n; ++i) out[i] = static_cast<float>(std::sqrt(var[i] * inv));
    return out;
}

} // namespace windsr
