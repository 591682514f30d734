#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "windsr/datapipe.hpp"
#include "windsr/models.hpp"
#include "windsr/rng.hpp"

namespace windsr {

// Signal rates never reach exactly zero in the arithmetic: alpha is floored
// here before any division. See `sample_members` for how the pure-noise
// first step is handled.
inline constexpr double kAlphaFloor = 1e-8;

// Noise schedule in sampling order: index 0 is the pure-noise start
// (noise rate exactly 1), rates strictly decreasing from there.
struct NoiseSchedule {
    int steps = 0;
    std::vector<double> noise_rates;  // sqrt(1 - alpha)
    std::vector<double> signal_rates; // sqrt(alpha)
    std::vector<double> alphas;

    void validate() const;
};

// Noise rates linearly spaced from 1 down to 1/steps inclusive;
// alpha = 1 - rate^2. steps=5 gives rates 1.0, 0.8, 0.6, 0.4, 0.2.
NoiseSchedule schedule_linear(int steps);

// Log-spaced frequencies for the sinusoidal noise-variance code (2F
// channels: F sines then F cosines).
std::vector<double> embedding_frequencies(int f_count);
std::vector<double> sinusoidal_embed(double noise_variance, const std::vector<double>& freqs);

// x_t = sqrt(alpha) * x0 + sqrt(1 - alpha) * eps
template <typename S>
void forward_noise(const S* x0, const S* eps, size_t n, double alpha, S* out);

// x0_hat = (x_t - sqrt(1 - alpha) * eps_hat) / sqrt(alpha); raises
// errc::singularity below the alpha floor.
template <typename S>
void predict_x0(const S* x_t, const S* eps_hat, size_t n, double alpha, S* out);

// Deterministic DDIM update (sigma_t = 0): re-applies the predicted noise
// around the refreshed x0 estimate. alpha_prev == 1 returns the estimate
// bit-for-bit.
template <typename S>
void ddim_step(const S* x_t, const S* eps_hat, size_t n, double alpha_t, double alpha_prev, S* out);

// Denoiser callback for the sampling loop: given the member states at one
// noise level, fill the noise estimates. Members share conditioning; the
// callback owns it.
template <typename S>
using BatchDenoiser =
    std::function<void(const std::vector<std::vector<S>>& x_t, double alpha,
                       std::vector<std::vector<S>>& eps_hat)>;

struct SampleOptions {
    // eta > 0 enables the stochastic generalization: sigma_t =
    // eta * sqrt((1-a_prev)/(1-a_t)) * sqrt(1 - a_t/a_prev), with fresh
    // noise re-injected each step.
    double stochastic_eta = 0.0;
};

// Runs the reverse process for each seed (one state per member, identical
// schedule, independent start noise) and returns the final x0 estimates.
//
// The first step of any multi-step schedule starts at alpha = 0, where x_t
// is pure noise and carries no signal: the x0 estimate is taken as zero and
// the update reduces to sqrt(1-alpha_prev) * eps_hat. A single-step
// schedule is terminal at alpha = 0; there the stabilized floored division
// is used instead so that the algebraic closure with an exact denoiser
// still holds.
template <typename S>
std::vector<std::vector<S>> sample_members(const BatchDenoiser<S>& denoiser, size_t field_size,
                                           const NoiseSchedule& schedule,
                                           const std::vector<std::uint64_t>& seeds,
                                           const SampleOptions& options = {});

// Single conditioned sample through a diffusion predictor; returns the
// generated field values (normalized units, hr grid).
std::vector<float> sample(Predictor<float>& model, const std::vector<std::vector<float>>& conditioning,
                          int rows, int cols, const NoiseSchedule& schedule, std::uint64_t seed,
                          const SampleOptions& options = {});

// Adapts a float predictor plus fixed conditioning to the BatchDenoiser
// interface used by `sample_members`.
BatchDenoiser<float> make_denoiser(Predictor<float>& model,
                                   const std::vector<std::vector<float>>& conditioning, int rows,
                                   int cols);

struct TrainOptions {
    int schedule_steps = 5;      // sets the rate range [1/T, 1] (and the grid)
    bool continuous_time = true; // false: draw from the discrete schedule
    bool squared_loss = false;   // default is MAE on the noise
    double lr = 1e-4;
    double weight_decay = 1e-5;
};

// One diffusion training step (noise draw, forward noising, denoiser
// forward, MAE on noise, one optimizer update). Returns the scalar loss;
// raises errc::numeric if it is not finite.
double train_step(Predictor<float>& model, nn::AdamW<float>& opt,
                  const std::vector<SampleWindow>& batch, Rng& rng, const TrainOptions& options);

// Loss-only variant against an arbitrary denoiser (no parameter update);
// draws noise and diffusion times exactly like train_step.
using DenoiseFn = std::function<nn::Tensor4<float>(const nn::Tensor4<float>& noisy,
                                                   const nn::Tensor4<float>& conditioning,
                                                   const std::vector<double>& noise_variance)>;
double train_step_loss(const DenoiseFn& denoiser, const std::vector<SampleWindow>& batch, Rng& rng,
                       const TrainOptions& options);

} // namespace windsr
