#include "windsr/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace windsr {

void NoiseSchedule::validate() const {
    if (steps < 1 || noise_rates.size() != static_cast<size_t>(steps))
        raise(errc::schedule, "schedule length mismatch");
    if (std::abs(noise_rates.front() - 1.0) > 1e-12)
        raise(errc::schedule, "first sampling step must start from pure noise");
    for (int i = 0; i < steps; ++i) {
        if (i > 0 && !(noise_rates[i] < noise_rates[i - 1]))
            raise(errc::schedule, "noise rates must strictly decrease along the sampling order");
        double identity = signal_rates[i] * signal_rates[i] + noise_rates[i] * noise_rates[i];
        if (std::abs(identity - 1.0) > 1e-6)
            raise(errc::schedule, "signal^2 + noise^2 must equal 1");
    }
}

NoiseSchedule schedule_linear(int steps) {
    if (steps < 1) raise(errc::invalid_argument, "schedule needs at least one step");
    NoiseSchedule s;
    s.steps = steps;
    s.noise_rates.resize(steps);
    s.signal_rates.resize(steps);
    s.alphas.resize(steps);
    // Linear from 1 down to 1/steps inclusive: rate_i = 1 - i*(1-1/T)/(T-1).
    for (int i = 0; i < steps; ++i) {
        double rate = steps == 1 ? 1.0
                                 : 1.0 - static_cast<double>(i) * (1.0 - 1.0 / steps) / (steps - 1);
        s.noise_rates[i] = rate;
        s.alphas[i] = 1.0 - rate * rate;
        s.signal_rates[i] = std::sqrt(s.alphas[i]);
    }
    s.validate();
    return s;
}

std::vector<double> embedding_frequencies(int f_count) {
    if (f_count < 1) raise(errc::invalid_argument, "embedding needs at least one frequency");
    // Log-spaced between 1 and 1000.
    std::vector<double> f(f_count);
    for (int i = 0; i < f_count; ++i)
        f[i] = f_count == 1 ? 1.0 : std::exp(std::log(1000.0) * i / (f_count - 1));
    return f;
}

std::vector<double> sinusoidal_embed(double noise_variance, const std::vector<double>& freqs) {
    if (noise_variance < 0.0 || noise_variance > 1.0)
        raise(errc::invalid_argument, "noise variance must lie in [0, 1]");
    const double two_pi = 6.283185307179586476925286766559;
    std::vector<double> code(2 * freqs.size());
    for (size_t i = 0; i < freqs.size(); ++i) {
        code[i] = std::sin(two_pi * freqs[i] * noise_variance);
        code[freqs.size() + i] = std::cos(two_pi * freqs[i] * noise_variance);
    }
    return code;
}

template <typename S>
void forward_noise(const S* x0, const S* eps, size_t n, double alpha, S* out) {
    if (alpha < 0.0 || alpha > 1.0) raise(errc::invalid_argument, "alpha must lie in [0, 1]");
    const S sig = static_cast<S>(std::sqrt(alpha));
    const S noi = static_cast<S>(std::sqrt(1.0 - alpha));
    for (size_t i = 0; i < n; ++i) out[i] = sig * x0[i] + noi * eps[i];
}

template <typename S>
void predict_x0(const S* x_t, const S* eps_hat, size_t n, double alpha, S* out) {
    if (alpha < kAlphaFloor)
        raise(errc::singularity, "alpha below the floor: the signal rate vanishes");
    if (alpha > 1.0) raise(errc::invalid_argument, "alpha must lie in (0, 1]");
    const S inv_sig = static_cast<S>(1.0 / std::sqrt(alpha));
    const S noi = static_cast<S>(std::sqrt(1.0 - alpha));
    for (size_t i = 0; i < n; ++i) out[i] = (x_t[i] - noi * eps_hat[i]) * inv_sig;
}

template <typename S>
void ddim_step(const S* x_t, const S* eps_hat, size_t n, double alpha_t, double alpha_prev, S* out) {
    if (!(alpha_prev >= alpha_t)) raise(errc::schedule, "alpha ordering violated in ddim step");
    predict_x0(x_t, eps_hat, n, alpha_t, out);
    if (alpha_prev == 1.0) return; // final step: the estimate itself
    const S sig = static_cast<S>(std::sqrt(alpha_prev));
    const S noi = static_cast<S>(std::sqrt(1.0 - alpha_prev));
    for (size_t i = 0; i < n; ++i) out[i] = sig * out[i] + noi * eps_hat[i];
}

template <typename S>
std::vector<std::vector<S>> sample_members(const BatchDenoiser<S>& denoiser, size_t field_size,
                                           const NoiseSchedule& schedule,
                                           const std::vector<std::uint64_t>& seeds,
                                           const SampleOptions& options) {
    schedule.validate();
    if (seeds.empty()) raise(errc::invalid_argument, "sampling needs at least one seed");
    const size_t members = seeds.size();

    std::vector<Rng> rngs;
    rngs.reserve(members);
    std::vector<std::vector<S>> x(members);
    for (size_t m = 0; m < members; ++m) {
        rngs.emplace_back(seeds[m]);
        x[m].resize(field_size);
        for (auto& v : x[m]) v = static_cast<S>(rngs[m].normal());
    }

    std::vector<std::vector<S>> eps_hat(members, std::vector<S>(field_size));
    std::vector<std::vector<S>> x0_hat(members, std::vector<S>(field_size));

    for (int step = 0; step < schedule.steps; ++step) {
        const double alpha_t = schedule.alphas[step];
        const double alpha_prev = step + 1 < schedule.steps ? schedule.alphas[step + 1] : 1.0;
        // The denoiser always sees the floored alpha, so the stabilized
        // division below pairs with what the callback was told.
        const double alpha_eff = std::max(alpha_t, kAlphaFloor);
        denoiser(x, alpha_eff, eps_hat);

        for (size_t m = 0; m < members; ++m) {
            if (alpha_t < kAlphaFloor && alpha_prev < 1.0) {
                // Pure-noise start of a multi-step schedule: x_t carries no
                // signal, so the x0 estimate is zero and the update keeps
                // only the noise term.
                std::fill(x0_hat[m].begin(), x0_hat[m].end(), S(0));
            } else {
                // Includes the degenerate single-step schedule, where the
                // stabilized floored division keeps the exact-denoiser
                // closure telescoping.
                predict_x0(x[m].data(), eps_hat[m].data(), field_size, alpha_eff, x0_hat[m].data());
            }

            if (alpha_prev == 1.0) {
                x[m] = x0_hat[m];
                continue;
            }
            double sigma = 0.0;
            if (options.stochastic_eta > 0.0 && alpha_t >= kAlphaFloor) {
                sigma = options.stochastic_eta *
                        std::sqrt((1.0 - alpha_prev) / (1.0 - alpha_t)) *
                        std::sqrt(1.0 - alpha_t / alpha_prev);
            }
            const S sig = static_cast<S>(std::sqrt(alpha_prev));
            const S noi = static_cast<S>(std::sqrt(std::max(0.0, 1.0 - alpha_prev - sigma * sigma)));
            for (size_t i = 0; i < field_size; ++i)
                x[m][i] = sig * x0_hat[m][i] + noi * eps_hat[m][i];
            if (sigma > 0.0) {
                const S s_sigma = static_cast<S>(sigma);
                for (size_t i = 0; i < field_size; ++i)
                    x[m][i] += s_sigma * static_cast<S>(rngs[m].normal());
            }
        }
    }
    return x;
}

BatchDenoiser<float> make_denoiser(Predictor<float>& model,
                                   const std::vector<std::vector<float>>& conditioning, int rows,
                                   int cols) {
    if (conditioning.size() != 4) raise(errc::shape, "conditioning must hold 4 frames");
    auto cond = std::make_shared<nn::Tensor4<float>>(1, 4, rows, cols);
    for (int c = 0; c < 4; ++c) {
        if (conditioning[c].size() != static_cast<size_t>(rows) * cols)
            raise(errc::shape, "conditioning frame size mismatch");
        std::copy(conditioning[c].begin(), conditioning[c].end(), cond->channel(0, c));
    }
    return [&model, cond, rows, cols](const std::vector<std::vector<float>>& x_t, double alpha,
                                      std::vector<std::vector<float>>& eps_hat) {
        const int members = static_cast<int>(x_t.size());
        nn::Tensor4<float> noisy(members, 1, rows, cols);
        nn::Tensor4<float> cond_batch(members, 4, rows, cols);
        for (int m = 0; m < members; ++m) {
            std::copy(x_t[m].begin(), x_t[m].end(), noisy.channel(m, 0));
            std::copy(cond->data.begin(), cond->data.end(), cond_batch.image(m));
        }
        std::vector<double> variances(members, 1.0 - alpha);
        nn::Tensor4<float> eps = model.denoise(noisy, cond_batch, variances, /*want_grad=*/false);
        for (int m = 0; m < members; ++m)
            std::copy(eps.channel(m, 0), eps.channel(m, 0) + eps.plane(), eps_hat[m].begin());
    };
}

std::vector<float> sample(Predictor<float>& model, const std::vector<std::vector<float>>& conditioning,
                          int rows, int cols, const NoiseSchedule& schedule, std::uint64_t seed,
                          const SampleOptions& options) {
    auto denoiser = make_denoiser(model, conditioning, rows, cols);
    auto out = sample_members<float>(denoiser, static_cast<size_t>(rows) * cols, schedule, {seed},
                                     options);
    return std::move(out[0]);
}

namespace {

struct DiffusionBatch {
    nn::Tensor4<float> noisy;
    nn::Tensor4<float> conditioning;
    nn::Tensor4<float> eps;
    std::vector<double> variances;
};

DiffusionBatch draw_batch(const std::vector<SampleWindow>& batch, Rng& rng,
                          const TrainOptions& options) {
    if (batch.empty()) raise(errc::empty, "empty training batch");
    const int n = static_cast<int>(batch.size());
    const int h = batch[0].hr_grid.rows;
    const int w = batch[0].hr_grid.cols;
    DiffusionBatch d{nn::Tensor4<float>(n, 1, h, w), nn::Tensor4<float>(n, 4, h, w),
                     nn::Tensor4<float>(n, 1, h, w), std::vector<double>(n)};
    NoiseSchedule grid;
    if (!options.continuous_time) grid = schedule_linear(options.schedule_steps);
    for (int ni = 0; ni < n; ++ni) {
        const SampleWindow& win = batch[ni];
        if (win.conditioning.size() != 4 || win.target.size() != static_cast<size_t>(h) * w)
            raise(errc::shape, "malformed sample window");
        // Diffusion time: uniform over noise rates in [1/T, 1], or a draw
        // from the discrete schedule grid.
        double rate = options.continuous_time
                          ? rng.uniform(1.0 / options.schedule_steps, 1.0)
                          : grid.noise_rates[rng.below(static_cast<std::uint64_t>(grid.steps))];
        double alpha = 1.0 - rate * rate;
        d.variances[ni] = rate * rate;
        float* eps = d.eps.channel(ni, 0);
        for (size_t i = 0; i < d.eps.plane(); ++i) eps[i] = static_cast<float>(rng.normal());
        forward_noise(win.target.data(), eps, win.target.size(), alpha, d.noisy.channel(ni, 0));
        for (int c = 0; c < 4; ++c)
            std::copy(win.conditioning[c].begin(), win.conditioning[c].end(),
                      d.conditioning.channel(ni, c));
    }
    return d;
}

double noise_loss(const nn::Tensor4<float>& eps_hat, const nn::Tensor4<float>& eps,
                  bool squared, nn::Tensor4<float>* grad) {
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(eps.size());
    for (size_t i = 0; i < eps.data.size(); ++i) {
        double diff = static_cast<double>(eps_hat.data[i]) - static_cast<double>(eps.data[i]);
        if (squared) {
            loss += diff * diff;
            if (grad) grad->data[i] = static_cast<float>(2.0 * diff * inv);
        } else {
            loss += std::abs(diff);
            if (grad) grad->data[i] = static_cast<float>((diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) * inv);
        }
    }
    return loss * inv;
}

} // namespace

double train_step(Predictor<float>& model, nn::AdamW<float>& opt,
                  const std::vector<SampleWindow>& batch, Rng& rng, const TrainOptions& options) {
    DiffusionBatch d = draw_batch(batch, rng, options);
    opt.zero_grad();
    nn::Tensor4<float> eps_hat = model.denoise(d.noisy, d.conditioning, d.variances, /*want_grad=*/true);
    nn::Tensor4<float> grad(eps_hat.n, eps_hat.c, eps_hat.h, eps_hat.w);
    double loss = noise_loss(eps_hat, d.eps, options.squared_loss, &grad);
    if (!std::isfinite(loss)) raise(errc::numeric, "diffusion loss diverged");
    model.backward(grad);
    model.release_cache();
    opt.step(options.lr, options.weight_decay);
    return loss;
}

double train_step_loss(const DenoiseFn& denoiser, const std::vector<SampleWindow>& batch, Rng& rng,
                       const TrainOptions& options) {
    DiffusionBatch d = draw_batch(batch, rng, options);
    nn::Tensor4<float> eps_hat = denoiser(d.noisy, d.conditioning, d.variances);
    if (!eps_hat.same_shape(d.eps)) raise(errc::shape, "denoiser output shape mismatch");
    double loss = noise_loss(eps_hat, d.eps, options.squared_loss, nullptr);
    if (!std::isfinite(loss)) raise(errc::numeric, "diffusion loss diverged");
    return loss;
}

template void forward_noise<float>(const float*, const float*, size_t, double, float*);
template void forward_noise<double>(const double*, const double*, size_t, double, double*);
template void predict_x0<float>(const float*, const float*, size_t, double, float*);
template void predict_x0<double>(const double*, const double*, size_t, double, double*);
template void ddim_step<float>(const float*, const float*, size_t, double, double, float*);
template void ddim_step<double>(const double*, const double*, size_t, double, double, double*);
template std::vector<std::vector<float>> sample_members<float>(const BatchDenoiser<float>&, size_t,
                                                               const NoiseSchedule&,
                                                               const std::vector<std::uint64_t>&,
                                                               const SampleOptions&);
template std::vector<std::vector<double>> sample_members<double>(const BatchDenoiser<double>&, size_t,
                                                                 const NoiseSchedule&,
                                                                 const std::vector<std::uint64_t>&,
                                                                 const SampleOptions&);

} // namespace windsr
