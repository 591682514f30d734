#pragma once

#include <string>
#include <vector>

#include "windsr/nn/adamw.hpp"
#include "windsr/nn/baselines.hpp"
#include "windsr/nn/unet.hpp"

namespace windsr {

enum class PredictorKind { diffusion_unet, espcn, edsr, runet, bilinear };

const char* predictor_kind_name(PredictorKind k);
PredictorKind predictor_kind_from_name(const std::string& name);

// Architecture description serialized into checkpoint headers. Only the
// fields relevant to `kind` are meaningful.
struct ModelSpec {
    PredictorKind kind = PredictorKind::diffusion_unet;
    std::vector<int> channels = {64, 128, 256, 384}; // unet widths
    int blocks_per_level = 2;
    int embed_frequencies = 16; // F; the embedding adds 2F input channels
    int upscale = 4;            // espcn / edsr
    int trunk_channels = 32;    // edsr
    int trunk_blocks = 4;       // edsr
    double residual_scale = 0.1;

    std::string to_json() const;
    static ModelSpec from_json(const std::string& text);
};

// Desk-scale default: trains in minutes on 2 cores, ~0.7M parameters.
ModelSpec desk_model_spec(PredictorKind kind = PredictorKind::diffusion_unet);
// The full-size configuration (widths 64..384, ~19M parameters).
ModelSpec full_model_spec(PredictorKind kind = PredictorKind::diffusion_unet);

// One conditioned predictor behind a kind switch. The diffusion U-Net maps
// (noisy target, 4 conditioning frames, noise variance) to a noise
// estimate; the regression baselines map conditioning directly to the
// high-res field. `bilinear` has no parameters and is handled upstream.
template <typename T>
class Predictor {
public:
    Predictor() = default;
    Predictor(const ModelSpec& spec, std::uint64_t init_seed);

    const ModelSpec& spec() const { return spec_; }
    PredictorKind kind() const { return spec_.kind; }

    std::vector<nn::Param<T>*> params();
    std::int64_t parameter_count();

    // Diffusion path: assembles [noisy | conditioning | broadcast embedding]
    // and runs the denoising U-Net. `noise_variance` is per batch element.
    nn::Tensor4<T> denoise(const nn::Tensor4<T>& noisy, const nn::Tensor4<T>& conditioning,
                           const std::vector<double>& noise_variance, bool want_grad);

    // Regression path: runet consumes the 4 pre-upsampled conditioning
    // frames; espcn/edsr consume the 4 raw low-res frames.
    nn::Tensor4<T> predict(const nn::Tensor4<T>& input, bool want_grad);

    // Backpropagates the loss gradient through whichever path ran last and
    // accumulates parameter gradients.
    void backward(const nn::Tensor4<T>& dy);

    void release_cache();

private:
    ModelSpec spec_;
    nn::UNet<T> unet_;   // diffusion_unet and runet
    nn::Espcn<T> espcn_;
    nn::Edsr<T> edsr_;
};

// Exact trainable-parameter total for a spec.
std::int64_t parameter_count(const ModelSpec& spec);

// Mean-squared-error training step for the regression baselines. Returns
// the batch loss; gradients are applied with one optimizer update.
template <typename T>
double regression_train_step(Predictor<T>& model, nn::AdamW<T>& opt, const nn::Tensor4<T>& input,
                             const nn::Tensor4<T>& target, double lr, double weight_decay);

} // namespace windsr
