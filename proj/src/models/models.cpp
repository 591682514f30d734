#include "windsr/models.hpp"

#include <json.hpp>

#include "windsr/diffusion.hpp"

namespace windsr {

using nlohmann::json;

const char* predictor_kind_name(PredictorKind k) {
    switch (k) {
        case PredictorKind::diffusion_unet: return "diffusion_unet";
        case PredictorKind::espcn: return "espcn";
        case PredictorKind::edsr: return "edsr";
        case PredictorKind::runet: return "runet";
        case PredictorKind::bilinear: return "bilinear";
    }
    return "unknown";
}

PredictorKind predictor_kind_from_name(const std::string& name) {
    for (PredictorKind k : {PredictorKind::diffusion_unet, PredictorKind::espcn, PredictorKind::edsr,
                            PredictorKind::runet, PredictorKind::bilinear})
        if (name == predictor_kind_name(k)) return k;
    raise(errc::invalid_argument, "unknown predictor kind '" + name + "'");
}

std::string ModelSpec::to_json() const {
    json j;
    j["kind"] = predictor_kind_name(kind);
    j["channels"] = channels;
    j["blocks_per_level"] = blocks_per_level;
    j["embed_frequencies"] = embed_frequencies;
    j["upscale"] = upscale;
    j["trunk_channels"] = trunk_channels;
    j["trunk_blocks"] = trunk_blocks;
    j["residual_scale"] = residual_scale;
    return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
    ModelSpec s;
    try {
        json j = json::parse(text);
        s.kind = predictor_kind_from_name(j.at("kind").get<std::string>());
        s.channels = j.at("channels").get<std::vector<int>>();
        s.blocks_per_level = j.at("blocks_per_level").get<int>();
        s.embed_frequencies = j.at("embed_frequencies").get<int>();
        s.upscale = j.at("upscale").get<int>();
        s.trunk_channels = j.value("trunk_channels", 32);
        s.trunk_blocks = j.value("trunk_blocks", 4);
        s.residual_scale = j.value("residual_scale", 0.1);
    } catch (const json::exception& e) {
        raise(errc::data, std::string("bad model spec: ") + e.what());
    }
    return s;
}

ModelSpec desk_model_spec(PredictorKind kind) {
    ModelSpec s;
    s.kind = kind;
    s.channels = {16, 32, 48, 64};
    return s;
}

ModelSpec full_model_spec(PredictorKind kind) {
    ModelSpec s;
    s.kind = kind;
    s.channels = {64, 128, 256, 384};
    return s;
}

namespace {

template <typename T>
nn::UNetConfig unet_config_for(const ModelSpec& spec) {
    nn::UNetConfig cfg;
    cfg.channels = spec.channels;
    cfg.blocks_per_level = spec.blocks_per_level;
    cfg.out_channels = 1;
    cfg.in_channels = spec.kind == PredictorKind::diffusion_unet
                          ? 1 + 4 + 2 * spec.embed_frequencies
                          : 4;
    return cfg;
}

} // namespace

template <typename T>
Predictor<T>::Predictor(const ModelSpec& spec, std::uint64_t init_seed) : spec_(spec) {
    switch (spec_.kind) {
        case PredictorKind::diffusion_unet:
        case PredictorKind::runet:
            unet_ = nn::UNet<T>(unet_config_for<T>(spec_), init_seed);
            break;
        case PredictorKind::espcn: {
            nn::EspcnConfig cfg;
            cfg.in_channels = 4;
            cfg.upscale = spec_.upscale;
            espcn_ = nn::Espcn<T>(cfg, init_seed);
            break;
        }
        case PredictorKind::edsr: {
            nn::EdsrConfig cfg;
            cfg.in_channels = 4;
            cfg.upscale = spec_.upscale;
            cfg.trunk_channels = spec_.trunk_channels;
            cfg.blocks = spec_.trunk_blocks;
            cfg.residual_scale = spec_.residual_scale;
            edsr_ = nn::Edsr<T>(cfg, init_seed);
            break;
        }
        case PredictorKind::bilinear:
            raise(errc::invalid_argument, "bilinear is parameter-free; use grids resampling");
    }
}

template <typename T>
std::vector<nn::Param<T>*> Predictor<T>::params() {
    switch (spec_.kind) {
        case PredictorKind::diffusion_unet:
        case PredictorKind::runet: return unet_.params();
        case PredictorKind::espcn: return espcn_.params();
        case PredictorKind::edsr: return edsr_.params();
        default: return {};
    }
}

template <typename T>
std::int64_t Predictor<T>::parameter_count() {
    std::int64_t total = 0;
    for (auto* p : params()) total += static_cast<std::int64_t>(p->size());
    return total;
}

template <typename T>
nn::Tensor4<T> Predictor<T>::denoise(const nn::Tensor4<T>& noisy, const nn::Tensor4<T>& conditioning,
                                     const std::vector<double>& noise_variance, bool want_grad) {
    if (spec_.kind != PredictorKind::diffusion_unet)
        raise(errc::invalid_argument, "denoise is only defined for the diffusion U-Net");
    if (noisy.n != conditioning.n || noisy.h != conditioning.h || noisy.w != conditioning.w)
        raise(errc::shape, "noisy batch and conditioning disagree");
    if (noisy.c != 1 || conditioning.c != 4) raise(errc::shape, "expected 1 noisy + 4 conditioning channels");
    if (noise_variance.size() != static_cast<size_t>(noisy.n))
        raise(errc::shape, "one noise variance per batch element required");

    const int f_count = spec_.embed_frequencies;
    static thread_local std::vector<double> freqs;
    if (freqs.size() != static_cast<size_t>(f_count)) freqs = embedding_frequencies(f_count);

    nn::Tensor4<T> input(noisy.n, 1 + 4 + 2 * f_count, noisy.h, noisy.w);
    const size_t plane = input.plane();
    for (int ni = 0; ni < noisy.n; ++ni) {
        std::copy(noisy.channel(ni, 0), noisy.channel(ni, 0) + plane, input.channel(ni, 0));
        for (int c = 0; c < 4; ++c)
            std::copy(conditioning.channel(ni, c), conditioning.channel(ni, c) + plane,
                      input.channel(ni, 1 + c));
        std::vector<double> code = sinusoidal_embed(noise_variance[ni], freqs);
        for (int c = 0; c < 2 * f_count; ++c) {
            T v = static_cast<T>(code[c]);
            std::fill(input.channel(ni, 5 + c), input.channel(ni, 5 + c) + plane, v);
        }
    }
    return unet_.forward(input, want_grad);
}

template <typename T>
nn::Tensor4<T> Predictor<T>::predict(const nn::Tensor4<T>& input, bool want_grad) {
    switch (spec_.kind) {
        case PredictorKind::runet: return unet_.forward(input, want_grad);
        case PredictorKind::espcn: return espcn_.forward(input, want_grad);
        case PredictorKind::edsr: return edsr_.forward(input, want_grad);
        default: raise(errc::invalid_argument, "predict is only defined for regression baselines");
    }
}

template <typename T>
void Predictor<T>::backward(const nn::Tensor4<T>& dy) {
    switch (spec_.kind) {
        case PredictorKind::diffusion_unet:
        case PredictorKind::runet: unet_.backward(dy); break;
        case PredictorKind::espcn: espcn_.backward(dy); break;
        case PredictorKind::edsr: edsr_.backward(dy); break;
        default: break;
    }
}

template <typename T>
void Predictor<T>::release_cache() {
    switch (spec_.kind) {
        case PredictorKind::diffusion_unet:
        case PredictorKind::runet: unet_.release_cache(); break;
        case PredictorKind::espcn: espcn_.release_cache(); break;
        case PredictorKind::edsr: edsr_.release_cache(); break;
        default: break;
    }
}

std::int64_t parameter_count(const ModelSpec& spec) {
    Predictor<float> model(spec, /*init_seed=*/1);
    return model.parameter_count();
}

template <typename T>
double regression_train_step(Predictor<T>& model, nn::AdamW<T>& opt, const nn::Tensor4<T>& input,
                             const nn::Tensor4<T>& target, double lr, double weight_decay) {
    opt.zero_grad();
    nn::Tensor4<T> pred = model.predict(input, /*want_grad=*/true);
    if (!pred.same_shape(target)) raise(errc::shape, "prediction does not match target shape");
    double loss = 0.0;
    nn::Tensor4<T> grad(pred.n, pred.c, pred.h, pred.w);
    const double inv = 1.0 / static_cast<double>(pred.size());
    for (size_t i = 0; i < pred.data.size(); ++i) {
        double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
        loss += d * d;
        grad.data[i] = static_cast<T>(2.0 * d * inv);
    }
    loss *= inv;
    if (!std::isfinite(loss)) raise(errc::numeric, "regression loss diverged");
    model.backward(grad);
    model.release_cache();
    opt.step(lr, weight_decay);
    return loss;
}

template class Predictor<float>;
template class Predictor<double>;
template double regression_train_step<float>(Predictor<float>&, nn::AdamW<float>&,
                                             const nn::Tensor4<float>&, const nn::Tensor4<float>&,
                                             double, double);
template double regression_train_step<double>(Predictor<double>&, nn::AdamW<double>&,
                                              const nn::Tensor4<double>&, const nn::Tensor4<double>&,
                                              double, double);

} // namespace windsr
