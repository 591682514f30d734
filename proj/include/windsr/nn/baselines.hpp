#pragma once

#include "windsr/nn/layers.hpp"

namespace windsr::nn {

// Sub-pixel convolution network: a small trunk at low resolution, then a
// conv to r^2 feature channels rearranged into the upscaled field.
struct EspcnConfig {
    int in_channels = 4;
    int upscale = 4;
    int hidden1 = 64;
    int hidden2 = 32;
};

template <typename T>
class Espcn {
public:
    Espcn() = default;
    Espcn(const EspcnConfig& cfg, std::uint64_t init_seed) : cfg_(cfg), shuffle_(cfg.upscale) {
        if (cfg.upscale < 1) raise(errc::invalid_argument, "espcn upscale must be >= 1");
        Rng rng(init_seed);
        conv1_ = Conv2d<T>("espcn.conv1", cfg.in_channels, cfg.hidden1, 5, rng);
        conv2_ = Conv2d<T>("espcn.conv2", cfg.hidden1, cfg.hidden2, 3, rng);
        conv3_ = Conv2d<T>("espcn.conv3", cfg.hidden2, cfg.upscale * cfg.upscale, 3, rng);
    }

    const EspcnConfig& config() const { return cfg_; }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> out;
        conv1_.collect(out);
        conv2_.collect(out);
        conv3_.collect(out);
        return out;
    }

    Tensor4<T> forward(const Tensor4<T>& x, bool want_grad) {
        Tensor4<T> e = act1_.forward(conv1_.forward(x, want_grad), want_grad);
        e = act2_.forward(conv2_.forward(e, want_grad), want_grad);
        e = conv3_.forward(e, want_grad);
        return shuffle_.forward(e);
    }

    Tensor4<T> backward(const Tensor4<T>& dy, bool need_dx = false) {
        Tensor4<T> d = shuffle_.backward(dy);
        d = conv3_.backward(d);
        d = conv2_.backward(act2_.backward(d));
        return conv1_.backward(act1_.backward(d), need_dx);
    }

    void release_cache() {
        conv1_.release_cache();
        conv2_.release_cache();
        conv3_.release_cache();
        act1_.release_cache();
        act2_.release_cache();
    }

private:
    EspcnConfig cfg_;
    Conv2d<T> conv1_, conv2_, conv3_;
    Swish<T> act1_, act2_;
    PixelShuffle<T> shuffle_{4};
};

// Residual trunk with constant scaling in place of normalization layers,
// post-upsampling via sub-pixel convolution.
struct EdsrConfig {
    int in_channels = 4;
    int upscale = 4;
    int trunk_channels = 32;
    int blocks = 4;
    int tail_channels = 16;
    double residual_scale = 0.1;
};

template <typename T>
class Edsr {
public:
    Edsr() = default;
    Edsr(const EdsrConfig& cfg, std::uint64_t init_seed) : cfg_(cfg), shuffle_(cfg.upscale) {
        if (cfg.upscale < 1) raise(errc::invalid_argument, "edsr upscale must be >= 1");
        Rng rng(init_seed);
        stem_ = Conv2d<T>("edsr.stem", cfg.in_channels, cfg.trunk_channels, 3, rng);
        for (int b = 0; b < cfg.blocks; ++b) {
            block_conv1_.emplace_back("edsr.b" + std::to_string(b) + ".conv1", cfg.trunk_channels,
                                      cfg.trunk_channels, 3, rng);
            block_conv2_.emplace_back("edsr.b" + std::to_string(b) + ".conv2", cfg.trunk_channels,
                                      cfg.trunk_channels, 3, rng);
            block_act_.emplace_back();
        }
        fuse_ = Conv2d<T>("edsr.fuse", cfg.trunk_channels, cfg.trunk_channels, 3, rng);
        tail_ = Conv2d<T>("edsr.tail", cfg.trunk_channels,
                          cfg.tail_channels * cfg.upscale * cfg.upscale, 3, rng);
        head_ = Conv2d<T>("edsr.head", cfg.tail_channels, 1, 3, rng);
    }

    const EdsrConfig& config() const { return cfg_; }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> out;
        stem_.collect(out);
        for (size_t b = 0; b < block_conv1_.size(); ++b) {
            block_conv1_[b].collect(out);
            block_conv2_[b].collect(out);
        }
        fuse_.collect(out);
        tail_.collect(out);
        head_.collect(out);
        return out;
    }

    Tensor4<T> forward(const Tensor4<T>& x, bool want_grad) {
        Tensor4<T> s = stem_.forward(x, want_grad);
        Tensor4<T> e = s;
        const T scale = static_cast<T>(cfg_.residual_scale);
        for (size_t b = 0; b < block_conv1_.size(); ++b) {
            Tensor4<T> r = block_conv2_[b].forward(
                block_act_[b].forward(block_conv1_[b].forward(e, want_grad), want_grad), want_grad);
            for (size_t i = 0; i < e.data.size(); ++i) e.data[i] += scale * r.data[i];
        }
        Tensor4<T> f = fuse_.forward(e, want_grad);
        for (size_t i = 0; i < f.data.size(); ++i) f.data[i] += s.data[i]; // global skip
        Tensor4<T> t = tail_.forward(f, want_grad);
        return head_.forward(act_tail_.forward(shuffle_.forward(t), want_grad), want_grad);
    }

    Tensor4<T> backward(const Tensor4<T>& dy, bool need_dx = false) {
        Tensor4<T> d = act_tail_.backward(head_.backward(dy));
        d = tail_.backward(shuffle_.backward(d));
        Tensor4<T> ds = d; // global skip branch
        d = fuse_.backward(d);
        const T scale = static_cast<T>(cfg_.residual_scale);
        for (int b = static_cast<int>(block_conv1_.size()) - 1; b >= 0; --b) {
            Tensor4<T> dr = d;
            for (auto& v : dr.data) v *= scale;
            Tensor4<T> dmain =
                block_conv1_[b].backward(block_act_[b].backward(block_conv2_[b].backward(dr)));
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += dmain.data[i];
        }
        Tensor4<T> dstem = d;
        for (size_t i = 0; i < dstem.data.size(); ++i) dstem.data[i] += ds.data[i];
        return stem_.backward(dstem, need_dx);
    }

    void release_cache() {
        stem_.release_cache();
        for (size_t b = 0; b < block_conv1_.size(); ++b) {
            block_conv1_[b].release_cache();
            block_conv2_[b].release_cache();
            block_act_[b].release_cache();
        }
        fuse_.release_cache();
        tail_.release_cache();
        head_.release_cache();
        act_tail_.release_cache();
    }

private:
    EdsrConfig cfg_;
    Conv2d<T> stem_, fuse_, tail_, head_;
    std::vector<Conv2d<T>> block_conv1_, block_conv2_;
    std::vector<Swish<T>> block_act_;
    Swish<T> act_tail_;
    PixelShuffle<T> shuffle_{4};
};

} // namespace windsr::nn
