#pragma once

#include <memory>

#include "windsr/nn/layers.hpp"

namespace windsr::nn {

// U-Net body shared by the diffusion denoiser and the residual U-Net
// regressor. Channel widths grow with depth; every level holds
// `blocks_per_level` residual units; downsampling is 2x2 average pooling
// and upsampling bilinear, with skip concatenation at matching resolutions.
struct UNetConfig {
    int in_channels = 5;
    int out_channels = 1;
    std::vector<int> channels = {64, 128, 256, 384};
    int blocks_per_level = 2;

    int depth() const { return static_cast<int>(channels.size()); }

    void validate() const {
        if (channels.empty()) raise(errc::invalid_argument, "unet needs at least one level");
        for (size_t i = 1; i < channels.size(); ++i)
            if (channels[i] <= channels[i - 1])
                raise(errc::invalid_argument, "unet channels must be strictly increasing");
        if (blocks_per_level < 1) raise(errc::invalid_argument, "unet needs >= 1 block per level");
        if (in_channels < 1 || out_channels < 1) raise(errc::invalid_argument, "bad channel counts");
    }
};

template <typename T>
class UNet {
public:
    UNet() = default;
    UNet(const UNetConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(init_seed);
        const auto& ch = cfg_.channels;
        stem_ = Conv2d<T>("stem", cfg_.in_channels, ch[0], 1, rng);
        int prev = ch[0];
        for (int li = 0; li < cfg_.depth(); ++li) {
            std::vector<ResBlock<T>> blocks;
            for (int b = 0; b < cfg_.blocks_per_level; ++b) {
                blocks.emplace_back("down" + std::to_string(li) + ".b" + std::to_string(b),
                                    b == 0 ? prev : ch[li], ch[li], rng);
            }
            down_.push_back(std::move(blocks));
            prev = ch[li];
        }
        for (int li = cfg_.depth() - 1; li >= 0; --li) {
            std::vector<ResBlock<T>> blocks;
            for (int b = 0; b < cfg_.blocks_per_level; ++b) {
                int c_in = b == 0 ? prev + ch[li] : ch[li];
                blocks.emplace_back("up" + std::to_string(li) + ".b" + std::to_string(b), c_in,
                                    ch[li], rng);
            }
            up_.push_back(std::move(blocks));
            prev = ch[li];
        }
        head_ = Conv2d<T>("head", ch[0], cfg_.out_channels, 1, rng, /*zero_init=*/true);
    }

    const UNetConfig& config() const { return cfg_; }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> out;
        stem_.collect(out);
        for (auto& level : down_)
            for (auto& b : level) b.collect(out);
        for (auto& level : up_)
            for (auto& b : level) b.collect(out);
        head_.collect(out);
        return out;
    }

    // Input spatial size must be divisible by 2^depth.
    Tensor4<T> forward(const Tensor4<T>& x, bool want_grad) {
        int mask = (1 << cfg_.depth()) - 1;
        if ((x.h & mask) != 0 || (x.w & mask) != 0)
            raise(errc::shape, "unet input spatial size must be divisible by 2^depth");
        Tensor4<T> e = stem_.forward(x, want_grad);
        skips_.clear();
        skip_channels_.assign(cfg_.depth(), 0);
        for (int li = 0; li < cfg_.depth(); ++li) {
            for (auto& b : down_[li]) e = b.forward(e, want_grad);
            skips_.push_back(e);
            e = pool_.forward(e);
        }
        for (int ui = 0; ui < cfg_.depth(); ++ui) {
            int li = cfg_.depth() - 1 - ui;
            e = up_sample_.forward(e);
            e = concat_channels(e, skips_[li]);
            skip_channels_[ui] = skips_[li].c;
            skips_[li] = Tensor4<T>(); // values are not needed past the concat
            for (auto& b : up_[ui]) e = b.forward(e, want_grad);
        }
        skips_.clear();
        return head_.forward(e, want_grad);
    }

    Tensor4<T> backward(const Tensor4<T>& dy, bool need_dx = false) {
        Tensor4<T> d = head_.backward(dy);
        std::vector<Tensor4<T>> skip_grads(cfg_.depth());
        for (int ui = cfg_.depth() - 1; ui >= 0; --ui) {
            int li = cfg_.depth() - 1 - ui;
            for (int b = cfg_.blocks_per_level - 1; b >= 0; --b) d = up_[ui][b].backward(d);
            Tensor4<T> d_below, d_skip;
            split_channels(d, d_below, d_skip, d.c - skip_channels_[ui]);
            skip_grads[li] = std::move(d_skip);
            d = up_sample_.backward(d_below);
        }
        for (int li = cfg_.depth() - 1; li >= 0; --li) {
            d = pool_.backward(d);
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += skip_grads[li].data[i];
            for (int b = cfg_.blocks_per_level - 1; b >= 0; --b) d = down_[li][b].backward(d);
        }
        return stem_.backward(d, need_dx);
    }

    void release_cache() {
        stem_.release_cache();
        head_.release_cache();
        for (auto& level : down_)
            for (auto& b : level) b.release_cache();
        for (auto& level : up_)
            for (auto& b : level) b.release_cache();
        skips_.clear();
    }

private:
    UNetConfig cfg_;
    Conv2d<T> stem_, head_;
    std::vector<std::vector<ResBlock<T>>> down_;
    std::vector<std::vector<ResBlock<T>>> up_; // stored bottom-first
    AvgPool2<T> pool_;
    BilinearUp2<T> up_sample_;
    std::vector<Tensor4<T>> skips_;
    std::vector<int> skip_channels_;
};

} // namespace windsr::nn
