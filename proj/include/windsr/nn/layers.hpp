#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "windsr/nn/tensor.hpp"
#include "windsr/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace windsr::nn {

template <typename T>
struct Param {
    std::string name;
    std::vector<T> value;
    std::vector<T> grad;

    void resize(size_t n) {
        value.assign(n, T(0));
        grad.assign(n, T(0));
    }
    size_t size() const { return value.size(); }
};

// Batch-parallel helper. Work is split per image and any gradient
// contributions are reduced in image order afterwards, so results do not
// depend on the worker count.
template <typename F>
void parallel_images(int n, F&& fn) {
    int threads = std::min(nn_threads(), n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
    for (int i = 0; i < n; ++i) {
        enable_denormal_flush();
        fn(i);
    }
    (void)threads;
}

// 2-D convolution, stride 1, zero padding to keep the spatial size.
// Weights are stored [C_out x (C_in*k*k)]. Each image is packed once into a
// zero-padded plane buffer and the convolution runs as k*k shifted GEMM
// accumulations over that buffer; the pad ring keeps every shifted read
// exact, and only junk cells of the padded output ever touch a neighbouring
// plane, so no im2col matrix is materialized.
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::string name, int c_in, int c_out, int k, Rng& rng, bool zero_init = false)
        : name_(std::move(name)), c_in_(c_in), c_out_(c_out), k_(k) {
        weight_.name = name_ + ".weight";
        bias_.name = name_ + ".bias";
        weight_.resize(static_cast<size_t>(c_out) * c_in * k * k);
        bias_.resize(static_cast<size_t>(c_out));
        if (!zero_init) {
            // scaled-normal fan-in init
            double std = std::sqrt(2.0 / (static_cast<double>(c_in) * k * k));
            for (auto& v : weight_.value) v = static_cast<T>(std * rng.normal());
        }
    }

    int c_in() const { return c_in_; }
    int c_out() const { return c_out_; }
    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }

    void collect(std::vector<Param<T>*>& out) {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

    Tensor4<T> forward(const Tensor4<T>& x, bool want_grad) {
        if (x.c != c_in_) raise(errc::shape, name_ + ": input has " + std::to_string(x.c) +
                                                " channels, expected " + std::to_string(c_in_));
        if (want_grad) x_cache_ = x;
        Tensor4<T> y(x.n, c_out_, x.h, x.w);
        const int hw = x.h * x.w;
        if (k_ == 1) {
            parallel_images(x.n, [&](int ni) {
                gemm(false, false, c_out_, hw, c_in_, T(1), weight_.value.data(), c_in_,
                     x.image(ni), hw, T(0), y.image(ni), hw);
                add_bias(y.image(ni), hw);
            });
            return y;
        }
        const int pw = x.w + 2 * (k_ / 2);
        const size_t plane = padded_plane(x.h, x.w);
        const std::vector<std::vector<T>> taps = tap_weights();
        parallel_images(x.n, [&](int ni) {
            Scratch& s = scratch(plane);
            pack_padded(x.image(ni), x.h, x.w, c_in_, s.in.data() + plane);
            // accumulate one shifted GEMM per tap over the padded domain
            const int np = static_cast<int>(plane);
            for (int tap = 0; tap < k_ * k_; ++tap) {
                int di = tap / k_ - k_ / 2, dj = tap % k_ - k_ / 2;
                const T* shifted = s.in.data() + plane + di * pw + dj;
                gemm(false, false, c_out_, np, c_in_, T(1), taps[tap].data(), c_in_,
                     shifted, np, tap == 0 ? T(0) : T(1), s.out.data(), np);
            }
            unpack_padded(s.out.data(), x.h, x.w, c_out_, y.image(ni));
            add_bias(y.image(ni), hw);
        });
        return y;
    }

    // `need_dx` can be false for the first layer of a network, where no
    // gradient flows further back.
    Tensor4<T> backward(const Tensor4<T>& dy, bool need_dx = true) {
        const Tensor4<T>& x = x_cache_;
        const int hw = x.h * x.w;
        Tensor4<T> dx(need_dx ? x.n : 0, c_in_, x.h, x.w);
        std::vector<std::vector<T>> dw_per_image(x.n);
        std::vector<std::vector<T>> db_per_image(x.n);
        const int half = k_ / 2;
        const int pw = x.w + 2 * half;
        const size_t plane = padded_plane(x.h, x.w);
        const int np = static_cast<int>(plane);
        const std::vector<std::vector<T>> taps = k_ == 1 ? std::vector<std::vector<T>>() : tap_weights();
        parallel_images(x.n, [&](int ni) {
            dw_per_image[ni].assign(weight_.size(), T(0));
            db_per_image[ni].resize(bias_.size());
            for (int co = 0; co < c_out_; ++co) {
                const T* row = dy.channel(ni, co);
                T acc = T(0);
                for (int i = 0; i < hw; ++i) acc += row[i];
                db_per_image[ni][co] = acc;
            }
            if (k_ == 1) {
                // dW = dY * X^T, dX = W^T * dY
                gemm(false, true, c_out_, c_in_, hw, T(1), dy.image(ni), hw, x.image(ni), hw, T(0),
                     dw_per_image[ni].data(), c_in_);
                if (need_dx)
                    gemm(true, false, c_in_, hw, c_out_, T(1), weight_.value.data(), c_in_,
                         dy.image(ni), hw, T(0), dx.image(ni), hw);
                return;
            }
            Scratch& s = scratch(plane);
            pack_padded(x.image(ni), x.h, x.w, c_in_, s.in.data() + plane);
            pack_padded(dy.image(ni), x.h, x.w, c_out_, s.dy.data() + plane);
            std::vector<T> dw_tap(static_cast<size_t>(c_out_) * c_in_);
            for (int tap = 0; tap < k_ * k_; ++tap) {
                int di = tap / k_ - half, dj = tap % k_ - half;
                const T* shifted = s.in.data() + plane + di * pw + dj;
                // dW_tap = dYpad * Xpad(shifted)^T; the zero ring of dYpad
                // cancels every junk and cross-plane term exactly.
                gemm(false, true, c_out_, c_in_, np, T(1), s.dy.data() + plane, np, shifted, np,
                     T(0), dw_tap.data(), c_in_);
                scatter_tap_grad(dw_per_image[ni], dw_tap, tap);
                if (need_dx) {
                    // dXpad += W_tap^T * dYpad shifted the other way
                    const T* dy_shift = s.dy.data() + plane - di * pw - dj;
                    gemm(true, false, c_in_, np, c_out_, T(1), taps[tap].data(), c_in_,
                         dy_shift, np, tap == 0 ? T(0) : T(1), s.out.data(), np);
                }
            }
            if (need_dx) unpack_padded(s.out.data(), x.h, x.w, c_in_, dx.image(ni));
        });
        for (int ni = 0; ni < x.n; ++ni) {
            for (size_t i = 0; i < weight_.size(); ++i) weight_.grad[i] += dw_per_image[ni][i];
            for (size_t i = 0; i < bias_.size(); ++i) bias_.grad[i] += db_per_image[ni][i];
        }
        return dx;
    }

    void release_cache() { x_cache_ = Tensor4<T>(); }

private:
    struct Scratch {
        std::vector<T> in;  // padded input planes with one guard plane each side
        std::vector<T> dy;  // padded upstream-gradient planes
        std::vector<T> out; // padded accumulator planes
    };

    // Guard space of one full plane before and after covers every tap shift.
    Scratch& scratch(size_t plane) const {
        static thread_local Scratch s;
        size_t cap = plane * (static_cast<size_t>(std::max(c_in_, c_out_)) + 2);
        if (s.in.size() < cap) {
            s.in.assign(cap, T(0));
            s.dy.assign(cap, T(0));
            s.out.assign(cap, T(0));
        }
        return s;
    }

    size_t padded_plane(int h, int w) const {
        return static_cast<size_t>(h + 2 * (k_ / 2)) * (w + 2 * (k_ / 2));
    }

    // Weight slices per tap, reordered to [C_out x C_in]. Rebuilt each call:
    // the optimizer mutates the flat weights between passes.
    std::vector<std::vector<T>> tap_weights() const {
        const int kk = k_ * k_;
        std::vector<std::vector<T>> taps(kk, std::vector<T>(static_cast<size_t>(c_out_) * c_in_));
        for (int t = 0; t < kk; ++t)
            for (int co = 0; co < c_out_; ++co)
                for (int ci = 0; ci < c_in_; ++ci)
                    taps[t][static_cast<size_t>(co) * c_in_ + ci] =
                        weight_.value[(static_cast<size_t>(co) * c_in_ + ci) * kk + t];
        return taps;
    }

    void scatter_tap_grad(std::vector<T>& dw, const std::vector<T>& dw_tap, int tap) const {
        const int kk = k_ * k_;
        for (int co = 0; co < c_out_; ++co)
            for (int ci = 0; ci < c_in_; ++ci)
                dw[(static_cast<size_t>(co) * c_in_ + ci) * kk + tap] +=
                    dw_tap[static_cast<size_t>(co) * c_in_ + ci];
    }

    void pack_padded(const T* x, int h, int w, int channels, T* padded) const {
        const int half = k_ / 2;
        const int pw = w + 2 * half;
        const int ph = h + 2 * half;
        const size_t plane = static_cast<size_t>(ph) * pw;
        for (int ci = 0; ci < channels; ++ci) {
            T* dst = padded + ci * plane;
            std::fill(dst, dst + static_cast<size_t>(half) * pw, T(0));
            for (int i = 0; i < h; ++i) {
                T* row = dst + static_cast<size_t>(i + half) * pw;
                std::fill(row, row + half, T(0));
                std::copy(x + static_cast<size_t>(ci) * h * w + static_cast<size_t>(i) * w,
                          x + static_cast<size_t>(ci) * h * w + static_cast<size_t>(i + 1) * w,
                          row + half);
                std::fill(row + half + w, row + pw, T(0));
            }
            std::fill(dst + static_cast<size_t>(half + h) * pw, dst + plane, T(0));
        }
    }

    void unpack_padded(const T* padded, int h, int w, int channels, T* out) const {
        const int half = k_ / 2;
        const int pw = w + 2 * half;
        const size_t plane = static_cast<size_t>(h + 2 * half) * pw;
        for (int ci = 0; ci < channels; ++ci) {
            const T* src = padded + ci * plane;
            for (int i = 0; i < h; ++i)
                std::copy(src + static_cast<size_t>(i + half) * pw + half,
                          src + static_cast<size_t>(i + half) * pw + half + w,
                          out + static_cast<size_t>(ci) * h * w + static_cast<size_t>(i) * w);
        }
    }

    void add_bias(T* image, int hw) const {
        for (int co = 0; co < c_out_; ++co) {
            T b = bias_.value[co];
            T* row = image + static_cast<size_t>(co) * hw;
            for (int i = 0; i < hw; ++i) row[i] += b;
        }
    }

    std::string name_;
    int c_in_ = 0, c_out_ = 0, k_ = 3;
    Param<T> weight_;
    Param<T> bias_;
    Tensor4<T> x_cache_;
};

// x * sigmoid(x)
template <typename T>
class Swish {
public:
    Tensor4<T> forward(const Tensor4<T>& x, bool want_grad) {
        if (want_grad) x_cache_ = x;
        Tensor4<T> y = x;
        for (auto& v : y.data) v = v / (T(1) + std::exp(-v));
        return y;
    }
    Tensor4<T> backward(const Tensor4<T>& dy) {
        Tensor4<T> dx = dy;
        for (size_t i = 0; i < dx.data.size(); ++i) {
            T x = x_cache_.data[i];
            T s = T(1) / (T(1) + std::exp(-x));
            dx.data[i] *= s * (T(1) + x * (T(1) - s));
        }
        return dx;
    }
    void release_cache() { x_cache_ = Tensor4<T>(); }

private:
    Tensor4<T> x_cache_;
};

// 2x2 average pooling, stride 2; spatial size must be even.
template <typename T>
class AvgPool2 {
public:
    Tensor4<T> forward(const Tensor4<T>& x) {
        if (x.h % 2 != 0 || x.w % 2 != 0) raise(errc::shape, "avgpool needs even spatial size");
        Tensor4<T> y(x.n, x.c, x.h / 2, x.w / 2);
        for (int ni = 0; ni < x.n; ++ni)
            for (int ci = 0; ci < x.c; ++ci) {
                const T* src = x.channel(ni, ci);
                T* dst = y.channel(ni, ci);
                for (int i = 0; i < y.h; ++i)
                    for (int j = 0; j < y.w; ++j) {
                        const T* r0 = src + static_cast<size_t>(2 * i) * x.w + 2 * j;
                        const T* r1 = r0 + x.w;
                        dst[static_cast<size_t>(i) * y.w + j] =
                            (r0[0] + r0[1] + r1[0] + r1[1]) * T(0.25);
                    }
            }
        return y;
    }
    Tensor4<T> backward(const Tensor4<T>& dy) {
        Tensor4<T> dx(dy.n, dy.c, dy.h * 2, dy.w * 2);
        for (int ni = 0; ni < dy.n; ++ni)
            for (int ci = 0; ci < dy.c; ++ci) {
                const T* src = dy.channel(ni, ci);
                T* dst = dx.channel(ni, ci);
                for (int i = 0; i < dy.h; ++i)
                    for (int j = 0; j < dy.w; ++j) {
                        T g = src[static_cast<size_t>(i) * dy.w + j] * T(0.25);
                        T* r0 = dst + static_cast<size_t>(2 * i) * dx.w + 2 * j;
                        T* r1 = r0 + dx.w;
                        r0[0] += g;
                        r0[1] += g;
                        r1[0] += g;
                        r1[1] += g;
                    }
            }
        return dx;
    }
};

// Bilinear x2 upsampling with half-pixel centers, clamped at the border.
template <typename T>
class BilinearUp2 {
public:
    Tensor4<T> forward(const Tensor4<T>& x) {
        Tensor4<T> y(x.n, x.c, x.h * 2, x.w * 2);
        auto taps = make_taps(x.h);
        auto taps_w = x.h == x.w ? taps : make_taps(x.w);
        for (int ni = 0; ni < x.n; ++ni)
            for (int ci = 0; ci < x.c; ++ci) {
                const T* src = x.channel(ni, ci);
                T* dst = y.channel(ni, ci);
                for (int i = 0; i < y.h; ++i) {
                    const auto& ti = taps[i];
                    for (int j = 0; j < y.w; ++j) {
                        const auto& tj = taps_w[j];
                        dst[static_cast<size_t>(i) * y.w + j] =
                            ti.w0 * (tj.w0 * src[static_cast<size_t>(ti.i0) * x.w + tj.i0] +
                                     tj.w1 * src[static_cast<size_t>(ti.i0) * x.w + tj.i1]) +
                            ti.w1 * (tj.w0 * src[static_cast<size_t>(ti.i1) * x.w + tj.i0] +
                                     tj.w1 * src[static_cast<size_t>(ti.i1) * x.w + tj.i1]);
                    }
                }
            }
        return y;
    }
    Tensor4<T> backward(const Tensor4<T>& dy) {
        int h = dy.h / 2, w = dy.w / 2;
        Tensor4<T> dx(dy.n, dy.c, h, w);
        auto taps = make_taps(h);
        auto taps_w = h == w ? taps : make_taps(w);
        for (int ni = 0; ni < dy.n; ++ni)
            for (int ci = 0; ci < dy.c; ++ci) {
                const T* src = dy.channel(ni, ci);
                T* dst = dx.channel(ni, ci);
                for (int i = 0; i < dy.h; ++i) {
                    const auto& ti = taps[i];
                    for (int j = 0; j < dy.w; ++j) {
                        const auto& tj = taps_w[j];
                        T g = src[static_cast<size_t>(i) * dy.w + j];
                        dst[static_cast<size_t>(ti.i0) * w + tj.i0] += ti.w0 * tj.w0 * g;
                        dst[static_cast<size_t>(ti.i0) * w + tj.i1] += ti.w0 * tj.w1 * g;
                        dst[static_cast<size_t>(ti.i1) * w + tj.i0] += ti.w1 * tj.w0 * g;
                        dst[static_cast<size_t>(ti.i1) * w + tj.i1] += ti.w1 * tj.w1 * g;
                    }
                }
            }
        return dx;
    }

private:
    struct Tap {
        int i0, i1;
        T w0, w1;
    };
    std::vector<Tap> make_taps(int size_in) const {
        std::vector<Tap> taps(static_cast<size_t>(size_in) * 2);
        for (int i = 0; i < 2 * size_in; ++i) {
            double src = (i + 0.5) / 2.0 - 0.5;
            int base = static_cast<int>(std::floor(src));
            double f = src - base;
            Tap t;
            t.i0 = std::clamp(base, 0, size_in - 1);
            t.i1 = std::clamp(base + 1, 0, size_in - 1);
            t.w0 = static_cast<T>(1.0 - f);
            t.w1 = static_cast<T>(f);
            taps[i] = t;
        }
        return taps;
    }
};

// Rearranges r^2 channel groups into an r-times larger field.
template <typename T>
class PixelShuffle {
public:
    explicit PixelShuffle(int r = 2) : r_(r) {}
    Tensor4<T> forward(const Tensor4<T>& x) {
        if (x.c % (r_ * r_) != 0) raise(errc::shape, "pixel shuffle needs C divisible by r^2");
        int c_out = x.c / (r_ * r_);
        Tensor4<T> y(x.n, c_out, x.h * r_, x.w * r_);
        for (int ni = 0; ni < x.n; ++ni)
            for (int co = 0; co < c_out; ++co) {
                T* dst = y.channel(ni, co);
                for (int i = 0; i < y.h; ++i)
                    for (int j = 0; j < y.w; ++j) {
                        int ci = co * r_ * r_ + (i % r_) * r_ + (j % r_);
                        dst[static_cast<size_t>(i) * y.w + j] =
                            x.channel(ni, ci)[static_cast<size_t>(i / r_) * x.w + j / r_];
                    }
            }
        return y;
    }
    Tensor4<T> backward(const Tensor4<T>& dy) {
        int c_in = dy.c * r_ * r_;
        Tensor4<T> dx(dy.n, c_in, dy.h / r_, dy.w / r_);
        for (int ni = 0; ni < dy.n; ++ni)
            for (int co = 0; co < dy.c; ++co) {
                const T* src = dy.channel(ni, co);
                for (int i = 0; i < dy.h; ++i)
                    for (int j = 0; j < dy.w; ++j) {
                        int ci = co * r_ * r_ + (i % r_) * r_ + (j % r_);
                        dx.channel(ni, ci)[static_cast<size_t>(i / r_) * dx.w + j / r_] =
                            src[static_cast<size_t>(i) * dy.w + j];
                    }
            }
        return dx;
    }

private:
    int r_;
};

// Pre-activation-free residual unit: y = conv2(swish(conv1(x))) + proj(x),
// with a 1x1 projection only when the channel count changes.
template <typename T>
class ResBlock {
public:
    ResBlock() = default;
    ResBlock(const std::string& name, int c_in, int c_out, Rng& rng)
        : conv1_(name + ".conv1", c_in, c_out, 3, rng), conv2_(name + ".conv2", c_out, c_out, 3, rng) {
        if (c_in != c_out) proj_ = Conv2d<T>(name + ".proj", c_in, c_out, 1, rng);
        has_proj_ = c_in != c_out;
    }

    void collect(std::vector<Param<T>*>& out) {
        conv1_.collect(out);
        conv2_.collect(out);
        if (has_proj_) proj_.collect(out);
    }

    Tensor4<T> forward(const Tensor4<T>& x, bool want_grad) {
        Tensor4<T> y = conv2_.forward(act_.forward(conv1_.forward(x, want_grad), want_grad), want_grad);
        Tensor4<T> shortcut = has_proj_ ? proj_.forward(x, want_grad) : x;
        for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += shortcut.data[i];
        return y;
    }

    Tensor4<T> backward(const Tensor4<T>& dy) {
        Tensor4<T> dx = conv1_.backward(act_.backward(conv2_.backward(dy)));
        if (has_proj_) {
            Tensor4<T> ds = proj_.backward(dy);
            for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
        } else {
            for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dy.data[i];
        }
        return dx;
    }

    void release_cache() {
        conv1_.release_cache();
        conv2_.release_cache();
        act_.release_cache();
        if (has_proj_) proj_.release_cache();
    }

private:
    Conv2d<T> conv1_, conv2_;
    Conv2d<T> proj_;
    Swish<T> act_;
    bool has_proj_ = false;
};

// Channel concatenation of two tensors with equal batch and spatial dims.
template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) raise(errc::shape, "concat shape mismatch");
    Tensor4<T> y(a.n, a.c + b.c, a.h, a.w);
    for (int ni = 0; ni < a.n; ++ni) {
        std::copy(a.image(ni), a.image(ni) + a.c * a.plane(), y.image(ni));
        std::copy(b.image(ni), b.image(ni) + b.c * b.plane(), y.image(ni) + a.c * a.plane());
    }
    return y;
}

template <typename T>
void split_channels(const Tensor4<T>& dy, Tensor4<T>& da, Tensor4<T>& db, int c_a) {
    da = Tensor4<T>(dy.n, c_a, dy.h, dy.w);
    db = Tensor4<T>(dy.n, dy.c - c_a, dy.h, dy.w);
    for (int ni = 0; ni < dy.n; ++ni) {
        std::copy(dy.image(ni), dy.image(ni) + da.c * dy.plane(), da.image(ni));
        std::copy(dy.image(ni) + da.c * dy.plane(), dy.image(ni) + dy.c * dy.plane(), db.image(ni));
    }
}

} // namespace windsr::nn
