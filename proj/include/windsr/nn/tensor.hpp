#pragma once

#include <cstddef>
#include <vector>

#include "windsr/error.hpp"

namespace windsr::nn {

// Dense NCHW tensor. Templated on the scalar so the same networks run in
// float for production and double for finite-difference gradient checks.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    size_t size() const { return data.size(); }
    size_t plane() const { return static_cast<size_t>(h) * w; }
    T* image(int ni) { return data.data() + static_cast<size_t>(ni) * c * plane(); }
    const T* image(int ni) const { return data.data() + static_cast<size_t>(ni) * c * plane(); }
    T* channel(int ni, int ci) { return image(ni) + static_cast<size_t>(ci) * plane(); }
    const T* channel(int ni, int ci) const { return image(ni) + static_cast<size_t>(ci) * plane(); }

    bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    void zero() { std::fill(data.begin(), data.end(), T(0)); }
};

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc);

// Worker-thread cap for batch-parallel layer execution. Results are
// independent of the cap: per-image work is reduced in image order.
void set_nn_threads(int threads);
int nn_threads();

// Flushes denormals on the calling thread (x86 FTZ/DAZ). Gradient chains
// through near-zero-initialized heads otherwise fill tensors with
// subnormals and slow the GEMMs several-fold. Idempotent per thread.
void enable_denormal_flush();

} // namespace windsr::nn
