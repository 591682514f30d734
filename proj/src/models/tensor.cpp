#include "windsr/nn/tensor.hpp"

#include <cblas.h>
#include <malloc.h>
#include <xmmintrin.h>

#include <algorithm>
#include <thread>

namespace windsr::nn {

namespace {
int g_threads = 0;

// BLAS must not spin up its own pool: batch-level workers already own the
// cores, and two schedulers fighting over 2 cores serializes everything.
// The mmap threshold is raised because activation tensors are multi-MB and
// reallocated every pass; glibc would otherwise mmap/munmap each one and
// every touch would fault on fresh zero pages.
struct RuntimeInit {
    RuntimeInit() {
        openblas_set_num_threads(1);
        mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
        mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
        enable_denormal_flush();
    }
} g_runtime_init;
}

void enable_denormal_flush() {
#if defined(__x86_64__) || defined(__i386__)
    static thread_local bool done = false;
    if (!done) {
        _mm_setcsr(_mm_getcsr() | 0x8040); // FTZ | DAZ
        done = true;
    }
#endif
}

void set_nn_threads(int threads) {
    g_threads = std::max(0, threads);
    // BLAS stays single-threaded; parallelism lives at the batch level where
    // partitioning is explicit and reduction order fixed.
    openblas_set_num_threads(1);
}

int nn_threads() {
    if (g_threads > 0) return g_threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

} // namespace windsr::nn
