#include "schnet/kernels.hpp"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace schnet::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// Small problems are not worth the fork/join overhead.
constexpr std::size_t kParallelThreshold = 16 * 1024;
}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }

bool parallel_enabled() {
#ifdef _OPENMP
    return g_parallel.load();
#else
    return false;
#endif
}

void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t p, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c + i * m;
        for (std::size_t k = 0; k < m; ++k) ci[k] = 0.0;
        const double* ai = a + i * p;
        for (std::size_t j = 0; j < p; ++j) {
            const double aij = ai[j];
            const double* bj = b + j * m;
            for (std::size_t k = 0; k < m; ++k) ci[k] += aij * bj[k];
        }
    }
}

void matmul_omp(const double* a, const double* b, double* c,
                std::size_t n, std::size_t p, std::size_t m) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* ci = c + i * m;
        for (std::size_t k = 0; k < m; ++k) ci[k] = 0.0;
        const double* ai = a + i * p;
        for (std::size_t j = 0; j < p; ++j) {
            const double aij = ai[j];
            const double* bj = b + j * m;
            for (std::size_t k = 0; k < m; ++k) ci[k] += aij * bj[k];
        }
    }
#else
    matmul_serial(a, b, c, n, p, m);
#endif
}

void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t p, std::size_t m) {
    if (parallel_enabled() && n * p * m >= kParallelThreshold)
        matmul_omp(a, b, c, n, p, m);
    else
        matmul_serial(a, b, c, n, p, m);
}

void segment_sum_serial(const double* x, const std::int64_t* seg, double* out,
                        std::size_t n, std::size_t d, std::size_t nseg) {
    (void)nseg;
    for (std::size_t i = 0; i < n; ++i) {
        double* o = out + static_cast<std::size_t>(seg[i]) * d;
        const double* xi = x + i * d;
        for (std::size_t k = 0; k < d; ++k) o[k] += xi[k];
    }
}

// Parallel over feature columns: each output element still accumulates
// its inputs in row order, so the result is bit-identical to the serial
// kernel.
void segment_sum_omp(const double* x, const std::int64_t* seg, double* out,
                     std::size_t n, std::size_t d, std::size_t nseg) {
    (void)nseg;
#ifdef _OPENMP
    // Each thread owns a contiguous block of columns; accumulation per
    // output element stays in row order, matching the serial kernel bit
    // for bit.
#pragma omp parallel
    {
        const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
        const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
        const std::size_t bs = (d + nt - 1) / nt;
        const std::size_t k0 = tid * bs;
        const std::size_t k1 = std::min(d, k0 + bs);
        if (k0 < k1)
            for (std::size_t i = 0; i < n; ++i) {
                const double* src = x + i * d;
                double* dst = out + static_cast<std::size_t>(seg[i]) * d;
                for (std::size_t k = k0; k < k1; ++k) dst[k] += src[k];
            }
    }
#else
    segment_sum_serial(x, seg, out, n, d, nseg);
#endif
}

void segment_sum(const double* x, const std::int64_t* seg, double* out,
                 std::size_t n, std::size_t d, std::size_t nseg) {
    if (parallel_enabled() && n * d >= kParallelThreshold && d > 1)
        segment_sum_omp(x, seg, out, n, d, nseg);
    else
        segment_sum_serial(x, seg, out, n, d, nseg);
}

void gather_rows_serial(const double* x, const std::int64_t* idx, double* out,
                        std::size_t k, std::size_t d) {
    for (std::size_t q = 0; q < k; ++q) {
        const double* src = x + static_cast<std::size_t>(idx[q]) * d;
        double* dst = out + q * d;
        for (std::size_t c = 0; c < d; ++c) dst[c] = src[c];
    }
}

void gather_rows_omp(const double* x, const std::int64_t* idx, double* out,
                     std::size_t k, std::size_t d) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t qq = 0; qq < static_cast<std::int64_t>(k); ++qq) {
        const std::size_t q = static_cast<std::size_t>(qq);
        const double* src = x + static_cast<std::size_t>(idx[q]) * d;
        double* dst = out + q * d;
        for (std::size_t c = 0; c < d; ++c) dst[c] = src[c];
    }
#else
    gather_rows_serial(x, idx, out, k, d);
#endif
}

void gather_rows(const double* x, const std::int64_t* idx, double* out,
                 std::size_t k, std::size_t d) {
    if (parallel_enabled() && k * d >= kParallelThreshold)
        gather_rows_omp(x, idx, out, k, d);
    else
        gather_rows_serial(x, idx, out, k, d);
}

namespace {
inline double ew_apply(EwOp op, double a, double b) {
    switch (op) {
        case EwOp::add: return a + b;
        case EwOp::sub: return a - b;
        case EwOp::mul: return a * b;
        case EwOp::div_safe: return b == 0.0 ? 0.0 : a / b;
    }
    return 0.0;
}
}  // namespace

void ew_binary_serial(EwOp op, const double* a, const double* b, double* out,
                      std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = ew_apply(op, a[i], b[i]);
}

void ew_binary_omp(EwOp op, const double* a, const double* b, double* out,
                   std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        out[i] = ew_apply(op, a[i], b[i]);
#else
    ew_binary_serial(op, a, b, out, n);
#endif
}

void ew_binary(EwOp op, const double* a, const double* b, double* out,
               std::size_t n) {
    if (parallel_enabled() && n >= kParallelThreshold)
        ew_binary_omp(op, a, b, out, n);
    else
        ew_binary_serial(op, a, b, out, n);
}

}  // namespace schnet::kernels
