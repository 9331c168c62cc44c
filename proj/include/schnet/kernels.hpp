#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace schnet::kernels {

// Runtime switch between the serial reference kernels and the OpenMP
// versions. Both produce bit-identical results: parallel loops are split
// over independent output elements and every accumulation runs in the
// same order as the serial code.
void set_parallel(bool enabled);
bool parallel_enabled();

// C[n x m] = A[n x p] * B[p x m], row-major.
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t n, std::size_t p, std::size_t m);
void matmul_omp(const double* a, const double* b, double* c,
                std::size_t n, std::size_t p, std::size_t m);
void matmul(const double* a, const double* b, double* c,
            std::size_t n, std::size_t p, std::size_t m);

// out[nseg x d] += scatter rows of x[n x d] by segment id (unsorted ids
// allowed). out must be zero-initialized by the caller.
void segment_sum_serial(const double* x, const std::int64_t* seg, double* out,
                        std::size_t n, std::size_t d, std::size_t nseg);
void segment_sum_omp(const double* x, const std::int64_t* seg, double* out,
                     std::size_t n, std::size_t d, std::size_t nseg);
void segment_sum(const double* x, const std::int64_t* seg, double* out,
                 std::size_t n, std::size_t d, std::size_t nseg);

// out[k x d], row q = x[idx[q]].
void gather_rows_serial(const double* x, const std::int64_t* idx, double* out,
                        std::size_t k, std::size_t d);
void gather_rows_omp(const double* x, const std::int64_t* idx, double* out,
                     std::size_t k, std::size_t d);
void gather_rows(const double* x, const std::int64_t* idx, double* out,
                 std::size_t k, std::size_t d);

enum class EwOp { add, sub, mul, div_safe };

// Element-wise binary op; div_safe maps x/0 to 0.
void ew_binary_serial(EwOp op, const double* a, const double* b, double* out,
                      std::size_t n);
void ew_binary_omp(EwOp op, const double* a, const double* b, double* out,
                   std::size_t n);
void ew_binary(EwOp op, const double* a, const double* b, double* out,
               std::size_t n);

}  // namespace schnet::kernels
