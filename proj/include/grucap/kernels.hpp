#pragma once

#include <cstddef>

// Dense double-precision kernels behind the tensor ops.
//
// Every kernel exists twice: kernels::serial is the plain reference
// implementation, kernels::parallel adds OpenMP worksharing over
// independent output elements. The two orderings of floating point
// arithmetic are identical (each output element is produced by exactly
// one thread, with the same inner-loop order), so results agree
// bit-for-bit regardless of thread count. tests/test_kernels.cpp checks
// that equivalence; tools/bench_kernels.cpp compares their speed.
//
// The unqualified entry points dispatch on a process-wide switch plus a
// work-size cutoff so tiny operands never pay the fork/join overhead.

namespace grucap::kernels {

// All matrices are row-major.
// accumulate == false: out is overwritten. accumulate == true: out += result.

namespace serial {

void gemm_nn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// out[m x n] = a[m x k] * b[n x k]^T
void gemm_nt(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// out[k x n] = a[m x k]^T * b[m x n]
void gemm_tn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// y[m] = a[m x n] * x[n]
void gemv(const double* a, const double* x, double* y,
          std::size_t m, std::size_t n, bool accumulate);
// y[n] = a[m x n]^T * x[m]
void gemv_t(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n, bool accumulate);
// a[m x n] += x[m] * y[n]^T
void outer_acc(const double* x, const double* y, double* a,
               std::size_t m, std::size_t n);

void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void add_acc(const double* a, double* out, std::size_t n);          // out += a
void scale_acc(const double* a, double s, double* out, std::size_t n);  // out += s*a
void mul_acc(const double* a, const double* b, double* out, std::size_t n);  // out += a.*b

void sigmoid(const double* x, double* y, std::size_t n);
void tanh_eval(const double* x, double* y, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
// gx += g .* y .* (1-y), y = sigmoid output
void sigmoid_grad_acc(const double* g, const double* y, double* gx, std::size_t n);
// gx += g .* (1 - y^2), y = tanh output
void tanh_grad_acc(const double* g, const double* y, double* gx, std::size_t n);
// gx += g where x > 0
void relu_grad_acc(const double* g, const double* x, double* gx, std::size_t n);

}  // namespace serial

namespace parallel {

void gemm_nn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemv(const double* a, const double* x, double* y,
          std::size_t m, std::size_t n, bool accumulate);
void gemv_t(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n, bool accumulate);
void outer_acc(const double* x, const double* y, double* a,
               std::size_t m, std::size_t n);

void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void add_acc(const double* a, double* out, std::size_t n);
void scale_acc(const double* a, double s, double* out, std::size_t n);
void mul_acc(const double* a, const double* b, double* out, std::size_t n);

void sigmoid(const double* x, double* y, std::size_t n);
void tanh_eval(const double* x, double* y, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void sigmoid_grad_acc(const double* g, const double* y, double* gx, std::size_t n);
void tanh_grad_acc(const double* g, const double* y, double* gx, std::size_t n);
void relu_grad_acc(const double* g, const double* x, double* gx, std::size_t n);

}  // namespace parallel

/// Process-wide backend switch (default: parallel when built with OpenMP).
void set_parallel(bool enabled);
bool parallel_enabled();

/// Work-size threshold below which the dispatchers always run serially.
inline constexpr std::size_t kParallelCutoff = 64 * 1024;

// Dispatching entry points used by the tensor layer.
void gemm_nn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemv(const double* a, const double* x, double* y,
          std::size_t m, std::size_t n, bool accumulate);
void gemv_t(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n, bool accumulate);
void outer_acc(const double* x, const double* y, double* a,
               std::size_t m, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void add_acc(const double* a, double* out, std::size_t n);
void scale_acc(const double* a, double s, double* out, std::size_t n);
void mul_acc(const double* a, const double* b, double* out, std::size_t n);
void sigmoid(const double* x, double* y, std::size_t n);
void tanh_eval(const double* x, double* y, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void sigmoid_grad_acc(const double* g, const double* y, double* gx, std::size_t n);
void tanh_grad_acc(const double* g, const double* y, double* gx, std::size_t n);
void relu_grad_acc(const double* g, const double* x, double* gx, std::size_t n);

}  // namespace grucap::kernels
