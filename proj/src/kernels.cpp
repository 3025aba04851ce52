#include "grucap/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>

namespace grucap::kernels {

namespace {

#ifdef _OPENMP
std::atomic<bool> g_parallel{true};
#else
std::atomic<bool> g_parallel{false};
#endif

// sigmoid without overflow for large |x|
inline double sigmoid1(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------

namespace serial {

void gemm_nn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a[i * k + p] * b[p * n + j];
            }
            if (accumulate) {
                out[i * n + j] += acc;
            } else {
                out[i * n + j] = acc;
            }
        }
    }
}

void gemm_nt(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a[i * k + p] * b[j * k + p];
            }
            if (accumulate) {
                out[i * n + j] += acc;
            } else {
                out[i * n + j] = acc;
            }
        }
    }
}

void gemm_tn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < m; ++p) {
                acc += a[p * k + i] * b[p * n + j];
            }
            if (accumulate) {
                out[i * n + j] += acc;
            } else {
                out[i * n + j] = acc;
            }
        }
    }
}

void gemv(const double* a, const double* x, double* y,
          std::size_t m, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += a[i * n + j] * x[j];
        }
        if (accumulate) {
            y[i] += acc;
        } else {
            y[i] = acc;
        }
    }
}

void gemv_t(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n, bool accumulate) {
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            acc += a[i * n + j] * x[i];
        }
        if (accumulate) {
            y[j] += acc;
        } else {
            y[j] = acc;
        }
    }
}

void outer_acc(const double* x, const double* y, double* a,
               std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a[i * n + j] += x[i] * y[j];
        }
    }
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = s * a[i];
}

void add_acc(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += a[i];
}

void scale_acc(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += s * a[i];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void sigmoid(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = sigmoid1(x[i]);
}

void tanh_eval(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void relu(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void sigmoid_grad_acc(const double* g, const double* y, double* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
}

void tanh_grad_acc(const double* g, const double* y, double* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
}

void relu_grad_acc(const double* g, const double* x, double* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) gx[i] += g[i];
    }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP worksharing over independent output elements. Loop bodies match the
// serial reference exactly, so outputs are bit-identical for any thread count.
// ---------------------------------------------------------------------------

namespace parallel {

void gemm_nn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a[i * k + p] * b[p * n + j];
            }
            if (accumulate) {
                out[i * n + j] += acc;
            } else {
                out[i * n + j] = acc;
            }
        }
    }
}

void gemm_nt(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a[i * k + p] * b[j * k + p];
            }
            if (accumulate) {
                out[i * n + j] += acc;
            } else {
                out[i * n + j] = acc;
            }
        }
    }
}

void gemm_tn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(k); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < m; ++p) {
                acc += a[p * k + i] * b[p * n + j];
            }
            if (accumulate) {
                out[i * n + j] += acc;
            } else {
                out[i * n + j] = acc;
            }
        }
    }
}

void gemv(const double* a, const double* x, double* y,
          std::size_t m, std::size_t n, bool accumulate) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += a[i * n + j] * x[j];
        }
        if (accumulate) {
            y[i] += acc;
        } else {
            y[i] = acc;
        }
    }
}

void gemv_t(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n, bool accumulate) {
#pragma omp parallel for
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(n); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            acc += a[i * n + j] * x[i];
        }
        if (accumulate) {
            y[j] += acc;
        } else {
            y[j] = acc;
        }
    }
}

void outer_acc(const double* x, const double* y, double* a,
               std::size_t m, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a[i * n + j] += x[i] * y[j];
        }
    }
}

void add(const double* a, const double* b, double* out, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] = a[i] * b[i];
}

void scale(const double* a, double s, double* out, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] = s * a[i];
}

void add_acc(const double* a, double* out, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] += a[i];
}

void scale_acc(const double* a, double s, double* out, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] += s * a[i];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] += a[i] * b[i];
}

void sigmoid(const double* x, double* y, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) y[i] = sigmoid1(x[i]);
}

void tanh_eval(const double* x, double* y, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) y[i] = std::tanh(x[i]);
}

void relu(const double* x, double* y, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void sigmoid_grad_acc(const double* g, const double* y, double* gx, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
}

void tanh_grad_acc(const double* g, const double* y, double* gx, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
}

void relu_grad_acc(const double* g, const double* x, double* gx, std::size_t n) {
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        if (x[i] > 0.0) gx[i] += g[i];
    }
}

}  // namespace parallel

// ---------------------------------------------------------------------------
// dispatchers
// ---------------------------------------------------------------------------

namespace {

inline bool go_parallel(std::size_t work) {
    return g_parallel.load(std::memory_order_relaxed) && work >= kParallelCutoff;
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (go_parallel(m * k * n)) {
        parallel::gemm_nn(a, b, out, m, k, n, accumulate);
    } else {
        serial::gemm_nn(a, b, out, m, k, n, accumulate);
    }
}

void gemm_nt(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (go_parallel(m * k * n)) {
        parallel::gemm_nt(a, b, out, m, k, n, accumulate);
    } else {
        serial::gemm_nt(a, b, out, m, k, n, accumulate);
    }
}

void gemm_tn(const double* a, const double* b, double* out,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (go_parallel(m * k * n)) {
        parallel::gemm_tn(a, b, out, m, k, n, accumulate);
    } else {
        serial::gemm_tn(a, b, out, m, k, n, accumulate);
    }
}

void gemv(const double* a, const double* x, double* y,
          std::size_t m, std::size_t n, bool accumulate) {
    if (go_parallel(m * n)) {
        parallel::gemv(a, x, y, m, n, accumulate);
    } else {
        serial::gemv(a, x, y, m, n, accumulate);
    }
}

void gemv_t(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n, bool accumulate) {
    if (go_parallel(m * n)) {
        parallel::gemv_t(a, x, y, m, n, accumulate);
    } else {
        serial::gemv_t(a, x, y, m, n, accumulate);
    }
}

void outer_acc(const double* x, const double* y, double* a,
               std::size_t m, std::size_t n) {
    if (go_parallel(m * n)) {
        parallel::outer_acc(x, y, a, m, n);
    } else {
        serial::outer_acc(x, y, a, m, n);
    }
}

#define GRUCAP_DISPATCH_MAP(name)                                        \
    void name(const double* x, double* y, std::size_t n) {               \
        if (go_parallel(n)) {                                            \
            parallel::name(x, y, n);                                     \
        } else {                                                         \
            serial::name(x, y, n);                                       \
        }                                                                \
    }

GRUCAP_DISPATCH_MAP(sigmoid)
GRUCAP_DISPATCH_MAP(tanh_eval)
GRUCAP_DISPATCH_MAP(relu)
GRUCAP_DISPATCH_MAP(add_acc)

#undef GRUCAP_DISPATCH_MAP

#define GRUCAP_DISPATCH_ZIP(name)                                              \
    void name(const double* a, const double* b, double* out, std::size_t n) {  \
        if (go_parallel(n)) {                                                  \
            parallel::name(a, b, out, n);                                      \
        } else {                                                               \
            serial::name(a, b, out, n);                                        \
        }                                                                      \
    }

GRUCAP_DISPATCH_ZIP(add)
GRUCAP_DISPATCH_ZIP(sub)
GRUCAP_DISPATCH_ZIP(mul)
GRUCAP_DISPATCH_ZIP(mul_acc)
GRUCAP_DISPATCH_ZIP(sigmoid_grad_acc)
GRUCAP_DISPATCH_ZIP(tanh_grad_acc)
GRUCAP_DISPATCH_ZIP(relu_grad_acc)

#undef GRUCAP_DISPATCH_ZIP

void scale(const double* a, double s, double* out, std::size_t n) {
    if (go_parallel(n)) {
        parallel::scale(a, s, out, n);
    } else {
        serial::scale(a, s, out, n);
    }
}

void scale_acc(const double* a, double s, double* out, std::size_t n) {
    if (go_parallel(n)) {
        parallel::scale_acc(a, s, out, n);
    } else {
        serial::scale_acc(a, s, out, n);
    }
}

}  // namespace grucap::kernels
