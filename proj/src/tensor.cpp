#include "grucap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grucap/kernels.hpp"

namespace grucap {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t p = 1;
    for (std::size_t e : shape) p *= e;
    return p;
}

void check_positive_extents(const std::vector<std::size_t>& shape) {
    for (std::size_t e : shape) {
        if (e == 0) {
            throw DimensionError("tensor extents must be positive");
        }
    }
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

[[noreturn]] void dim_error(const std::string& op, const Tensor& a, const Tensor& b) {
    throw DimensionError(op + ": incompatible shapes " + a.shape_string() + " and " +
                         b.shape_string());
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::make(std::vector<std::size_t> shape, std::vector<double> values,
                    bool requires_grad) {
    check_positive_extents(shape);
    if (shape_product(shape) != values.size()) {
        throw DimensionError("tensor data length " + std::to_string(values.size()) +
                             " does not match shape " + shape_to_string(shape));
    }
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    if (requires_grad) {
        impl->grad.assign(impl->data.size(), 0.0);
    }
    return Tensor(std::move(impl));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    check_positive_extents(shape);
    const std::size_t n = shape_product(shape);
    return make(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
    check_positive_extents(shape);
    const std::size_t n = shape_product(shape);
    return make(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> values,
                           bool requires_grad) {
    return make(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar_value(double v, bool requires_grad) {
    return make({1}, {v}, requires_grad);
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, double lo, double hi, Rng& rng,
                       bool requires_grad) {
    check_positive_extents(shape);
    std::vector<double> values(shape_product(shape));
    for (double& v : values) v = rng.uniform(lo, hi);
    return make(std::move(shape), std::move(values), requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::numel() const { return impl_->data.size(); }
bool Tensor::requires_grad() const { return impl_->requires_grad; }
std::vector<double>& Tensor::data() { return impl_->data; }
const std::vector<double>& Tensor::data() const { return impl_->data; }

std::vector<double>& Tensor::grad() {
    if (!impl_->requires_grad) {
        throw ContractError("grad() on a tensor without requires_grad");
    }
    return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (!impl_->requires_grad) {
        throw ContractError("grad() on a tensor without requires_grad");
    }
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (impl_->requires_grad) {
        std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
    }
}

double Tensor::value() const {
    if (numel() != 1) {
        throw ContractError("value() on non-scalar tensor " + shape_string());
    }
    return impl_->data[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    if (rank() != 2) {
        throw ContractError("at(i,j) on tensor of rank " + std::to_string(rank()));
    }
    return impl_->data[i * impl_->shape[1] + j];
}

bool Tensor::all_finite() const {
    for (double v : impl_->data) {
        if (!std::isfinite(v)) return false;
    }
    for (double v : impl_->grad) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_string() const { return shape_to_string(impl_->shape); }

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::record(const Tensor& output, std::function<void()> backward_step) {
    if (recording_) {
        steps_.push_back(std::move(backward_step));
        outputs_.push_back(output);
    }
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward() requires a scalar loss");
    }
    for (Tensor& out : outputs_) {
        out.zero_grad();
    }
    if (loss.requires_grad()) {
        const_cast<Tensor&>(loss).grad()[0] += 1.0;
    }
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
        (*it)();
    }
}

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

namespace {

bool rg(const Tensor& a) { return a.requires_grad(); }
bool rg(const Tensor& a, const Tensor& b) { return a.requires_grad() || b.requires_grad(); }

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
        dim_error("matmul", a, b);
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor out = Tensor::zeros({m, n}, rg(a, b));
    kernels::gemm_nn(a.data().data(), b.data().data(), out.data().data(), m, k, n, false);
    if (out.requires_grad()) {
        tape.record(out, [a = a, b = b, out, m, k, n]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) {
                // da += g * b^T
                kernels::gemm_nt(g, b.data().data(), a.grad().data(), m, n, k, true);
            }
            if (b.requires_grad()) {
                // db += a^T * g
                kernels::gemm_tn(a.data().data(), g, b.grad().data(), m, k, n, true);
            }
        });
    }
    return out;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(1)) {
        dim_error("matmul_nt", a, b);
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(0);
    Tensor out = Tensor::zeros({m, n}, rg(a, b));
    kernels::gemm_nt(a.data().data(), b.data().data(), out.data().data(), m, k, n, false);
    if (out.requires_grad()) {
        tape.record(out, [a = a, b = b, out, m, k, n]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) {
                // da += g * b
                kernels::gemm_nn(g, b.data().data(), a.grad().data(), m, n, k, true);
            }
            if (b.requires_grad()) {
                // db += g^T * a
                kernels::gemm_tn(g, a.data().data(), b.grad().data(), m, n, k, true);
            }
        });
    }
    return out;
}

Tensor matvec(Tape& tape, const Tensor& a, const Tensor& x) {
    if (a.rank() != 2 || x.rank() != 1 || a.extent(1) != x.extent(0)) {
        dim_error("matvec", a, x);
    }
    const std::size_t m = a.extent(0), n = a.extent(1);
    Tensor out = Tensor::zeros({m}, rg(a, x));
    kernels::gemv(a.data().data(), x.data().data(), out.data().data(), m, n, false);
    if (out.requires_grad()) {
        tape.record(out, [a = a, x = x, out, m, n]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) {
                kernels::outer_acc(g, x.data().data(), a.grad().data(), m, n);
            }
            if (x.requires_grad()) {
                kernels::gemv_t(a.data().data(), g, x.grad().data(), m, n, true);
            }
        });
    }
    return out;
}

Tensor matvec_t(Tape& tape, const Tensor& a, const Tensor& x) {
    if (a.rank() != 2 || x.rank() != 1 || a.extent(0) != x.extent(0)) {
        dim_error("matvec_t", a, x);
    }
    const std::size_t m = a.extent(0), n = a.extent(1);
    Tensor out = Tensor::zeros({n}, rg(a, x));
    kernels::gemv_t(a.data().data(), x.data().data(), out.data().data(), m, n, false);
    if (out.requires_grad()) {
        tape.record(out, [a = a, x = x, out, m, n]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) {
                kernels::outer_acc(x.data().data(), g, a.grad().data(), m, n);
            }
            if (x.requires_grad()) {
                kernels::gemv(a.data().data(), g, x.grad().data(), m, n, true);
            }
        });
    }
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    // bias broadcast: [m,n] + [n]
    if (a.rank() == 2 && b.rank() == 1 && a.extent(1) == b.extent(0)) {
        const std::size_t m = a.extent(0), n = a.extent(1);
        Tensor out = Tensor::zeros({m, n}, rg(a, b));
        const double* pa = a.data().data();
        const double* pb = b.data().data();
        double* po = out.data().data();
        for (std::size_t i = 0; i < m; ++i) {
            kernels::add(pa + i * n, pb, po + i * n, n);
        }
        if (out.requires_grad()) {
            tape.record(out, [a = a, b = b, out, m, n]() mutable {
                const double* g = out.grad().data();
                if (a.requires_grad()) {
                    kernels::add_acc(g, a.grad().data(), a.numel());
                }
                if (b.requires_grad()) {
                    double* gb = b.grad().data();
                    for (std::size_t i = 0; i < m; ++i) {
                        kernels::add_acc(g + i * n, gb, n);
                    }
                }
            });
        }
        return out;
    }
    if (a.shape() != b.shape()) {
        dim_error("add", a, b);
    }
    Tensor out = Tensor::zeros(a.shape(), rg(a, b));
    kernels::add(a.data().data(), b.data().data(), out.data().data(), out.numel());
    if (out.requires_grad()) {
        tape.record(out, [a = a, b = b, out]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) kernels::add_acc(g, a.grad().data(), a.numel());
            if (b.requires_grad()) kernels::add_acc(g, b.grad().data(), b.numel());
        });
    }
    return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        dim_error("sub", a, b);
    }
    Tensor out = Tensor::zeros(a.shape(), rg(a, b));
    kernels::sub(a.data().data(), b.data().data(), out.data().data(), out.numel());
    if (out.requires_grad()) {
        tape.record(out, [a = a, b = b, out]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) kernels::add_acc(g, a.grad().data(), a.numel());
            if (b.requires_grad()) kernels::scale_acc(g, -1.0, b.grad().data(), b.numel());
        });
    }
    return out;
}

Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        dim_error("hadamard", a, b);
    }
    Tensor out = Tensor::zeros(a.shape(), rg(a, b));
    kernels::mul(a.data().data(), b.data().data(), out.data().data(), out.numel());
    if (out.requires_grad()) {
        tape.record(out, [a = a, b = b, out]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) {
                kernels::mul_acc(g, b.data().data(), a.grad().data(), a.numel());
            }
            if (b.requires_grad()) {
                kernels::mul_acc(g, a.data().data(), b.grad().data(), b.numel());
            }
        });
    }
    return out;
}

Tensor scale(Tape& tape, const Tensor& a, double s) {
    Tensor out = Tensor::zeros(a.shape(), rg(a));
    kernels::scale(a.data().data(), s, out.data().data(), out.numel());
    if (out.requires_grad()) {
        tape.record(out, [a = a, out, s]() mutable {
            kernels::scale_acc(out.grad().data(), s, a.grad().data(), a.numel());
        });
    }
    return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), rg(x));
    kernels::sigmoid(x.data().data(), out.data().data(), out.numel());
    if (out.requires_grad()) {
        tape.record(out, [x = x, out]() mutable {
            kernels::sigmoid_grad_acc(out.grad().data(), out.data().data(), x.grad().data(),
                                      x.numel());
        });
    }
    return out;
}

Tensor tanh_act(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), rg(x));
    kernels::tanh_eval(x.data().data(), out.data().data(), out.numel());
    if (out.requires_grad()) {
        tape.record(out, [x = x, out]() mutable {
            kernels::tanh_grad_acc(out.grad().data(), out.data().data(), x.grad().data(),
                                   x.numel());
        });
    }
    return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), rg(x));
    kernels::relu(x.data().data(), out.data().data(), out.numel());
    if (out.requires_grad()) {
        tape.record(out, [x = x, out]() mutable {
            kernels::relu_grad_acc(out.grad().data(), x.data().data(), x.grad().data(),
                                   x.numel());
        });
    }
    return out;
}

namespace {

// Decompose shape around `axis` into (outer, lane, inner); elements of one
// softmax lane sit at x[(o*lane + j)*inner + i].
struct LaneView {
    std::size_t outer = 1, lane = 1, inner = 1;
};

LaneView lane_view(const std::vector<std::size_t>& shape, std::size_t axis) {
    LaneView v;
    for (std::size_t d = 0; d < axis; ++d) v.outer *= shape[d];
    v.lane = shape[axis];
    for (std::size_t d = axis + 1; d < shape.size(); ++d) v.inner *= shape[d];
    return v;
}

}  // namespace

Tensor softmax_axis(Tape& tape, const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw DimensionError("softmax_axis: axis " + std::to_string(axis) +
                             " out of range for shape " + x.shape_string());
    }
    const LaneView v = lane_view(x.shape(), axis);
    Tensor out = Tensor::zeros(x.shape(), rg(x));
    const double* px = x.data().data();
    double* py = out.data().data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            const std::size_t base = o * v.lane * v.inner + i;
            double mx = px[base];
            for (std::size_t j = 1; j < v.lane; ++j) {
                mx = std::max(mx, px[base + j * v.inner]);
            }
            double denom = 0.0;
            for (std::size_t j = 0; j < v.lane; ++j) {
                const double e = std::exp(px[base + j * v.inner] - mx);
                py[base + j * v.inner] = e;
                denom += e;
            }
            for (std::size_t j = 0; j < v.lane; ++j) {
                py[base + j * v.inner] /= denom;
            }
        }
    }
    if (out.requires_grad()) {
        tape.record(out, [x = x, out, v]() mutable {
            const double* y = out.data().data();
            const double* g = out.grad().data();
            double* gx = x.grad().data();
            for (std::size_t o = 0; o < v.outer; ++o) {
                for (std::size_t i = 0; i < v.inner; ++i) {
                    const std::size_t base = o * v.lane * v.inner + i;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < v.lane; ++j) {
                        const std::size_t idx = base + j * v.inner;
                        dot += g[idx] * y[idx];
                    }
                    for (std::size_t j = 0; j < v.lane; ++j) {
                        const std::size_t idx = base + j * v.inner;
                        gx[idx] += y[idx] * (g[idx] - dot);
                    }
                }
            }
        });
    }
    return out;
}

Tensor log_softmax(Tape& tape, const Tensor& x) {
    if (x.rank() != 1) {
        throw DimensionError("log_softmax expects a rank-1 tensor, got " + x.shape_string());
    }
    const std::size_t n = x.numel();
    Tensor out = Tensor::zeros(x.shape(), rg(x));
    const double* px = x.data().data();
    double* py = out.data().data();
    double mx = px[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, px[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) denom += std::exp(px[i] - mx);
    const double lse = mx + std::log(denom);
    for (std::size_t i = 0; i < n; ++i) py[i] = px[i] - lse;
    if (out.requires_grad()) {
        tape.record(out, [x = x, out, n]() mutable {
            const double* y = out.data().data();
            const double* g = out.grad().data();
            double* gx = x.grad().data();
            double gsum = 0.0;
            for (std::size_t i = 0; i < n; ++i) gsum += g[i];
            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] - std::exp(y[i]) * gsum;
        });
    }
    return out;
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) {
        throw ContractError("concat of zero parts");
    }
    const std::size_t r = parts[0].rank();
    if (axis >= r) {
        throw DimensionError("concat: axis " + std::to_string(axis) + " out of range");
    }
    std::vector<std::size_t> shape = parts[0].shape();
    std::size_t axis_total = shape[axis];
    for (std::size_t p = 1; p < parts.size(); ++p) {
        const auto& s = parts[p].shape();
        if (s.size() != r) dim_error("concat", parts[0], parts[p]);
        for (std::size_t d = 0; d < r; ++d) {
            if (d != axis && s[d] != shape[d]) dim_error("concat", parts[0], parts[p]);
        }
        axis_total += s[axis];
    }
    shape[axis] = axis_total;

    bool needs_grad = false;
    for (const auto& p : parts) needs_grad = needs_grad || p.requires_grad();
    Tensor out = Tensor::zeros(shape, needs_grad);

    const LaneView v = lane_view(shape, axis);
    // Copy part by part; each part occupies a contiguous span of the axis.
    double* po = out.data().data();
    std::size_t axis_offset = 0;
    for (const auto& part : parts) {
        const std::size_t lane_p = part.shape()[axis];
        const double* pp = part.data().data();
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t j = 0; j < lane_p; ++j) {
                const double* src = pp + (o * lane_p + j) * v.inner;
                double* dst = po + (o * v.lane + axis_offset + j) * v.inner;
                std::copy(src, src + v.inner, dst);
            }
        }
        axis_offset += lane_p;
    }
    if (out.requires_grad()) {
        auto parts_copy = parts;
        tape.record(out, [parts_copy, out, v, axis]() mutable {
            const double* g = out.grad().data();
            std::size_t offset = 0;
            for (auto& part : parts_copy) {
                const std::size_t lane_p = part.shape()[axis];
                if (part.requires_grad()) {
                    double* gp = part.grad().data();
                    for (std::size_t o = 0; o < v.outer; ++o) {
                        for (std::size_t j = 0; j < lane_p; ++j) {
                            const double* src = g + (o * v.lane + offset + j) * v.inner;
                            double* dst = gp + (o * lane_p + j) * v.inner;
                            for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
                        }
                    }
                }
                offset += lane_p;
            }
        });
    }
    return out;
}

Tensor row(Tape& tape, const Tensor& table, std::size_t i) {
    if (table.rank() != 2) {
        throw DimensionError("row expects a rank-2 table, got " + table.shape_string());
    }
    if (i >= table.extent(0)) {
        throw ContractError("row index " + std::to_string(i) + " out of range for " +
                            table.shape_string());
    }
    const std::size_t cols = table.extent(1);
    std::vector<double> values(table.data().begin() + i * cols,
                               table.data().begin() + (i + 1) * cols);
    Tensor out = Tensor::from_values({cols}, std::move(values), rg(table));
    if (out.requires_grad()) {
        tape.record(out, [table = table, out, i, cols]() mutable {
            kernels::add_acc(out.grad().data(), table.grad().data() + i * cols, cols);
        });
    }
    return out;
}

Tensor pick(Tape& tape, const Tensor& x, std::size_t i) {
    if (x.rank() != 1) {
        throw DimensionError("pick expects a rank-1 tensor, got " + x.shape_string());
    }
    if (i >= x.numel()) {
        throw ContractError("pick index " + std::to_string(i) + " out of range for " +
                            x.shape_string());
    }
    Tensor out = Tensor::scalar_value(x.data()[i], rg(x));
    if (out.requires_grad()) {
        tape.record(out, [x = x, out, i]() mutable { x.grad()[i] += out.grad()[0]; });
    }
    return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor out = Tensor::scalar_value(s, rg(x));
    if (out.requires_grad()) {
        tape.record(out, [x = x, out]() mutable {
            const double g = out.grad()[0];
            double* gx = x.grad().data();
            for (std::size_t i = 0; i < x.numel(); ++i) gx[i] += g;
        });
    }
    return out;
}

Tensor mean_rows(Tape& tape, const Tensor& x) {
    if (x.rank() != 2) {
        throw DimensionError("mean_rows expects a rank-2 tensor, got " + x.shape_string());
    }
    const std::size_t m = x.extent(0), n = x.extent(1);
    Tensor out = Tensor::zeros({n}, rg(x));
    const double* px = x.data().data();
    double* py = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) py[j] += px[i * n + j];
    }
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < n; ++j) py[j] *= inv;
    if (out.requires_grad()) {
        tape.record(out, [x = x, out, m, n, inv]() mutable {
            const double* g = out.grad().data();
            double* gx = x.grad().data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j] * inv;
            }
        });
    }
    return out;
}

}  // namespace grucap
