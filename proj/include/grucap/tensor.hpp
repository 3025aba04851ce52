#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "grucap/errors.hpp"
#include "grucap/rng.hpp"

namespace grucap {

/// Dense row-major tensor of 64-bit reals with an optional same-shape
/// gradient buffer. Copies share storage (handle semantics), so the same
/// parameter tensor can appear in many recorded operations and receive
/// accumulated gradients.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
    static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar_value(double v, bool requires_grad = false);
    static Tensor uniform(std::vector<std::size_t> shape, double lo, double hi, Rng& rng,
                          bool requires_grad = true);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<std::size_t>& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;
    std::size_t extent(std::size_t axis) const { return shape().at(axis); }
    bool requires_grad() const;

    std::vector<double>& data();
    const std::vector<double>& data() const;
    /// Gradient buffer; only present when requires_grad.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    double value() const;  // scalar tensors only
    double at(std::size_t i) const { return data()[i]; }
    double at(std::size_t i, std::size_t j) const;

    /// True when every stored value (and gradient, if any) is finite.
    bool all_finite() const;

    std::string shape_string() const;

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        std::vector<std::size_t> shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;

    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    static Tensor make(std::vector<std::size_t> shape, std::vector<double> values,
                       bool requires_grad);
};

/// Define-by-run gradient tape. Operations append their backward rule while
/// the forward pass runs; backward() replays the rules once, in reverse
/// recording order, which is a valid topological order by construction.
/// One tape per forward pass, one thread per tape.
class Tape {
public:
    /// recording=false builds a forward-only tape (generation, evaluation).
    explicit Tape(bool recording = true) : recording_(recording) {}

    /// Registers the backward rule of one operation together with the tensor
    /// it produced.
    void record(const Tensor& output, std::function<void()> backward_step);
    bool recording() const { return recording_; }
    std::size_t size() const { return steps_.size(); }

    /// Zeroes the gradients of every tensor produced on this tape, seeds
    /// d(loss)/d(loss) = 1 and runs every recorded step exactly once, newest
    /// first. Leaf gradients accumulate across repeated calls.
    void backward(const Tensor& loss);

private:
    std::vector<std::function<void()>> steps_;
    std::vector<Tensor> outputs_;
    bool recording_ = true;
};

// ---- operations ----------------------------------------------------------
// All ops validate shapes (DimensionError on mismatch), compute the forward
// value eagerly and, when any input requires gradients, record one backward
// step on the tape.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);     // [m,k]x[k,n]
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);  // [m,k]x[n,k]^T -> [m,n]
Tensor matvec(Tape& tape, const Tensor& a, const Tensor& x);     // [m,n]x[n] -> [m]
Tensor matvec_t(Tape& tape, const Tensor& a, const Tensor& x);   // [m,n]^T x[m] -> [n]

/// Same-shape elementwise sum, or row-broadcast bias add [m,n] + [n].
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double s);

Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh_act(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);

/// Stable softmax along the given axis (max subtraction per lane).
Tensor softmax_axis(Tape& tape, const Tensor& x, std::size_t axis);
/// log(softmax(x)) for rank-1 x, computed stably.
Tensor log_softmax(Tape& tape, const Tensor& x);

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis);
/// Row i of a [rows, cols] table as a [cols] vector; gradient routes back
/// to that row only.
Tensor row(Tape& tape, const Tensor& table, std::size_t i);
/// Element i of a rank-1 tensor as a scalar.
Tensor pick(Tape& tape, const Tensor& x, std::size_t i);
/// Sum of all elements as a scalar.
Tensor sum(Tape& tape, const Tensor& x);
/// Column means of a [m,n] tensor -> [n].
Tensor mean_rows(Tape& tape, const Tensor& x);

}  // namespace grucap
