#include "grucap/gru.hpp"

#include <cmath>

#include "grucap/errors.hpp"

namespace grucap {

GruParams GruParams::init(std::size_t hidden, std::size_t input, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    GruParams p;
    p.w_z = Tensor::uniform({hidden, input}, -bound, bound, rng);
    p.u_z = Tensor::uniform({hidden, hidden}, -bound, bound, rng);
    p.b_z = Tensor::zeros({hidden}, true);
    p.w_r = Tensor::uniform({hidden, input}, -bound, bound, rng);
    p.u_r = Tensor::uniform({hidden, hidden}, -bound, bound, rng);
    p.b_r = Tensor::zeros({hidden}, true);
    p.w_h = Tensor::uniform({hidden, input}, -bound, bound, rng);
    p.u_h = Tensor::uniform({hidden, hidden}, -bound, bound, rng);
    p.b_h = Tensor::zeros({hidden}, true);
    return p;
}

GruParams GruParams::zeros(std::size_t hidden, std::size_t input) {
    GruParams p;
    p.w_z = Tensor::zeros({hidden, input}, true);
    p.u_z = Tensor::zeros({hidden, hidden}, true);
    p.b_z = Tensor::zeros({hidden}, true);
    p.w_r = Tensor::zeros({hidden, input}, true);
    p.u_r = Tensor::zeros({hidden, hidden}, true);
    p.b_r = Tensor::zeros({hidden}, true);
    p.w_h = Tensor::zeros({hidden, input}, true);
    p.u_h = Tensor::zeros({hidden, hidden}, true);
    p.b_h = Tensor::zeros({hidden}, true);
    return p;
}

std::vector<std::pair<std::string, Tensor>> GruParams::named_blocks() const {
    return {
        {"gru.w_z", w_z}, {"gru.u_z", u_z}, {"gru.b_z", b_z},
        {"gru.w_r", w_r}, {"gru.u_r", u_r}, {"gru.b_r", b_r},
        {"gru.w_h", w_h}, {"gru.u_h", u_h}, {"gru.b_h", b_h},
    };
}

void GruParams::validate() const {
    const std::size_t h = hidden(), i = input();
    auto expect = [](const Tensor& t, std::vector<std::size_t> shape, const char* name) {
        if (t.shape() != shape) {
            throw DimensionError(std::string("GruParams: ") + name + " has shape " +
                                 t.shape_string());
        }
    };
    expect(w_r, {h, i}, "w_r");
    expect(w_h, {h, i}, "w_h");
    expect(u_z, {h, h}, "u_z");
    expect(u_r, {h, h}, "u_r");
    expect(u_h, {h, h}, "u_h");
    expect(b_z, {h}, "b_z");
    expect(b_r, {h}, "b_r");
    expect(b_h, {h}, "b_h");
}

GruStep gru_step(Tape& tape, const Tensor& x, const Tensor& h_prev, const GruParams& p) {
    if (x.rank() != 1 || x.extent(0) != p.input()) {
        throw DimensionError("gru_step: input " + x.shape_string() + " does not match params (I=" +
                             std::to_string(p.input()) + ")");
    }
    if (h_prev.rank() != 1 || h_prev.extent(0) != p.hidden()) {
        throw DimensionError("gru_step: state " + h_prev.shape_string() +
                             " does not match params (H=" + std::to_string(p.hidden()) + ")");
    }
    GruStep s;
    s.z = sigmoid(tape, add(tape, add(tape, matvec(tape, p.w_z, x), matvec(tape, p.u_z, h_prev)),
                            p.b_z));
    s.r = sigmoid(tape, add(tape, add(tape, matvec(tape, p.w_r, x), matvec(tape, p.u_r, h_prev)),
                            p.b_r));
    s.candidate = tanh_act(
        tape, add(tape,
                  add(tape, matvec(tape, p.w_h, x),
                      hadamard(tape, s.r, matvec(tape, p.u_h, h_prev))),
                  p.b_h));
    Tensor one = Tensor::full({p.hidden()}, 1.0);
    s.h = add(tape, hadamard(tape, s.z, s.candidate),
              hadamard(tape, sub(tape, one, s.z), h_prev));
    return s;
}

std::vector<GruStep> gru_sequence(Tape& tape, const std::vector<Tensor>& xs, const Tensor& h0,
                                  const GruParams& p) {
    std::vector<GruStep> states;
    states.reserve(xs.size());
    Tensor h = h0;
    for (const Tensor& x : xs) {
        states.push_back(gru_step(tape, x, h, p));
        h = states.back().h;
    }
    return states;
}

}  // namespace grucap
