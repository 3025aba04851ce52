#pragma once

#include <utility>
#include <vector>

#include "grucap/rng.hpp"
#include "grucap/tensor.hpp"

namespace grucap {

/// Gated recurrent unit weights. The three gate equations read
///   z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
///   r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
///   cand_t = tanh(W_h x_t + r_t .* (U_h h_{t-1}) + b_h)
///   h_t = z_t .* cand_t + (1 - z_t) .* h_{t-1}
/// Note the last line: z gates the candidate, not the carry-over. Biases
/// default to zero, which makes the step bias-free.
struct GruParams {
    Tensor w_z, u_z, b_z;
    Tensor w_r, u_r, b_r;
    Tensor w_h, u_h, b_h;

    /// Matrices uniform in (-1/sqrt(hidden), 1/sqrt(hidden)), biases zero.
    static GruParams init(std::size_t hidden, std::size_t input, Rng& rng);
    /// All-zero parameters (forces h_t = 0.5 * h_{t-1}).
    static GruParams zeros(std::size_t hidden, std::size_t input);

    std::size_t hidden() const { return w_z.extent(0); }
    std::size_t input() const { return w_z.extent(1); }

    std::vector<std::pair<std::string, Tensor>> named_blocks() const;
    void validate() const;
};

/// One step's state plus gate diagnostics.
struct GruStep {
    Tensor h;          // new hidden state
    Tensor z;          // update gate
    Tensor r;          // reset gate
    Tensor candidate;  // tanh'd new memory content
};

GruStep gru_step(Tape& tape, const Tensor& x, const Tensor& h_prev, const GruParams& p);

/// Fold of gru_step over xs; output[i] is the state after consuming xs[i].
std::vector<GruStep> gru_sequence(Tape& tape, const std::vector<Tensor>& xs,
                                  const Tensor& h0, const GruParams& p);

}  // namespace grucap
