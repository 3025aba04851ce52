#pragma once

#include <utility>
#include <vector>

#include "grucap/rng.hpp"
#include "grucap/tensor.hpp"

namespace grucap {

/// Additive attention weights. Scores are
///   e_j = v . tanh(W_s s_prev + W_h enc_j)
/// with no biases anywhere: a bias on the outer layer is shift-invariant
/// under the softmax and inner biases are absorbed the same way.
struct AttentionParams {
    Tensor w_s;  // [A, H_dec] decoder-state projection
    Tensor w_h;  // [A, H_enc] encoder-state projection
    Tensor v;    // [A] score head

    static AttentionParams init(std::size_t attn_dim, std::size_t dec_dim,
                                std::size_t enc_dim, Rng& rng);
    static AttentionParams zeros(std::size_t attn_dim, std::size_t dec_dim,
                                 std::size_t enc_dim);

    std::size_t attn_dim() const { return w_s.extent(0); }
    std::size_t dec_dim() const { return w_s.extent(1); }
    std::size_t enc_dim() const { return w_h.extent(1); }

    std::vector<std::pair<std::string, Tensor>> named_blocks() const;
};

struct AttentionOutput {
    Tensor weights;  // alpha, [T], nonnegative, sums to 1
    Tensor context;  // [H_enc], convex combination of encoder rows
    Tensor scores;   // raw e, [T]
};

/// enc is [T, H_enc]; one row per position. Softmax runs over the position
/// axis, the context is the alpha-weighted sum of encoder rows.
AttentionOutput attend(Tape& tape, const Tensor& s_prev, const Tensor& enc,
                       const AttentionParams& p);

/// Same, with enc * W_h^T precomputed (it is constant across decode steps).
AttentionOutput attend_projected(Tape& tape, const Tensor& s_prev, const Tensor& enc,
                                 const Tensor& enc_proj, const AttentionParams& p);

/// Row-major reshape of T = rows*cols attention weights into a grid for
/// heatmap export. Values are copied unchanged.
struct HeatGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // rows*cols, row-major
};

HeatGrid attention_map(const std::vector<double>& weights, std::size_t rows, std::size_t cols);

}  // namespace grucap
