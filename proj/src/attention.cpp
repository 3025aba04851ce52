#include "grucap/attention.hpp"

#include <cmath>

#include "grucap/errors.hpp"

namespace grucap {

AttentionParams AttentionParams::init(std::size_t attn_dim, std::size_t dec_dim,
                                      std::size_t enc_dim, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(attn_dim));
    AttentionParams p;
    p.w_s = Tensor::uniform({attn_dim, dec_dim}, -bound, bound, rng);
    p.w_h = Tensor::uniform({attn_dim, enc_dim}, -bound, bound, rng);
    p.v = Tensor::uniform({attn_dim}, -bound, bound, rng);
    return p;
}

AttentionParams AttentionParams::zeros(std::size_t attn_dim, std::size_t dec_dim,
                                       std::size_t enc_dim) {
    AttentionParams p;
    p.w_s = Tensor::zeros({attn_dim, dec_dim}, true);
    p.w_h = Tensor::zeros({attn_dim, enc_dim}, true);
    p.v = Tensor::zeros({attn_dim}, true);
    return p;
}

std::vector<std::pair<std::string, Tensor>> AttentionParams::named_blocks() const {
    return {{"attn.w_s", w_s}, {"attn.w_h", w_h}, {"attn.v", v}};
}

AttentionOutput attend(Tape& tape, const Tensor& s_prev, const Tensor& enc,
                       const AttentionParams& p) {
    // enc * W_h^T : [T, A]
    Tensor enc_proj = matmul_nt(tape, enc, p.w_h);
    return attend_projected(tape, s_prev, enc, enc_proj, p);
}

AttentionOutput attend_projected(Tape& tape, const Tensor& s_prev, const Tensor& enc,
                                 const Tensor& enc_proj, const AttentionParams& p) {
    if (enc.rank() != 2) {
        throw DimensionError("attend: encoder matrix must be rank 2, got " + enc.shape_string());
    }
    if (s_prev.rank() != 1 || s_prev.extent(0) != p.dec_dim()) {
        throw DimensionError("attend: query " + s_prev.shape_string() +
                             " does not match W_s " + p.w_s.shape_string());
    }
    if (enc.extent(1) != p.enc_dim()) {
        throw DimensionError("attend: encoder " + enc.shape_string() + " does not match W_h " +
                             p.w_h.shape_string());
    }
    if (enc_proj.rank() != 2 || enc_proj.extent(0) != enc.extent(0) ||
        enc_proj.extent(1) != p.attn_dim()) {
        throw DimensionError("attend: projected encoder has shape " + enc_proj.shape_string());
    }

    AttentionOutput out;
    Tensor query = matvec(tape, p.w_s, s_prev);             // [A]
    Tensor pre = tanh_act(tape, add(tape, enc_proj, query));  // [T, A], row-broadcast add
    out.scores = matvec(tape, pre, p.v);                    // [T]
    out.weights = softmax_axis(tape, out.scores, 0);        // [T]
    out.context = matvec_t(tape, enc, out.weights);         // [H_enc]
    return out;
}

HeatGrid attention_map(const std::vector<double>& weights, std::size_t rows, std::size_t cols) {
    if (weights.size() != rows * cols) {
        throw DimensionError("attention_map: " + std::to_string(weights.size()) +
                             " weights cannot fill a " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " grid");
    }
    HeatGrid g;
    g.rows = rows;
    g.cols = cols;
    g.values = weights;
    return g;
}

}  // namespace grucap
