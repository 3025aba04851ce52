#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "grucap/attention.hpp"
#include "grucap/embed.hpp"
#include "grucap/gru.hpp"
#include "grucap/rng.hpp"
#include "grucap/tensor.hpp"
#include "grucap/text.hpp"

namespace grucap {

/// H x W x D grid of real activations standing in for the image. Values are
/// row-major (row, col, channel); position j = row*W + col owns the
/// D-vector annotation values[j*D .. (j+1)*D).
struct FeatureGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t depth = 0;
    std::vector<double> values;

    std::size_t positions() const { return rows * cols; }  // T
    void validate() const;
    /// Annotation vector of position j as a copy.
    std::vector<double> annotation(std::size_t j) const;
};

struct CaptionerDims {
    std::size_t vocab = 0;       // K
    std::size_t embed_dim = 0;   // E
    std::size_t enc_dim = 0;     // H_enc
    std::size_t dec_dim = 0;     // H_dec
    std::size_t attn_dim = 0;    // A
    std::size_t feat_depth = 0;  // D
};

/// Every learnable block of the model. The GRU input is the concatenation
/// of the previous word's embedding and the attention context, so its
/// input width is E + H_enc.
struct CaptionerParams {
    Tensor enc_w, enc_b;    // [H_enc, D], [H_enc]   encoder FC
    Tensor init_w, init_b;  // [H_dec, H_enc], [H_dec]  h0 head
    Tensor embedding;       // [K, E]
    GruParams gru;
    AttentionParams attn;
    Tensor out_w, out_b;  // [K, H_dec], [K]  vocabulary logits

    static CaptionerParams init(const CaptionerDims& dims, Rng& rng);
    static CaptionerParams zeros(const CaptionerDims& dims);

    CaptionerDims dims() const;
    /// Fixed-order list of all blocks; the order defines checkpoint layout
    /// and optimizer traversal.
    std::vector<std::pair<std::string, Tensor>> named_blocks() const;
    void validate() const;
    /// Overwrite the embedding table rows with a pretrained table.
    void warm_start_embedding(const EmbeddingTable& table);
};

struct Encoded {
    Tensor enc;  // [T, H_enc], relu'd projected annotations
    Tensor h0;   // [H_dec], tanh of the projected mean annotation
};

/// enc_j = relu(enc_w * annotation_j + enc_b); h0 = tanh(init_w * mean_j enc_j + init_b)
Encoded encode(Tape& tape, const FeatureGrid& grid, const CaptionerParams& p);

struct DecodeStep {
    Tensor logits;        // [K]
    Tensor state;         // [H_dec]
    Tensor attn_weights;  // [T]
    Tensor context;       // [H_enc]
};

/// One teacher-forced / greedy step: attend with the previous state, feed
/// [embedding(y_prev); context] through the GRU, project to logits.
/// Pass enc_proj (enc * W_h^T) to reuse it across steps; leave it undefined
/// to have it computed here.
DecodeStep decode_step(Tape& tape, std::size_t y_prev, const Tensor& s_prev, const Tensor& enc,
                       const CaptionerParams& p, const Tensor* enc_proj = nullptr);

/// Teacher-forced negative log-likelihood of target given the grid, summed
/// over predicted positions (everything after <start>, including <end>).
/// <pad> targets contribute nothing. Fails on captions that do not start
/// with <start> or lack <end>.
Tensor caption_nll(Tape& tape, const FeatureGrid& grid, const Caption& target,
                   const CaptionerParams& p);

struct Generated {
    Caption caption;                             // starts with <start>
    std::vector<std::vector<double>> attention;  // one weight vector per emitted token
};

/// Greedy argmax decoding from <start>; stops at <end> or after max_len
/// emissions; ties break toward the lower index. Pure function of its
/// arguments.
Generated generate(const FeatureGrid& grid, const CaptionerParams& p, std::size_t max_len);

/// Checkpoint file: magic "CKPT", u32 version, then named blocks
/// (u32 name length, name bytes, u32 rank, u32 extents, f64 payload),
/// all little-endian. Blocks beyond the model parameters (optimizer
/// moments, epoch counters) are carried verbatim.
void save_checkpoint(const std::filesystem::path& path,
                     const CaptionerParams& params,
                     const std::vector<std::pair<std::string, std::vector<double>>>& extra = {});

struct Checkpoint {
    CaptionerParams params;
    std::vector<std::pair<std::string, std::vector<double>>> extra;

    std::optional<std::vector<double>> find(const std::string& name) const;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace grucap
