#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "grucap/rng.hpp"
#include "grucap/tensor.hpp"

namespace grucap {

/// Skip-gram parameters: every word owns a center vector (row of S) and a
/// context vector (row of R). The conditional probability of a context word
/// given a center word is the full softmax over R * S_center.
struct SkipGramParams {
    Tensor center_vectors;   // S, [K, E]
    Tensor context_vectors;  // R, [K, E]
    std::size_t window = 2;  // m

    /// Uniform init in (-0.5/E, 0.5/E).
    static SkipGramParams init(std::size_t vocab, std::size_t dim, std::size_t window, Rng& rng);

    std::size_t vocab() const { return center_vectors.extent(0); }
    std::size_t dim() const { return center_vectors.extent(1); }
};

/// Word-vector matrix; row i is the embedding of word i.
struct EmbeddingTable {
    std::size_t vocab = 0;
    std::size_t dim = 0;
    std::vector<double> values;  // row-major [vocab, dim]
};

using TokenPair = std::pair<std::size_t, std::size_t>;  // (center, context)

/// (w_t, w_{t+j}) for every position t and j in [-m, m] \ {0} inside the
/// sentence; pairs never cross sentence boundaries. Emission order is
/// sentence-major, then position, then ascending j.
std::vector<TokenPair> context_pairs(const std::vector<std::vector<std::size_t>>& corpus,
                                     std::size_t window);

/// P(context | center) by direct softmax evaluation (no tape).
double skipgram_prob(std::size_t center, std::size_t context, const SkipGramParams& p);

/// -sum over pairs of log P(context | center), differentiable w.r.t. R and S.
Tensor skipgram_loss(Tape& tape, const std::vector<TokenPair>& pairs, const SkipGramParams& p);

/// The table is the center vectors, verbatim.
EmbeddingTable export_table(const SkipGramParams& p);

struct SkipGramTrainResult {
    SkipGramParams params;
    std::vector<double> losses;  // mean per-pair loss at each step
};

/// Full-batch Adam on the exact softmax objective.
SkipGramTrainResult train_skipgram(const std::vector<std::vector<std::size_t>>& corpus,
                                   std::size_t vocab, std::size_t dim, std::size_t window,
                                   std::size_t steps, double learning_rate, std::uint64_t seed);

/// Binary embedding file: magic "EMBD", u32 K, u32 E, K*E little-endian
/// doubles, row-major.
void save_embedding(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embedding(const std::filesystem::path& path);

}  // namespace grucap
