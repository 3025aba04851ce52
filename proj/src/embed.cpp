#include "grucap/embed.hpp"

#include <cmath>
#include <fstream>

#include "grucap/binio.hpp"
#include "grucap/errors.hpp"
#include "grucap/optim.hpp"

namespace grucap {

SkipGramParams SkipGramParams::init(std::size_t vocab, std::size_t dim, std::size_t window,
                                    Rng& rng) {
    if (window < 1 || dim < 1) {
        throw ContractError("skip-gram window and dimension must be >= 1");
    }
    const double bound = 0.5 / static_cast<double>(dim);
    SkipGramParams p;
    p.center_vectors = Tensor::uniform({vocab, dim}, -bound, bound, rng);
    p.context_vectors = Tensor::uniform({vocab, dim}, -bound, bound, rng);
    p.window = window;
    return p;
}

std::vector<TokenPair> context_pairs(const std::vector<std::vector<std::size_t>>& corpus,
                                     std::size_t window) {
    if (window < 1) {
        throw ContractError("context window must be >= 1");
    }
    std::vector<TokenPair> pairs;
    const auto m = static_cast<std::ptrdiff_t>(window);
    for (const auto& sentence : corpus) {
        const auto n = static_cast<std::ptrdiff_t>(sentence.size());
        for (std::ptrdiff_t t = 0; t < n; ++t) {
            for (std::ptrdiff_t j = -m; j <= m; ++j) {
                if (j == 0) continue;
                const std::ptrdiff_t u = t + j;
                if (u < 0 || u >= n) continue;
                pairs.emplace_back(sentence[t], sentence[u]);
            }
        }
    }
    return pairs;
}

double skipgram_prob(std::size_t center, std::size_t context, const SkipGramParams& p) {
    const std::size_t k = p.vocab(), e = p.dim();
    if (center >= k || context >= k) {
        throw ContractError("skipgram_prob: word index out of range");
    }
    const double* s = p.center_vectors.data().data() + center * e;
    const double* r = p.context_vectors.data().data();
    // logits_i = R_i . S_center, softmax evaluated with max subtraction
    std::vector<double> logits(k);
    double mx = -HUGE_VAL;
    for (std::size_t i = 0; i < k; ++i) {
        double dot = 0.0;
        for (std::size_t d = 0; d < e; ++d) dot += r[i * e + d] * s[d];
        logits[i] = dot;
        mx = std::max(mx, dot);
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < k; ++i) denom += std::exp(logits[i] - mx);
    return std::exp(logits[context] - mx) / denom;
}

Tensor skipgram_loss(Tape& tape, const std::vector<TokenPair>& pairs, const SkipGramParams& p) {
    if (pairs.empty()) {
        throw ContractError("skipgram_loss: empty batch");
    }
    std::vector<Tensor> terms;
    terms.reserve(pairs.size());
    for (const auto& [center, context] : pairs) {
        if (center >= p.vocab() || context >= p.vocab()) {
            throw ContractError("skipgram_loss: word index out of range");
        }
        Tensor s_center = row(tape, p.center_vectors, center);
        Tensor logits = matvec(tape, p.context_vectors, s_center);
        Tensor logp = log_softmax(tape, logits);
        terms.push_back(pick(tape, logp, context));
    }
    return scale(tape, sum(tape, concat(tape, terms, 0)), -1.0);
}

EmbeddingTable export_table(const SkipGramParams& p) {
    EmbeddingTable t;
    t.vocab = p.vocab();
    t.dim = p.dim();
    t.values = p.center_vectors.data();
    return t;
}

SkipGramTrainResult train_skipgram(const std::vector<std::vector<std::size_t>>& corpus,
                                   std::size_t vocab, std::size_t dim, std::size_t window,
                                   std::size_t steps, double learning_rate, std::uint64_t seed) {
    Rng rng(seed);
    SkipGramTrainResult result{SkipGramParams::init(vocab, dim, window, rng), {}};
    const std::vector<TokenPair> pairs = context_pairs(corpus, window);
    if (pairs.empty()) {
        throw ContractError("train_skipgram: corpus yields no context pairs");
    }
    AdamConfig cfg;
    cfg.learning_rate = learning_rate;
    AdamOptimizer opt({{"skipgram.center", result.params.center_vectors},
                       {"skipgram.context", result.params.context_vectors}},
                      cfg);
    result.losses.reserve(steps);
    const double inv_pairs = 1.0 / static_cast<double>(pairs.size());
    for (std::size_t step = 0; step < steps; ++step) {
        Tape tape;
        Tensor loss = skipgram_loss(tape, pairs, result.params);
        tape.backward(loss);
        result.losses.push_back(loss.value() * inv_pairs);
        opt.step(inv_pairs);
    }
    return result;
}

void save_embedding(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write embedding file " + path.string());
    }
    out.write("EMBD", 4);
    binio::put_u32(out, static_cast<std::uint32_t>(table.vocab));
    binio::put_u32(out, static_cast<std::uint32_t>(table.dim));
    for (double v : table.values) binio::put_f64(out, v);
    if (!out) {
        throw DataError("short write on embedding file " + path.string());
    }
}

EmbeddingTable load_embedding(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read embedding file " + path.string());
    }
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "EMBD") {
        throw DataError("bad magic in embedding file " + path.string());
    }
    std::uint32_t k = 0, e = 0;
    if (!binio::get_u32(in, k) || !binio::get_u32(in, e)) {
        throw DataError("truncated embedding header in " + path.string());
    }
    EmbeddingTable t;
    t.vocab = k;
    t.dim = e;
    t.values.resize(static_cast<std::size_t>(k) * e);
    for (double& v : t.values) {
        if (!binio::get_f64(in, v)) {
            throw DataError("truncated embedding payload in " + path.string());
        }
    }
    return t;
}

}  // namespace grucap
