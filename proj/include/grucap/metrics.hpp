#pragma once

#include <string>
#include <vector>

namespace grucap {

/// One scored example: a candidate sentence against one or more references.
/// Tokens are expected to be normalized (text module rules) before scoring.
struct EvalInstance {
    std::vector<std::string> candidate;
    std::vector<std::vector<std::string>> references;  // nonempty
};

struct ScoreReport {
    double bleu1 = 0.0;
    double bleu2 = 0.0;
    double bleu3 = 0.0;
    double bleu4 = 0.0;
    double rouge_l = 0.0;
    double cider = 0.0;
    double meteor_exact = 0.0;
};

/// Corpus-level BLEU-N: clipped n-gram precisions aggregated over the corpus,
/// geometric mean over orders 1..N, brevity penalty from the closest
/// reference length (ties toward the shorter). Returns 0 when any p_n is 0.
double bleu(const std::vector<EvalInstance>& corpus, std::size_t max_order);

/// LCS F-measure, max over references. Empty candidates score 0.
double rouge_l_instance(const EvalInstance& inst, double beta = 1.2);
double rouge_l(const std::vector<EvalInstance>& corpus, double beta = 1.2);

/// TF-IDF n-gram cosine (n = 1..n_max) with a Gaussian length penalty,
/// averaged over references and orders, scaled by 10. Document frequency
/// counts images whose reference set contains the n-gram, floored at 1.
double cider(const std::vector<EvalInstance>& corpus, std::size_t n_max = 4, double sigma = 6.0);

/// Exact-match METEOR: greedy left-to-right unigram alignment (max matches,
/// then fewest chunks), harmonic mean weighted by alpha, fragmentation
/// penalty gamma * (chunks/matches)^beta. Max over references.
double meteor_exact_instance(const EvalInstance& inst, double alpha = 0.9,
                             double beta_frag = 3.0, double gamma = 0.5);
double meteor_exact(const std::vector<EvalInstance>& corpus, double alpha = 0.9,
                    double beta_frag = 3.0, double gamma = 0.5);

/// All metrics over one corpus. Deterministic and permutation-invariant.
ScoreReport score_corpus(const std::vector<EvalInstance>& corpus);

}  // namespace grucap
