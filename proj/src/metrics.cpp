#include "grucap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

#include "grucap/errors.hpp"

namespace grucap {

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() >= n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
        }
    }
    return counts;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    const std::size_t m = a.size(), n = b.size();
    if (m == 0 || n == 0) return 0;
    std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

void require_references(const EvalInstance& inst) {
    if (inst.references.empty()) {
        throw ContractError("evaluation instance has no references");
    }
}

}  // namespace

double bleu(const std::vector<EvalInstance>& corpus, std::size_t max_order) {
    if (corpus.empty()) {
        throw ContractError("bleu: empty corpus");
    }
    if (max_order < 1 || max_order > 4) {
        throw ContractError("bleu: order must be in 1..4");
    }
    std::vector<std::size_t> matched(max_order + 1, 0), total(max_order + 1, 0);
    std::size_t cand_len = 0, ref_len = 0;
    for (const EvalInstance& inst : corpus) {
        require_references(inst);
        const std::size_t c = inst.candidate.size();
        cand_len += c;
        // closest reference length; ties toward the shorter
        std::size_t best_r = inst.references[0].size();
        for (const Tokens& ref : inst.references) {
            const std::size_t r = ref.size();
            const auto dist = [&](std::size_t len) {
                return len > c ? len - c : c - len;
            };
            if (dist(r) < dist(best_r) || (dist(r) == dist(best_r) && r < best_r)) {
                best_r = r;
            }
        }
        ref_len += best_r;

        for (std::size_t n = 1; n <= max_order; ++n) {
            const NgramCounts cand_counts = count_ngrams(inst.candidate, n);
            NgramCounts max_ref;
            for (const Tokens& ref : inst.references) {
                for (const auto& [gram, k] : count_ngrams(ref, n)) {
                    max_ref[gram] = std::max(max_ref[gram], k);
                }
            }
            for (const auto& [gram, k] : cand_counts) {
                auto it = max_ref.find(gram);
                matched[n] += std::min(k, it == max_ref.end() ? 0 : it->second);
            }
            total[n] += c >= n ? c - n + 1 : 0;
        }
    }
    if (cand_len == 0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= max_order; ++n) {
        if (matched[n] == 0 || total[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
    }
    const double bp = cand_len > ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) /
                                               static_cast<double>(cand_len));
    return bp * std::exp(log_sum / static_cast<double>(max_order));
}

double rouge_l_instance(const EvalInstance& inst, double beta) {
    require_references(inst);
    if (beta <= 0.0) {
        throw ContractError("rouge_l: beta must be positive");
    }
    double best = 0.0;
    for (const Tokens& ref : inst.references) {
        const std::size_t l = lcs_length(inst.candidate, ref);
        if (l == 0) continue;
        const double p = static_cast<double>(l) / static_cast<double>(inst.candidate.size());
        const double r = static_cast<double>(l) / static_cast<double>(ref.size());
        const double b2 = beta * beta;
        best = std::max(best, (1.0 + b2) * p * r / (r + b2 * p));
    }
    return best;
}

double rouge_l(const std::vector<EvalInstance>& corpus, double beta) {
    if (corpus.empty()) {
        throw ContractError("rouge_l: empty corpus");
    }
    double sum = 0.0;
    for (const EvalInstance& inst : corpus) {
        sum += rouge_l_instance(inst, beta);
    }
    return sum / static_cast<double>(corpus.size());
}

double cider(const std::vector<EvalInstance>& corpus, std::size_t n_max, double sigma) {
    if (corpus.empty()) {
        throw ContractError("cider: empty corpus");
    }
    const double num_images = static_cast<double>(corpus.size());

    // document frequency: in how many images' reference sets each n-gram occurs
    std::vector<NgramCounts> df(n_max + 1);
    for (const EvalInstance& inst : corpus) {
        require_references(inst);
        for (std::size_t n = 1; n <= n_max; ++n) {
            std::set<std::vector<std::string>> grams;
            for (const Tokens& ref : inst.references) {
                for (const auto& [gram, k] : count_ngrams(ref, n)) {
                    grams.insert(gram);
                }
            }
            for (const auto& gram : grams) ++df[n][gram];
        }
    }

    auto tfidf = [&](const Tokens& tokens, std::size_t n) {
        std::map<std::vector<std::string>, double> vec;
        for (const auto& [gram, k] : count_ngrams(tokens, n)) {
            auto it = df[n].find(gram);
            const double d = it == df[n].end() ? 1.0 : std::max<double>(1.0, it->second);
            vec[gram] = static_cast<double>(k) * std::log(num_images / d);
        }
        return vec;
    };
    auto norm = [](const std::map<std::vector<std::string>, double>& vec) {
        double s = 0.0;
        for (const auto& [gram, w] : vec) s += w * w;
        return std::sqrt(s);
    };

    double corpus_sum = 0.0;
    for (const EvalInstance& inst : corpus) {
        double inst_sum = 0.0;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const auto cand_vec = tfidf(inst.candidate, n);
            const double cand_norm = norm(cand_vec);
            double ref_sum = 0.0;
            for (const Tokens& ref : inst.references) {
                const auto ref_vec = tfidf(ref, n);
                const double ref_norm = norm(ref_vec);
                double cos = 0.0;
                if (cand_norm > 0.0 && ref_norm > 0.0) {
                    double dot = 0.0;
                    for (const auto& [gram, w] : cand_vec) {
                        auto it = ref_vec.find(gram);
                        if (it != ref_vec.end()) dot += w * it->second;
                    }
                    cos = dot / (cand_norm * ref_norm);
                }
                const double delta = static_cast<double>(inst.candidate.size()) -
                                     static_cast<double>(ref.size());
                ref_sum += cos * std::exp(-delta * delta / (2.0 * sigma * sigma));
            }
            inst_sum += ref_sum / static_cast<double>(inst.references.size());
        }
        corpus_sum += 10.0 * inst_sum / static_cast<double>(n_max);
    }
    return corpus_sum / num_images;
}

double meteor_exact_instance(const EvalInstance& inst, double alpha, double beta_frag,
                             double gamma) {
    require_references(inst);
    double best = 0.0;
    for (const Tokens& ref : inst.references) {
        if (inst.candidate.empty() || ref.empty()) continue;
        // Greedy left-to-right alignment. Matches per word are forced to
        // sum(min counts); preferring the reference position that extends the
        // current run keeps the chunk count minimal for that order.
        std::vector<bool> used(ref.size(), false);
        std::vector<std::pair<std::size_t, std::size_t>> alignment;
        std::ptrdiff_t last = -2;
        for (std::size_t i = 0; i < inst.candidate.size(); ++i) {
            const std::string& w = inst.candidate[i];
            std::ptrdiff_t picked = -1;
            const std::size_t cont = static_cast<std::size_t>(last + 1);
            if (last + 1 >= 0 && cont < ref.size() && !used[cont] && ref[cont] == w) {
                picked = last + 1;
            } else {
                for (std::size_t j = 0; j < ref.size(); ++j) {
                    if (!used[j] && ref[j] == w) {
                        picked = static_cast<std::ptrdiff_t>(j);
                        break;
                    }
                }
            }
            if (picked >= 0) {
                used[static_cast<std::size_t>(picked)] = true;
                alignment.emplace_back(i, static_cast<std::size_t>(picked));
                last = picked;
            } else {
                last = -2;
            }
        }
        const std::size_t matches = alignment.size();
        if (matches == 0) continue;
        std::size_t chunks = 1;
        for (std::size_t k = 1; k < alignment.size(); ++k) {
            if (alignment[k].first != alignment[k - 1].first + 1 ||
                alignment[k].second != alignment[k - 1].second + 1) {
                ++chunks;
            }
        }
        const double p = static_cast<double>(matches) / static_cast<double>(inst.candidate.size());
        const double r = static_cast<double>(matches) / static_cast<double>(ref.size());
        const double f_mean = p * r / (alpha * p + (1.0 - alpha) * r);
        const double penalty =
            gamma * std::pow(static_cast<double>(chunks) / static_cast<double>(matches),
                             beta_frag);
        best = std::max(best, f_mean * (1.0 - penalty));
    }
    return best;
}

double meteor_exact(const std::vector<EvalInstance>& corpus, double alpha, double beta_frag,
                    double gamma) {
    if (corpus.empty()) {
        throw ContractError("meteor_exact: empty corpus");
    }
    double sum = 0.0;
    for (const EvalInstance& inst : corpus) {
        sum += meteor_exact_instance(inst, alpha, beta_frag, gamma);
    }
    return sum / static_cast<double>(corpus.size());
}

ScoreReport score_corpus(const std::vector<EvalInstance>& corpus) {
    if (corpus.empty()) {
        throw ContractError("score_corpus: empty corpus");
    }
    ScoreReport report;
    report.bleu1 = bleu(corpus, 1);
    report.bleu2 = bleu(corpus, 2);
    report.bleu3 = bleu(corpus, 3);
    report.bleu4 = bleu(corpus, 4);
    report.rouge_l = rouge_l(corpus);
    report.cider = cider(corpus);
    report.meteor_exact = meteor_exact(corpus);
    return report;
}

}  // namespace grucap
