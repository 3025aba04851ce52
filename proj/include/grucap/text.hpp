#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grucap {

/// Lowercase, replace every character outside [a-zA-Z] with a space, split
/// on whitespace runs. Idempotent on its own output.
std::vector<std::string> normalize_tokenize(std::string_view raw);

/// Word <-> index bijection with four reserved slots. Indices are dense in
/// [0, size()); reserved tokens are never produced by tokenization.
class Vocabulary {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kStart = 1;
    static constexpr std::size_t kEnd = 2;
    static constexpr std::size_t kUnk = 3;
    static constexpr std::size_t kNumReserved = 4;

    /// Keeps words with frequency >= min_count, ordered by (frequency desc,
    /// word asc) after the reserved slots. Deterministic.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                            std::size_t min_count = 1);

    std::size_t size() const { return words_.size(); }  // K
    /// Index of a word; kUnk when absent.
    std::size_t index_of(const std::string& word) const;
    bool contains(const std::string& word) const;
    const std::string& word_at(std::size_t index) const;
    std::size_t frequency_at(std::size_t index) const;

    /// One `index<TAB>word<TAB>frequency` line per entry, indices ascending.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> words_;
    std::vector<std::size_t> frequencies_;
    std::unordered_map<std::string, std::size_t> index_;

    Vocabulary() = default;
    void push_entry(std::string word, std::size_t freq);
};

/// Token-index sequence. Encoded form is <start> ... <end> with interior
/// tokens non-reserved or <unk>.
struct Caption {
    std::vector<std::size_t> tokens;

    std::size_t length() const { return tokens.size(); }
};

/// Interior tokens beyond max_caption_len are dropped before <end>.
Caption encode(const std::vector<std::string>& words, const Vocabulary& vocab,
               std::size_t max_caption_len = 20);

/// Reserved tokens are stripped; remaining words joined by single spaces.
std::string decode(const Caption& caption, const Vocabulary& vocab);

}  // namespace grucap
