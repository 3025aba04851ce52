#include "grucap/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "grucap/errors.hpp"

namespace grucap {

namespace {

const char* const kReservedWords[] = {"<pad>", "<start>", "<end>", "<unk>"};

}  // namespace

std::vector<std::string> normalize_tokenize(std::string_view raw) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : raw) {
        if (c >= 'a' && c <= 'z') {
            current.push_back(c);
        } else if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

void Vocabulary::push_entry(std::string word, std::size_t freq) {
    index_[word] = words_.size();
    words_.push_back(std::move(word));
    frequencies_.push_back(freq);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus,
                             std::size_t min_count) {
    if (corpus.empty()) {
        throw ContractError("build_vocab: empty corpus");
    }
    std::map<std::string, std::size_t> counts;  // ordered map: ties resolve by word asc
    for (const auto& sentence : corpus) {
        for (const auto& word : sentence) {
            ++counts[word];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary v;
    for (const char* w : kReservedWords) {
        v.push_entry(w, 0);
    }
    for (auto& [word, freq] : entries) {
        if (freq >= min_count) {
            v.push_entry(word, freq);
        }
    }
    return v;
}

std::size_t Vocabulary::index_of(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
    return index_.find(word) != index_.end();
}

const std::string& Vocabulary::word_at(std::size_t index) const {
    if (index >= words_.size()) {
        throw ContractError("vocabulary index " + std::to_string(index) + " out of range");
    }
    return words_[index];
}

std::size_t Vocabulary::frequency_at(std::size_t index) const {
    if (index >= frequencies_.size()) {
        throw ContractError("vocabulary index " + std::to_string(index) + " out of range");
    }
    return frequencies_[index];
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write vocabulary file " + path.string());
    }
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out << i << '\t' << words_[i] << '\t' << frequencies_[i] << '\n';
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read vocabulary file " + path.string());
    }
    Vocabulary v;
    std::string line;
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t idx = 0, freq = 0;
        std::string word;
        char tab = 0;
        if (!(ls >> idx) || !ls.get(tab) || tab != '\t' || !std::getline(ls, word, '\t') ||
            !(ls >> freq)) {
            throw DataError("malformed vocabulary line in " + path.string() + ": " + line);
        }
        if (idx != expected) {
            throw DataError("non-dense vocabulary indices in " + path.string());
        }
        v.push_entry(word, freq);
        ++expected;
    }
    if (v.size() < kNumReserved) {
        throw DataError("vocabulary file " + path.string() + " lacks reserved tokens");
    }
    for (std::size_t i = 0; i < kNumReserved; ++i) {
        if (v.words_[i] != kReservedWords[i]) {
            throw DataError("vocabulary file " + path.string() + " reserved slot " +
                            std::to_string(i) + " holds '" + v.words_[i] + "'");
        }
    }
    return v;
}

Caption encode(const std::vector<std::string>& words, const Vocabulary& vocab,
               std::size_t max_caption_len) {
    Caption c;
    c.tokens.reserve(std::min(words.size(), max_caption_len) + 2);
    c.tokens.push_back(Vocabulary::kStart);
    const std::size_t n = std::min(words.size(), max_caption_len);
    for (std::size_t i = 0; i < n; ++i) {
        c.tokens.push_back(vocab.index_of(words[i]));
    }
    c.tokens.push_back(Vocabulary::kEnd);
    return c;
}

std::string decode(const Caption& caption, const Vocabulary& vocab) {
    std::string out;
    for (std::size_t t : caption.tokens) {
        if (t < Vocabulary::kNumReserved) continue;
        if (!out.empty()) out.push_back(' ');
        out += vocab.word_at(t);
    }
    return out;
}

}  // namespace grucap
