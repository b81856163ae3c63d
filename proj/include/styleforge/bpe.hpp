#pragma once

// Byte Pair Encoding over lowercased word types, plus packing of encoded
// documents into fixed-length id streams for language-model training.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "styleforge/corpus.hpp"
#include "styleforge/error.hpp"
#include "styleforge/text.hpp"

namespace styleforge {

using TokenId = std::int32_t;

namespace special {
constexpr TokenId PAD = 0;
constexpr TokenId BOS = 1;
constexpr TokenId EOS = 2;
constexpr TokenId MASK = 3;
constexpr TokenId BLANK = 4;
constexpr TokenId UNK = 5;
constexpr TokenId kCount = 6;

inline constexpr const char *kNames[kCount] = {"<pad>", "<s>", "</s>", "<mask>", "<blank>", "<unk>"};
} // namespace special

inline bool is_special(TokenId id) noexcept { return id >= 0 && id < special::kCount; }

inline constexpr std::string_view kEndOfWord = "</w>";

using Merge = std::pair<std::string, std::string>;

class MergeTable {
  public:
    MergeTable() = default;

    /// Rebuilds the vocabulary from the alphabet and the ordered merges:
    /// specials, then "</w>", then the sorted alphabet, then merged symbols
    /// in learning order.
    MergeTable(std::vector<std::string> alphabet, std::vector<Merge> merges, std::string provenance = {})
        : alphabet_(std::move(alphabet)), merges_(std::move(merges)), provenance_(std::move(provenance)) {
        std::sort(alphabet_.begin(), alphabet_.end());
        alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()), alphabet_.end());
        for (TokenId i = 0; i < special::kCount; ++i) symbols_.push_back(special::kNames[i]);
        add_symbol(std::string(kEndOfWord));
        for (const auto &c : alphabet_) add_symbol(c);
        for (std::size_t r = 0; r < merges_.size(); ++r) {
            add_symbol(merges_[r].first + merges_[r].second);
            rank_.emplace(merges_[r].first + '\x1f' + merges_[r].second, r);
        }
    }

    const std::vector<Merge> &merges() const noexcept { return merges_; }
    const std::vector<std::string> &alphabet() const noexcept { return alphabet_; }
    const std::string &provenance() const noexcept { return provenance_; }
    std::size_t vocab_size() const noexcept { return symbols_.size(); }

    const std::string &symbol(TokenId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size())
            throw Error(Errc::UnknownId, "id " + std::to_string(id) + " outside vocabulary of " +
                                             std::to_string(symbols_.size()));
        return symbols_[static_cast<std::size_t>(id)];
    }

    TokenId id_of(const std::string &sym) const {
        auto it = vocab_.find(sym);
        return it == vocab_.end() ? special::UNK : it->second;
    }

    /// Rank of the merge (left, right), or npos.
    std::size_t rank(const std::string &left, const std::string &right) const {
        auto it = rank_.find(left + '\x1f' + right);
        return it == rank_.end() ? std::numeric_limits<std::size_t>::max() : it->second;
    }

    bool operator==(const MergeTable &o) const { return alphabet_ == o.alphabet_ && merges_ == o.merges_; }

  private:
    void add_symbol(const std::string &sym) {
        if (vocab_.count(sym)) return;
        vocab_.emplace(sym, static_cast<TokenId>(symbols_.size()));
        symbols_.push_back(sym);
    }

    std::vector<std::string> alphabet_;
    std::vector<Merge> merges_;
    std::string provenance_;
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, TokenId> vocab_;
    std::unordered_map<std::string, std::size_t> rank_;
};

/// Lowercased word-type frequency table over every token of the corpus.
inline std::map<std::string, std::int64_t> word_frequencies(const Corpus &corpus) {
    std::map<std::string, std::int64_t> freq;
    corpus.for_each_sentence([&](const Sentence &s) {
        for (const auto &t : s.tokens) ++freq[text::ascii_lower(t.text)];
    });
    return freq;
}

inline std::vector<std::string> initial_symbols(std::string_view word) {
    auto syms = text::utf8_chars(word);
    syms.emplace_back(kEndOfWord);
    return syms;
}

/// Greedy most-frequent-pair merging. Ties go to the lexicographically
/// smallest (left, right); learning stops once no pair occurs twice.
inline MergeTable learn_bpe(const std::map<std::string, std::int64_t> &word_freq, std::size_t n_merges,
                            std::string provenance = {}) {
    if (word_freq.empty()) throw Error(Errc::EmptyCorpus, "no tokens to learn BPE from");

    std::vector<std::vector<std::string>> words;
    std::vector<std::int64_t> counts;
    std::set<std::string> alphabet;
    for (const auto &[w, c] : word_freq) {
        words.push_back(initial_symbols(w));
        counts.push_back(c);
        for (const auto &ch : text::utf8_chars(w)) alphabet.insert(ch);
    }

    // Pair counts are maintained incrementally: a merge only touches the
    // words that contain its pair.
    std::map<Merge, std::int64_t> pairs;
    std::map<Merge, std::set<std::size_t>> where;
    auto account = [&](std::size_t i, std::int64_t sign) {
        const auto &w = words[i];
        for (std::size_t k = 0; k + 1 < w.size(); ++k) {
            Merge p{w[k], w[k + 1]};
            auto it = pairs.find(p);
            if (it == pairs.end()) it = pairs.emplace(p, 0).first;
            it->second += sign * counts[i];
            if (it->second == 0) pairs.erase(it);
            if (sign > 0) where[p].insert(i);
        }
    };
    for (std::size_t i = 0; i < words.size(); ++i) account(i, +1);

    std::vector<Merge> merges;
    while (merges.size() < n_merges) {
        const Merge *best = nullptr;
        std::int64_t best_count = 1;
        // std::map iterates in lexicographic order, so strict > keeps the
        // smallest pair among equals.
        for (const auto &[pair, c] : pairs) {
            if (c > best_count) {
                best = &pair;
                best_count = c;
            }
        }
        if (best == nullptr) break;
        const Merge merge = *best;
        const std::string joined = merge.first + merge.second;
        const std::set<std::size_t> touched = std::move(where[merge]);
        where.erase(merge);
        for (std::size_t i : touched) {
            auto &w = words[i];
            bool present = false;
            for (std::size_t k = 0; k + 1 < w.size() && !present; ++k)
                present = w[k] == merge.first && w[k + 1] == merge.second;
            if (!present) continue;
            account(i, -1);
            std::vector<std::string> next;
            next.reserve(w.size());
            for (std::size_t k = 0; k < w.size(); ++k) {
                if (k + 1 < w.size() && w[k] == merge.first && w[k + 1] == merge.second) {
                    next.push_back(joined);
                    ++k;
                } else {
                    next.push_back(std::move(w[k]));
                }
            }
            w = std::move(next);
            account(i, +1);
        }
        merges.push_back(merge);
    }
    return MergeTable(std::vector<std::string>(alphabet.begin(), alphabet.end()), std::move(merges),
                      std::move(provenance));
}

inline MergeTable learn_bpe(const Corpus &corpus, std::size_t n_merges, std::string provenance = {}) {
    return learn_bpe(word_frequencies(corpus), n_merges, std::move(provenance));
}

/// Symbols of a lowercased word after applying merges in rank order.
inline std::vector<std::string> bpe_segment(const MergeTable &table, std::string_view word) {
    auto syms = initial_symbols(text::ascii_lower(word));
    constexpr auto npos = std::numeric_limits<std::size_t>::max();
    while (syms.size() > 1) {
        std::size_t best = npos;
        for (std::size_t k = 0; k + 1 < syms.size(); ++k) best = std::min(best, table.rank(syms[k], syms[k + 1]));
        if (best == npos) break;
        const auto &[left, right] = table.merges()[best];
        std::vector<std::string> next;
        next.reserve(syms.size());
        for (std::size_t k = 0; k < syms.size(); ++k) {
            if (k + 1 < syms.size() && syms[k] == left && syms[k + 1] == right) {
                next.push_back(left + right);
                ++k;
            } else {
                next.push_back(std::move(syms[k]));
            }
        }
        syms = std::move(next);
    }
    return syms;
}

inline std::vector<TokenId> bpe_encode(const MergeTable &table, std::string_view word) {
    std::vector<TokenId> ids;
    for (const auto &s : bpe_segment(table, word)) ids.push_back(table.id_of(s));
    return ids;
}

/// Encodes a sentence word by word; each inner vector is one word.
inline std::vector<std::vector<TokenId>> encode_words(const MergeTable &table, const Sentence &sentence) {
    std::vector<std::vector<TokenId>> out;
    out.reserve(sentence.tokens.size());
    for (const auto &t : sentence.tokens) out.push_back(bpe_encode(table, t.text));
    return out;
}

inline std::vector<TokenId> flatten(const std::vector<std::vector<TokenId>> &words) {
    std::vector<TokenId> out;
    for (const auto &w : words) out.insert(out.end(), w.begin(), w.end());
    return out;
}

/// Splits a flat id sequence back into words at symbols ending in "</w>".
/// Special ids form single-id words.
inline std::vector<std::vector<TokenId>> group_words(const MergeTable &table, const std::vector<TokenId> &ids) {
    std::vector<std::vector<TokenId>> out;
    std::vector<TokenId> current;
    for (TokenId id : ids) {
        if (is_special(id)) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
            out.push_back({id});
            continue;
        }
        current.push_back(id);
        const auto &sym = table.symbol(id);
        if (sym.size() >= kEndOfWord.size() && sym.compare(sym.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

/// Decodes ids into words (BLANK renders as "_", other specials vanish).
inline std::vector<std::string> bpe_decode_words(const std::vector<TokenId> &ids, const MergeTable &table) {
    std::vector<std::string> words;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) words.push_back(std::move(current));
        current.clear();
    };
    for (TokenId id : ids) {
        const std::string &sym = table.symbol(id);
        if (id == special::BLANK) {
            flush();
            words.emplace_back("_");
            continue;
        }
        if (is_special(id)) continue;
        if (sym.size() >= kEndOfWord.size() && sym.compare(sym.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0) {
            current.append(sym, 0, sym.size() - kEndOfWord.size());
            flush();
        } else {
            current += sym;
        }
    }
    flush();
    return words;
}

inline std::string bpe_decode(const std::vector<TokenId> &ids, const MergeTable &table) {
    return detokenize(bpe_decode_words(ids, table));
}

/// Encoded sentences of each document joined by EOS and cut into windows of
/// `stream_len`; the last window of a document is PAD-padded. Windows never
/// straddle documents.
inline std::vector<std::vector<TokenId>> build_streams(const Corpus &corpus, const MergeTable &table,
                                                       std::size_t stream_len) {
    if (stream_len < 8) throw Error(Errc::InvalidArgument, "stream_len must be at least 8");
    std::vector<std::vector<TokenId>> streams;
    for (const auto &doc : corpus.documents) {
        std::vector<TokenId> ids;
        bool first = true;
        for (const auto &para : doc.paragraphs) {
            for (const auto &sent : para.sentences) {
                if (!first) ids.push_back(special::EOS);
                first = false;
                for (const auto &t : sent.tokens) {
                    auto w = bpe_encode(table, t.text);
                    ids.insert(ids.end(), w.begin(), w.end());
                }
            }
        }
        for (std::size_t off = 0; off < ids.size(); off += stream_len) {
            std::vector<TokenId> window(stream_len, special::PAD);
            const std::size_t n = std::min(stream_len, ids.size() - off);
            std::copy_n(ids.begin() + static_cast<std::ptrdiff_t>(off), n, window.begin());
            streams.push_back(std::move(window));
        }
    }
    return streams;
}

// Merges file:
//   #styleforge-bpe v1
//   #provenance <free text>
//   #config <hash>
//   #alphabet <sym> <sym> ...
//   #merges <count>
//   <left> <right>            (count lines, learning order)
inline void write_merges(std::ostream &out, const MergeTable &table, std::string_view config_hash = {}) {
    out << "#styleforge-bpe v1\n";
    out << "#provenance " << table.provenance() << '\n';
    out << "#config " << config_hash << '\n';
    out << "#alphabet";
    for (const auto &c : table.alphabet()) out << ' ' << c;
    out << '\n';
    out << "#merges " << table.merges().size() << '\n';
    for (const auto &[l, r] : table.merges()) out << l << ' ' << r << '\n';
}

inline MergeTable read_merges(std::istream &in, const std::string &name = "<stream>") {
    auto fail = [&](const std::string &why) { return Error(Errc::Format, "merges file '" + name + "': " + why); };
    std::string line;
    if (!std::getline(in, line) || line != "#styleforge-bpe v1") throw fail("missing '#styleforge-bpe v1' header");

    std::string provenance;
    std::vector<std::string> alphabet;
    std::size_t count = 0;
    bool have_count = false;
    while (!have_count && std::getline(in, line)) {
        if (line.rfind("#provenance", 0) == 0) {
            provenance = line.size() > 12 ? line.substr(12) : std::string{};
        } else if (line.rfind("#alphabet", 0) == 0) {
            std::istringstream ss(line.substr(9));
            std::string sym;
            while (ss >> sym) alphabet.push_back(sym);
        } else if (line.rfind("#merges ", 0) == 0) {
            try {
                count = std::stoull(line.substr(8));
            } catch (const std::exception &) {
                throw fail("bad merge count");
            }
            have_count = true;
        } else if (line.rfind("#", 0) != 0) {
            throw fail("merge line before '#merges' header");
        }
    }
    if (!have_count) throw fail("missing '#merges' line");

    std::vector<Merge> merges;
    merges.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw fail("expected " + std::to_string(count) + " merges");
        const auto sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() || line.find(' ', sp + 1) != std::string::npos)
            throw fail("malformed merge on line " + std::to_string(i + 1));
        merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }
    return MergeTable(std::move(alphabet), std::move(merges), std::move(provenance));
}

inline void save_merges(const std::string &path, const MergeTable &table, std::string_view config_hash = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
    write_merges(out, table, config_hash);
}

inline MergeTable load_merges(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read '" + path + "'");
    return read_merges(in, path);
}

} // namespace styleforge
