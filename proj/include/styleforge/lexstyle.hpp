#pragma once

// Lexical style scoring along four spectra. Seed words anchor each pole; every
// other word gets a raw score from its normalized PMI association with the
// seeds, and scores are then smoothed by label propagation over a kNN graph
// of words built from their NPMI context vectors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
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

inline constexpr std::size_t kSpectra = 4;

/// Pole A of each spectrum is the first name: subjective, concrete, literary,
/// formal.
inline constexpr std::array<std::string_view, kSpectra> kSpectrumNames = {
    "subjective-objective", "concrete-abstract", "literary-colloquial", "formal-informal"};

using StyleVector = std::array<double, kSpectra>;

struct SeedLexicon {
    // poles[d][0] = pole A words, poles[d][1] = pole B words
    std::array<std::array<std::set<std::string>, 2>, kSpectra> poles;

    void validate(std::size_t min_per_pole = 10) const {
        for (std::size_t d = 0; d < kSpectra; ++d) {
            for (int p = 0; p < 2; ++p)
                if (poles[d][p].size() < min_per_pole)
                    throw Error(Errc::Format, std::string(kSpectrumNames[d]) + " pole " + (p == 0 ? "a" : "b") +
                                                  " has fewer than " + std::to_string(min_per_pole) + " words");
            for (const auto &w : poles[d][0])
                if (poles[d][1].count(w))
                    throw Error(Errc::Format, "'" + w + "' appears in both poles of " + std::string(kSpectrumNames[d]));
        }
    }
};

inline std::size_t spectrum_index(std::string_view name) {
    for (std::size_t d = 0; d < kSpectra; ++d)
        if (kSpectrumNames[d] == name) return d;
    throw Error(Errc::Format, "unknown spectrum '" + std::string(name) + "'");
}

/// Lines "#spectrum <name> pole <a|b>" each followed by one lowercase word
/// per line. Blank lines are ignored.
inline SeedLexicon read_seed_lexicon(std::istream &in, const std::string &name = "<stream>",
                                     std::size_t min_per_pole = 10) {
    SeedLexicon seeds;
    std::set<std::string> *current = nullptr;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view l = text::trim(line);
        if (l.empty()) continue;
        if (l.rfind("#spectrum", 0) == 0) {
            std::istringstream ss{std::string(l)};
            std::string tag, spectrum, pole_kw, pole;
            ss >> tag >> spectrum >> pole_kw >> pole;
            if (pole_kw != "pole" || (pole != "a" && pole != "b"))
                throw Error(Errc::Format, name + ":" + std::to_string(lineno) + ": expected '#spectrum <name> pole <a|b>'");
            current = &seeds.poles[spectrum_index(spectrum)][pole == "a" ? 0 : 1];
            continue;
        }
        if (l[0] == '#') continue;
        if (current == nullptr) throw Error(Errc::Format, name + ":" + std::to_string(lineno) + ": word before any '#spectrum' header");
        current->insert(text::ascii_lower(l));
    }
    seeds.validate(min_per_pole);
    return seeds;
}

inline SeedLexicon load_seed_lexicon(const std::string &path, std::size_t min_per_pole = 10) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot read '" + path + "'");
    return read_seed_lexicon(in, path, min_per_pole);
}

/// One lowercase word per line; '#' starts a comment line.
inline std::set<std::string> read_word_list(std::istream &in) {
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view l = text::trim(line);
        if (l.empty() || l[0] == '#') continue;
        out.insert(text::ascii_lower(l));
    }
    return out;
}

inline std::set<std::string> load_word_list(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot read '" + path + "'");
    return read_word_list(in);
}

// ---------------------------------------------------------------------------
// co-occurrence

/// Paragraph-level, presence-based co-occurrence statistics.
class CoocTable {
  public:
    std::vector<std::string> vocab;            // sorted
    std::vector<std::uint64_t> word_freq;      // token frequency
    std::vector<std::uint64_t> doc_freq;       // paragraphs containing the word
    std::vector<std::vector<std::uint32_t>> postings; // sorted paragraph ids
    std::vector<std::size_t> context;          // vocab indices of the context words
    std::uint64_t n_paragraphs = 0;

    bool contains(std::string_view w) const { return index_.count(std::string(w)) > 0; }

    std::size_t index(std::string_view w) const {
        auto it = index_.find(std::string(w));
        if (it == index_.end()) throw Error(Errc::UnknownWord, "'" + std::string(w) + "' not in co-occurrence vocabulary");
        return it->second;
    }

    /// Number of paragraphs containing both words.
    std::uint64_t pair_freq(std::size_t a, std::size_t b) const {
        if (a == b) return doc_freq[a];
        const auto &pa = postings[a];
        const auto &pb = postings[b];
        std::uint64_t n = 0;
        std::size_t i = 0, j = 0;
        while (i < pa.size() && j < pb.size()) {
            if (pa[i] < pb[j]) ++i;
            else if (pb[j] < pa[i]) ++j;
            else {
                ++n;
                ++i;
                ++j;
            }
        }
        return n;
    }

    std::uint64_t pair_freq(std::string_view a, std::string_view b) const { return pair_freq(index(a), index(b)); }

    void rebuild_index() {
        index_.clear();
        for (std::size_t i = 0; i < vocab.size(); ++i) index_.emplace(vocab[i], i);
    }

  private:
    std::unordered_map<std::string, std::size_t> index_;
};

/// Vocabulary: lowercased word tokens with frequency >= f_min. Context: the
/// `context_size` most frequent non-stopword vocabulary words (ties broken
/// alphabetically).
inline CoocTable build_cooc(const Corpus &corpus, std::size_t f_min, std::size_t context_size,
                            const std::set<std::string> &stopwords = {}) {
    std::vector<std::vector<std::string>> paragraphs;
    std::map<std::string, std::uint64_t> freq;
    for (const auto &doc : corpus.documents) {
        for (const auto &para : doc.paragraphs) {
            std::set<std::string> present;
            for (const auto &s : para.sentences)
                for (const auto &t : s.tokens)
                    if (t.kind == TokenKind::Word) {
                        auto w = text::ascii_lower(t.text);
                        ++freq[w];
                        present.insert(std::move(w));
                    }
            paragraphs.emplace_back(present.begin(), present.end());
        }
    }
    if (paragraphs.empty() || freq.empty()) throw Error(Errc::EmptyCorpus, "co-occurrence needs at least one word");

    CoocTable t;
    t.n_paragraphs = paragraphs.size();
    for (const auto &[w, f] : freq) {
        if (f < f_min) continue;
        t.vocab.push_back(w);
        t.word_freq.push_back(f);
    }
    t.rebuild_index();
    t.postings.assign(t.vocab.size(), {});
    for (std::size_t p = 0; p < paragraphs.size(); ++p)
        for (const auto &w : paragraphs[p])
            if (t.contains(w)) t.postings[t.index(w)].push_back(static_cast<std::uint32_t>(p));
    t.doc_freq.resize(t.vocab.size());
    for (std::size_t i = 0; i < t.vocab.size(); ++i) t.doc_freq[i] = t.postings[i].size();

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < t.vocab.size(); ++i)
        if (!stopwords.count(t.vocab[i])) candidates.push_back(i);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return t.word_freq[a] > t.word_freq[b]; });
    if (candidates.size() > context_size) candidates.resize(context_size);
    std::sort(candidates.begin(), candidates.end());
    t.context = std::move(candidates);
    return t;
}

inline double npmi_from_counts(std::uint64_t pair, std::uint64_t n1, std::uint64_t n2, std::uint64_t total) {
    if (pair == 0) return 0.0;
    const double n = static_cast<double>(total);
    const double p12 = static_cast<double>(pair) / n;
    if (p12 >= 1.0) return 1.0;
    const double p1 = static_cast<double>(n1) / n;
    const double p2 = static_cast<double>(n2) / n;
    const double v = std::log(p12 / (p1 * p2)) / -std::log(p12);
    return std::clamp(v, -1.0, 1.0);
}

inline double npmi(const CoocTable &cooc, std::size_t a, std::size_t b) {
    return npmi_from_counts(cooc.pair_freq(a, b), cooc.doc_freq[a], cooc.doc_freq[b], cooc.n_paragraphs);
}

inline double npmi(const CoocTable &cooc, std::string_view w1, std::string_view w2) {
    return npmi(cooc, cooc.index(w1), cooc.index(w2));
}

// ---------------------------------------------------------------------------
// raw scores

struct RawStyleScores {
    std::vector<StyleVector> raw;        // signed, indexed like cooc.vocab
    std::vector<StyleVector> normalized; // min-max scaled to [0,1] per spectrum
};

inline RawStyleScores raw_style_scores(const CoocTable &cooc, const SeedLexicon &seeds) {
    std::array<std::array<std::vector<std::size_t>, 2>, kSpectra> covered;
    for (std::size_t d = 0; d < kSpectra; ++d)
        for (int p = 0; p < 2; ++p) {
            for (const auto &w : seeds.poles[d][p])
                if (cooc.contains(w)) covered[d][p].push_back(cooc.index(w));
            if (covered[d][p].empty())
                throw Error(Errc::NoSeedCoverage, std::string(kSpectrumNames[d]) + " pole " + (p == 0 ? "a" : "b") +
                                                      " has no seed word in the vocabulary");
        }

    const std::size_t n = cooc.vocab.size();
    RawStyleScores out;
    out.raw.assign(n, StyleVector{});
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t d = 0; d < kSpectra; ++d) {
            double mean[2] = {0.0, 0.0};
            for (int p = 0; p < 2; ++p) {
                for (std::size_t s : covered[d][p]) mean[p] += npmi(cooc, w, s);
                mean[p] /= static_cast<double>(covered[d][p].size());
            }
            out.raw[w][d] = mean[0] - mean[1];
        }
    }
    out.normalized = out.raw;
    for (std::size_t d = 0; d < kSpectra; ++d) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto &v : out.raw) {
            lo = std::min(lo, v[d]);
            hi = std::max(hi, v[d]);
        }
        for (auto &v : out.normalized) v[d] = hi > lo ? (v[d] - lo) / (hi - lo) : 0.5;
    }
    return out;
}

// ---------------------------------------------------------------------------
// kNN graph

struct WordGraph {
    std::vector<std::string> nodes;
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency; // sorted by neighbour

    std::size_t degree(std::size_t i) const { return adjacency[i].size(); }

    double weight(std::size_t a, std::size_t b) const {
        for (const auto &[j, w] : adjacency[a])
            if (j == b) return w;
        return 0.0;
    }
};

/// Node features are NPMI vectors over the context words (zero where a pair
/// never co-occurs). Each node links to its k most cosine-similar nodes
/// (ties: lower index first); weights are max(cosine, 0) and zero-weight links
/// are dropped; the result is the union of both directions.
inline WordGraph build_knn_graph(const CoocTable &cooc, std::size_t k) {
    const std::size_t n = cooc.vocab.size();
    if (k < 1) throw Error(Errc::InvalidArgument, "k must be at least 1");
    if (n < k + 1) throw Error(Errc::InvalidArgument, "vocabulary smaller than k+1");

    // sparse features and an inverted index over context dimensions
    std::vector<std::vector<std::pair<std::size_t, double>>> features(n);
    std::vector<std::vector<std::pair<std::size_t, double>>> by_dim(cooc.context.size());
    std::vector<double> norm(n, 0.0);
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t c = 0; c < cooc.context.size(); ++c) {
            const double v = npmi(cooc, w, cooc.context[c]);
            if (v == 0.0) continue;
            features[w].emplace_back(c, v);
            by_dim[c].emplace_back(w, v);
            norm[w] += v * v;
        }
        norm[w] = std::sqrt(norm[w]);
    }

    std::vector<std::set<std::size_t>> links(n);
    std::vector<double> dot(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dot.begin(), dot.end(), 0.0);
        for (const auto &[c, v] : features[i])
            for (const auto &[j, u] : by_dim[c]) dot[j] += v * u;
        std::vector<std::pair<double, std::size_t>> sims;
        sims.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double denom = norm[i] * norm[j];
            sims.emplace_back(denom > 0.0 ? dot[j] / denom : 0.0, j);
        }
        std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                          [](const auto &a, const auto &b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        for (std::size_t r = 0; r < k; ++r) {
            if (!(sims[r].first > 0.0)) break;
            links[i].insert(sims[r].second);
            links[sims[r].second].insert(i);
        }
    }

    WordGraph g;
    g.nodes = cooc.vocab;
    g.adjacency.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : links[i]) {
            double d = 0.0;
            // recompute the cosine symmetrically so both directions agree bitwise
            const auto &fa = i < j ? features[i] : features[j];
            const auto &fb = i < j ? features[j] : features[i];
            std::size_t x = 0, y = 0;
            while (x < fa.size() && y < fb.size()) {
                if (fa[x].first < fb[y].first) ++x;
                else if (fb[y].first < fa[x].first) ++y;
                else d += fa[x++].second * fb[y++].second;
            }
            const double w = std::max(0.0, d / (norm[std::min(i, j)] * norm[std::max(i, j)]));
            g.adjacency[i].emplace_back(j, std::min(w, 1.0));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// propagation and the lexicon

enum class Provenance { SeedClamped, Propagated, RawFallback };

inline std::string_view provenance_name(Provenance p) {
    switch (p) {
    case Provenance::SeedClamped: return "seed-clamped";
    case Provenance::Propagated: return "propagated";
    case Provenance::RawFallback: return "raw-fallback";
    }
    return "?";
}

inline Provenance parse_provenance(std::string_view s) {
    if (s == "seed-clamped") return Provenance::SeedClamped;
    if (s == "propagated") return Provenance::Propagated;
    if (s == "raw-fallback") return Provenance::RawFallback;
    throw Error(Errc::Format, "unknown provenance '" + std::string(s) + "'");
}

struct LexiconEntry {
    StyleVector scores{};
    Provenance provenance = Provenance::RawFallback;
};

struct StyleLexicon {
    std::map<std::string, LexiconEntry> entries;

    const LexiconEntry *find(const std::string &w) const {
        auto it = entries.find(w);
        return it == entries.end() ? nullptr : &it->second;
    }
};

struct PropagationStats {
    std::array<std::size_t, kSpectra> iterations{};
    std::array<double, kSpectra> residual{};
};

/// Clamped harmonic iteration per spectrum: seeds fixed at 1 (pole A) or 0
/// (pole B); every other node reached from a seed repeatedly takes the
/// weighted mean of its neighbours. Nodes in components without a seed keep
/// their normalized raw score. Seed words missing from the graph still enter
/// the lexicon, clamped on their own spectrum and 0.5 elsewhere.
inline StyleLexicon propagate(const WordGraph &graph, const SeedLexicon &seeds, const RawStyleScores &raw,
                              double tol = 1e-6, std::size_t max_iter = 200, PropagationStats *stats = nullptr) {
    const std::size_t n = graph.nodes.size();
    if (raw.normalized.size() != n) throw Error(Errc::LengthMismatch, "graph and raw scores cover different vocabularies");

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(graph.nodes[i], i);

    // connected components
    std::vector<std::size_t> component(n, n);
    std::size_t n_comp = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (component[s] != n) continue;
        std::vector<std::size_t> stack{s};
        component[s] = n_comp;
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            for (const auto &[v, w] : graph.adjacency[u])
                if (component[v] == n) {
                    component[v] = n_comp;
                    stack.push_back(v);
                }
        }
        ++n_comp;
    }

    std::vector<StyleVector> score = raw.normalized;
    std::vector<bool> is_seed_any(n, false), reached_any(n, false);
    PropagationStats local;

    for (std::size_t d = 0; d < kSpectra; ++d) {
        std::vector<int> clamp(n, -1);
        std::vector<bool> seeded_comp(n_comp, false);
        for (int p = 0; p < 2; ++p)
            for (const auto &w : seeds.poles[d][p]) {
                auto it = index.find(w);
                if (it == index.end()) continue;
                clamp[it->second] = p == 0 ? 1 : 0;
                seeded_comp[component[it->second]] = true;
                is_seed_any[it->second] = true;
            }

        std::vector<std::size_t> free_nodes;
        for (std::size_t i = 0; i < n; ++i) {
            if (clamp[i] >= 0) {
                score[i][d] = clamp[i];
            } else if (seeded_comp[component[i]] && !graph.adjacency[i].empty()) {
                free_nodes.push_back(i);
                reached_any[i] = true;
            }
        }

        std::vector<double> f(n), next(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = score[i][d];
        double change = 0.0;
        std::size_t it = 0;
        while (it < max_iter) {
            ++it;
            change = 0.0;
            next = f;
            for (std::size_t i : free_nodes) {
                double num = 0.0, den = 0.0;
                for (const auto &[j, w] : graph.adjacency[i]) {
                    num += w * f[j];
                    den += w;
                }
                if (den > 0.0) next[i] = std::clamp(num / den, 0.0, 1.0);
                change = std::max(change, std::fabs(next[i] - f[i]));
            }
            f.swap(next);
            if (change < tol) break;
        }
        local.iterations[d] = it;
        local.residual[d] = change;
        for (std::size_t i = 0; i < n; ++i) score[i][d] = f[i];
    }
    if (stats) *stats = local;

    StyleLexicon lex;
    for (std::size_t i = 0; i < n; ++i) {
        Provenance prov = is_seed_any[i] ? Provenance::SeedClamped
                          : reached_any[i] ? Provenance::Propagated
                                           : Provenance::RawFallback;
        lex.entries.emplace(graph.nodes[i], LexiconEntry{score[i], prov});
    }
    for (std::size_t d = 0; d < kSpectra; ++d)
        for (int p = 0; p < 2; ++p)
            for (const auto &w : seeds.poles[d][p]) {
                if (index.count(w)) continue;
                auto it = lex.entries.try_emplace(w, LexiconEntry{{0.5, 0.5, 0.5, 0.5}, Provenance::SeedClamped}).first;
                it->second.scores[d] = p == 0 ? 1.0 : 0.0;
            }
    return lex;
}

struct LexicalProfile {
    StyleVector values{0.5, 0.5, 0.5, 0.5};
    std::uint64_t covered_tokens = 0;
    bool no_coverage = false;
};

/// Token-weighted mean lexicon score of the corpus's word tokens; words
/// missing from the lexicon are skipped.
inline LexicalProfile lexical_profile(const Corpus &corpus, const StyleLexicon &lexicon) {
    LexicalProfile out;
    StyleVector sum{};
    corpus.for_each_sentence([&](const Sentence &s) {
        for (const auto &t : s.tokens) {
            if (t.kind != TokenKind::Word) continue;
            const auto *e = lexicon.find(text::ascii_lower(t.text));
            if (!e) continue;
            for (std::size_t d = 0; d < kSpectra; ++d) sum[d] += e->scores[d];
            ++out.covered_tokens;
        }
    });
    if (out.covered_tokens == 0) {
        out.no_coverage = true;
        return out;
    }
    for (std::size_t d = 0; d < kSpectra; ++d)
        out.values[d] = std::clamp(sum[d] / static_cast<double>(out.covered_tokens), 0.0, 1.0);
    return out;
}

struct LexiconBuildConfig {
    std::size_t f_min = 5;
    std::size_t context_size = 2000;
    std::size_t k = 10;
    double tol = 1e-6;
    std::size_t max_iter = 200;
};

inline StyleLexicon build_style_lexicon(const Corpus &corpus, const SeedLexicon &seeds,
                                        const std::set<std::string> &stopwords, const LexiconBuildConfig &cfg,
                                        PropagationStats *stats = nullptr) {
    const auto cooc = build_cooc(corpus, cfg.f_min, cfg.context_size, stopwords);
    const auto raw = raw_style_scores(cooc, seeds);
    const auto graph = build_knn_graph(cooc, std::min(cfg.k, cooc.vocab.size() - 1));
    return propagate(graph, seeds, raw, cfg.tol, cfg.max_iter, stats);
}

// "word s1 s2 s3 s4 provenance" rows sorted by word, after one header line.
inline void write_lexicon(std::ostream &out, const StyleLexicon &lex, std::string_view config_hash = {}) {
    out << "#styleforge-lexicon v1 config=" << config_hash << '\n';
    out << std::setprecision(17);
    for (const auto &[w, e] : lex.entries) {
        out << w;
        for (double s : e.scores) out << ' ' << s;
        out << ' ' << provenance_name(e.provenance) << '\n';
    }
}

inline StyleLexicon read_lexicon(std::istream &in, const std::string &name = "<stream>") {
    StyleLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string word, prov;
        LexiconEntry e;
        ss >> word;
        for (auto &s : e.scores) ss >> s;
        ss >> prov;
        if (!ss) throw Error(Errc::Format, name + ":" + std::to_string(lineno) + ": malformed lexicon row");
        for (double s : e.scores)
            if (!(s >= 0.0 && s <= 1.0)) throw Error(Errc::Format, name + ":" + std::to_string(lineno) + ": score outside [0,1]");
        e.provenance = parse_provenance(prov);
        lex.entries[word] = e;
    }
    return lex;
}

inline void save_lexicon(const std::string &path, const StyleLexicon &lex, std::string_view config_hash = {}) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
    write_lexicon(out, lex, config_hash);
}

inline StyleLexicon load_lexicon(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot read '" + path + "'");
    return read_lexicon(in, path);
}

} // namespace styleforge
