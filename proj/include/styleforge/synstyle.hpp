#pragma once

// Sentence-type distribution and surface statistics of a corpus.
//
// Sentence typing uses a parser-free rule cascade: it counts independent
// clauses from ", <coordinator>" and ";" and flags a dependent clause from a
// closed list of subordinators and relativizers. It approximates the
// clause-based typing of a full parser and is exactly reproducible.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "styleforge/corpus.hpp"
#include "styleforge/error.hpp"
#include "styleforge/text.hpp"

namespace styleforge {

enum class SentenceKind { Simple = 0, Compound = 1, Complex = 2, CompoundComplex = 3, Other = 4 };

inline constexpr std::array<std::string_view, 5> kSentenceKindNames = {"simple", "compound", "complex",
                                                                       "compound_complex", "other"};

inline constexpr std::array<std::string_view, 7> kCoordinators = {"and", "but", "or", "nor", "for", "so", "yet"};

inline constexpr std::array<std::string_view, 20> kSubordinators = {
    "because", "although", "though", "since", "while", "whereas", "if",  "unless", "until", "when",
    "whenever", "after",   "before", "that",  "which", "who",     "whom", "whose", "where", "why"};

namespace detail {
template <std::size_t N> bool in_list(const std::array<std::string_view, N> &list, std::string_view w) {
    for (auto x : list)
        if (x == w) return true;
    return false;
}

inline bool counts_as_word(const Token &t) { return t.kind == TokenKind::Word || t.kind == TokenKind::Number; }
} // namespace detail

inline SentenceKind classify_sentence(const std::vector<Token> &tokens) {
    std::size_t words = 0;
    std::size_t independent = 1;
    bool dependent = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto &t = tokens[i];
        if (detail::counts_as_word(t)) ++words;
        if (t.text == ";") ++independent;
        if (t.kind != TokenKind::Word) continue;
        const std::string w = text::ascii_lower(t.text);
        if (i > 0 && tokens[i - 1].text == "," && detail::in_list(kCoordinators, w)) ++independent;
        if (detail::in_list(kSubordinators, w)) dependent = true;
    }
    if (words < 3) return SentenceKind::Other;
    if (independent >= 2 && dependent) return SentenceKind::CompoundComplex;
    if (independent >= 2) return SentenceKind::Compound;
    if (dependent) return SentenceKind::Complex;
    return SentenceKind::Simple;
}

inline SentenceKind classify_sentence(const Sentence &s) { return classify_sentence(s.tokens); }

/// (Simple, Compound, Complex, CompoundComplex, Other) fractions.
using SyntacticProfile = std::array<double, 5>;

inline SyntacticProfile syntactic_profile(const Corpus &corpus) {
    std::array<std::uint64_t, 5> counts{};
    std::uint64_t total = 0;
    corpus.for_each_sentence([&](const Sentence &s) {
        ++counts[static_cast<std::size_t>(classify_sentence(s))];
        ++total;
    });
    if (total == 0) throw Error(Errc::EmptyCorpus, "syntactic profile needs at least one sentence");
    SyntacticProfile p{};
    for (std::size_t k = 0; k < 5; ++k) p[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    return p;
}

/// Normalization caps for (commas, semicolons, colons per sentence;
/// sentences per paragraph; words per sentence).
using SurfaceCaps = std::array<double, 5>;
inline constexpr SurfaceCaps kDefaultSurfaceCaps = {5.0, 1.0, 1.0, 20.0, 60.0};

struct SurfaceProfile {
    std::array<double, 5> raw{};
    std::array<double, 5> normalized{};
};

inline std::array<double, 5> normalize_surface(const std::array<double, 5> &raw, const SurfaceCaps &caps) {
    std::array<double, 5> out{};
    for (std::size_t k = 0; k < 5; ++k) {
        const double v = raw[k] / caps[k];
        out[k] = v > 1.0 ? 1.0 : v;
    }
    return out;
}

inline SurfaceProfile surface_profile(const Corpus &corpus, const SurfaceCaps &caps = kDefaultSurfaceCaps) {
    for (double c : caps)
        if (!(c > 0.0)) throw Error(Errc::Config, "surface caps must be positive");
    std::uint64_t commas = 0, semicolons = 0, colons = 0, words = 0, sentences = 0, paragraphs = 0;
    for (const auto &doc : corpus.documents) {
        for (const auto &para : doc.paragraphs) {
            if (para.sentences.empty()) continue;
            ++paragraphs;
            for (const auto &s : para.sentences) {
                ++sentences;
                for (const auto &t : s.tokens) {
                    if (t.text == ",") ++commas;
                    else if (t.text == ";") ++semicolons;
                    else if (t.text == ":") ++colons;
                    else if (detail::counts_as_word(t)) ++words;
                }
            }
        }
    }
    if (sentences == 0) throw Error(Errc::EmptyCorpus, "surface profile needs at least one sentence");
    const auto n = static_cast<double>(sentences);
    SurfaceProfile p;
    p.raw = {static_cast<double>(commas) / n, static_cast<double>(semicolons) / n, static_cast<double>(colons) / n,
             n / static_cast<double>(paragraphs), static_cast<double>(words) / n};
    p.normalized = normalize_surface(p.raw, caps);
    return p;
}

} // namespace styleforge
