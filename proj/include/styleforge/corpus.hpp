#pragma once

// Ingestion and segmentation: raw UTF-8 text -> documents -> paragraphs ->
// sentences -> tokens. Every statistic downstream is computed over these
// units, so the rules here are frozen and dependency-free.

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "styleforge/error.hpp"
#include "styleforge/text.hpp"

namespace styleforge {

enum class TokenKind { Word, Punctuation, Number, Other };

struct Token {
    std::string text;
    TokenKind kind = TokenKind::Other;

    bool operator==(const Token &) const = default;
};

struct Sentence {
    std::string text;
    std::vector<Token> tokens;
};

struct Paragraph {
    std::vector<Sentence> sentences;
};

struct Document {
    std::string source_id;
    std::vector<Paragraph> paragraphs;
};

struct Corpus {
    std::vector<Document> documents;

    template <typename Fn> void for_each_sentence(Fn &&fn) const {
        for (const auto &doc : documents)
            for (const auto &para : doc.paragraphs)
                for (const auto &sent : para.sentences) fn(sent);
    }

    std::size_t sentence_count() const {
        std::size_t n = 0;
        for_each_sentence([&](const Sentence &) { ++n; });
        return n;
    }

    std::size_t paragraph_count() const {
        std::size_t n = 0;
        for (const auto &doc : documents) n += doc.paragraphs.size();
        return n;
    }

    std::size_t token_count() const {
        std::size_t n = 0;
        for_each_sentence([&](const Sentence &s) { n += s.tokens.size(); });
        return n;
    }

    bool empty() const { return sentence_count() == 0; }
};

namespace detail {

inline bool is_punct_char(std::string_view c) noexcept {
    if (c.size() == 1) {
        switch (c[0]) {
        case '.': case ',': case ';': case ':': case '!': case '?':
        case '"': case '\'': case '(': case ')': case '[': case ']':
            return true;
        default:
            return false;
        }
    }
    return c == "—";
}

// Non-ASCII code points other than the em-dash count as letters.
inline bool is_letter_char(std::string_view c) noexcept {
    if (c.empty()) return false;
    if (c.size() == 1) return text::is_ascii_alpha(c[0]);
    return !is_punct_char(c);
}

inline bool is_digit_char(std::string_view c) noexcept { return c.size() == 1 && text::is_ascii_digit(c[0]); }

inline bool is_alnum_char(std::string_view c) noexcept { return is_letter_char(c) || is_digit_char(c); }

constexpr std::array<std::string_view, 13> kAbbreviations = {"Mr", "Mrs", "Ms", "Dr", "St",  "Prof", "Sr",
                                                             "Jr", "vs",  "etc", "e.g", "i.e", "No"};

inline bool is_closer(char c) noexcept { return c == '"' || c == '\'' || c == ')' || c == ']'; }
inline bool is_opener(char c) noexcept { return c == '"' || c == '\'' || c == '(' || c == '['; }

} // namespace detail

/// word: letters with internal ' or -; number: digits with internal . or ,;
/// punctuation: one character of .,;:!?"'()[] or the em-dash; anything else
/// is other.
inline TokenKind classify_token(std::string_view tok) {
    const auto chars = text::utf8_chars(tok);
    if (chars.empty()) return TokenKind::Other;
    if (chars.size() == 1 && detail::is_punct_char(chars[0])) return TokenKind::Punctuation;

    const auto &first = chars.front();
    const auto &last = chars.back();

    bool word = detail::is_letter_char(first) && detail::is_letter_char(last);
    for (std::size_t i = 1; word && i + 1 < chars.size(); ++i)
        word = detail::is_letter_char(chars[i]) || chars[i] == "'" || chars[i] == "-";
    if (word) return TokenKind::Word;

    bool number = detail::is_digit_char(first) && detail::is_digit_char(last);
    for (std::size_t i = 1; number && i + 1 < chars.size(); ++i)
        number = detail::is_digit_char(chars[i]) || chars[i] == "." || chars[i] == ",";
    if (number) return TokenKind::Number;

    return TokenKind::Other;
}

inline std::vector<Token> tokenize(std::string_view sentence) {
    std::vector<Token> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            TokenKind kind = classify_token(current);
            out.push_back({std::move(current), kind});
            current.clear();
        }
    };

    std::size_t i = 0;
    while (i < sentence.size()) {
        if (text::is_space(sentence[i])) {
            flush();
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < sentence.size() && !text::is_space(sentence[end])) ++end;
        const auto chars = text::utf8_chars(sentence.substr(i, end - i));
        for (std::size_t k = 0; k < chars.size(); ++k) {
            const auto &c = chars[k];
            if (!detail::is_punct_char(c)) {
                current += c;
                continue;
            }
            const bool inner = k > 0 && k + 1 < chars.size();
            if (inner && c == "'" && detail::is_alnum_char(chars[k - 1]) && detail::is_alnum_char(chars[k + 1])) {
                current += c;
            } else if (inner && (c == "." || c == ",") && detail::is_digit_char(chars[k - 1]) &&
                       detail::is_digit_char(chars[k + 1])) {
                current += c;
            } else {
                flush();
                out.push_back({c, TokenKind::Punctuation});
            }
        }
        flush();
        i = end;
    }
    flush();
    return out;
}

/// Joins tokens with single spaces, then removes the spaces that punctuation
/// does not take: none before closers, none after openers, none around the
/// em-dash. Straight quotes alternate between opening and closing.
inline std::string detokenize(const std::vector<std::string> &tokens) {
    std::string out;
    bool no_space_next = true;
    bool double_open = false;
    bool single_open = false;
    for (const auto &tok : tokens) {
        bool attach_left = false;
        bool attach_right = false;
        if (tok == "." || tok == "," || tok == ";" || tok == ":" || tok == "!" || tok == "?" || tok == ")" ||
            tok == "]") {
            attach_left = true;
        } else if (tok == "(" || tok == "[") {
            attach_right = true;
        } else if (tok == "—") {
            attach_left = attach_right = true;
        } else if (tok == "\"" || tok == "'") {
            bool &open = tok == "\"" ? double_open : single_open;
            if (open) attach_left = true;
            else attach_right = true;
            open = !open;
        }
        if (!out.empty() && !no_space_next && !attach_left) out += ' ';
        out += tok;
        no_space_next = attach_right;
    }
    return out;
}

inline std::string detokenize(const std::vector<Token> &tokens) {
    std::vector<std::string> texts;
    texts.reserve(tokens.size());
    for (const auto &t : tokens) texts.push_back(t.text);
    return detokenize(texts);
}

/// Paragraphs are maximal runs of non-blank lines; lines are trimmed and
/// joined with single spaces.
inline std::vector<std::string> split_paragraphs(std::string_view raw) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
    };
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        std::size_t nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) nl = raw.size();
        std::string_view line = text::trim(raw.substr(pos, nl - pos));
        if (line.empty()) {
            flush();
        } else {
            if (!current.empty()) current += ' ';
            current += line;
        }
        pos = nl + 1;
    }
    flush();
    return out;
}

/// Sentence boundaries sit after '.', '!' or '?' (plus any closing quotes or
/// brackets) when followed by whitespace or the end of the paragraph. A '.'
/// ending a listed abbreviation, or a single capital initial inside the
/// sentence, is not a boundary.
inline std::vector<std::string> split_sentences(std::string_view paragraph) {
    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    auto emit = [&](std::size_t end) {
        std::string_view s = text::trim(paragraph.substr(start, end - start));
        if (!s.empty()) out.emplace_back(s);
        start = end;
    };
    while (i < paragraph.size()) {
        const char c = paragraph[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < paragraph.size() && (paragraph[j] == '.' || paragraph[j] == '!' || paragraph[j] == '?')) ++j;
        const std::size_t term_last = j - 1;
        while (j < paragraph.size() && detail::is_closer(paragraph[j])) ++j;
        if (j < paragraph.size() && !text::is_space(paragraph[j])) {
            i = j;
            continue;
        }
        bool boundary = true;
        if (paragraph[term_last] == '.' && term_last == i) {
            std::size_t w = i;
            while (w > start && !text::is_space(paragraph[w - 1])) --w;
            while (w < i && detail::is_opener(paragraph[w])) ++w;
            std::string_view word = paragraph.substr(w, i - w);
            // An initial opening the sentence ("A. B.") still ends it.
            const bool initial = word.size() == 1 && text::is_ascii_upper(word[0]) &&
                                 !text::trim(paragraph.substr(start, w - start)).empty();
            const bool abbrev =
                std::find(detail::kAbbreviations.begin(), detail::kAbbreviations.end(), word) !=
                detail::kAbbreviations.end();
            boundary = !(initial || abbrev);
        }
        if (boundary) emit(j);
        i = j;
    }
    emit(paragraph.size());
    return out;
}

inline Document parse_document(std::string_view raw, std::string source_id) {
    Document doc;
    doc.source_id = std::move(source_id);
    for (const auto &ptext : split_paragraphs(raw)) {
        Paragraph para;
        for (auto &stext : split_sentences(ptext)) {
            Sentence s;
            s.tokens = tokenize(stext);
            s.text = std::move(stext);
            para.sentences.push_back(std::move(s));
        }
        doc.paragraphs.push_back(std::move(para));
    }
    return doc;
}

inline Corpus corpus_from_text(std::string_view raw, std::string source_id = "<memory>") {
    Corpus c;
    c.documents.push_back(parse_document(raw, std::move(source_id)));
    return c;
}

inline std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(Errc::Io, "read failed for '" + path.string() + "'");
    std::string data = ss.str();
    if (auto bad = text::find_invalid_utf8(data))
        throw Error(Errc::Encoding,
                    "invalid UTF-8 in '" + path.string() + "' at byte " + std::to_string(*bad));
    return data;
}

/// One document per file, in lexicographic path order.
inline Corpus load_corpus(std::vector<std::filesystem::path> paths) {
    std::sort(paths.begin(), paths.end());
    Corpus corpus;
    for (const auto &p : paths) corpus.documents.push_back(parse_document(read_text_file(p), p.string()));
    return corpus;
}

/// Expands directories into their regular files (recursively) and keeps plain
/// file arguments as given.
inline std::vector<std::filesystem::path> expand_corpus_paths(const std::vector<std::filesystem::path> &args) {
    std::vector<std::filesystem::path> out;
    for (const auto &a : args) {
        std::error_code ec;
        if (std::filesystem::is_directory(a, ec)) {
            for (const auto &entry : std::filesystem::recursive_directory_iterator(a))
                if (entry.is_regular_file()) out.push_back(entry.path());
        } else {
            out.push_back(a);
        }
    }
    return out;
}

inline Corpus merge_corpora(const Corpus &a, const Corpus &b) {
    Corpus out = a;
    out.documents.insert(out.documents.end(), b.documents.begin(), b.documents.end());
    return out;
}

} // namespace styleforge
