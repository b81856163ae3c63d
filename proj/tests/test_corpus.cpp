#include <gtest/gtest.h>

#include "styleforge/corpus.hpp"
#include "support/tempdir.hpp"

using namespace styleforge;
using testing_support::TempDir;

namespace {

std::vector<std::string> texts(const std::vector<Token> &toks) {
    std::vector<std::string> out;
    for (const auto &t : toks) out.push_back(t.text);
    return out;
}

std::vector<std::string> sentence_texts(const Paragraph &p) {
    std::vector<std::string> out;
    for (const auto &s : p.sentences) out.push_back(s.text);
    return out;
}

} // namespace

TEST(SplitParagraphs, BlankLinesSeparate) {
    EXPECT_EQ(split_paragraphs("a\n\nb"), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(split_paragraphs("a\nb\n\n\nc"), (std::vector<std::string>{"a b", "c"}));
    EXPECT_TRUE(split_paragraphs("\n\n").empty());
    EXPECT_EQ(split_paragraphs("  lead \n  trail  \n \t\nnext"), (std::vector<std::string>{"lead trail", "next"}));
}

TEST(SplitParagraphs, JoinIsIdentityOnNormalizedLists) {
    const std::vector<std::string> paras{"First one.", "Second, here.", "Third"};
    std::string joined;
    for (std::size_t i = 0; i < paras.size(); ++i) joined += (i ? "\n\n" : "") + paras[i];
    EXPECT_EQ(split_paragraphs(joined), paras);
}

TEST(SplitSentences, Terminators) {
    EXPECT_EQ(split_sentences("I came. I saw."), (std::vector<std::string>{"I came.", "I saw."}));
    EXPECT_EQ(split_sentences("Why? Because."), (std::vector<std::string>{"Why?", "Because."}));
    EXPECT_EQ(split_sentences("Stop!! Go on"), (std::vector<std::string>{"Stop!!", "Go on"}));
}

TEST(SplitSentences, AbbreviationsAndInitials) {
    EXPECT_EQ(split_sentences("Mr. Smith left."), (std::vector<std::string>{"Mr. Smith left."}));
    EXPECT_EQ(split_sentences("We met J. Smith today. He waved."),
              (std::vector<std::string>{"We met J. Smith today.", "He waved."}));
    EXPECT_EQ(split_sentences("Apples, pears, etc. are fruit."), (std::vector<std::string>{"Apples, pears, etc. are fruit."}));
    // an initial that is the whole sentence still ends it
    EXPECT_EQ(split_sentences("A. B."), (std::vector<std::string>{"A.", "B."}));
}

TEST(SplitSentences, ClosingQuoteStaysWithSentence) {
    EXPECT_EQ(split_sentences("He said \"go.\" Then left."),
              (std::vector<std::string>{"He said \"go.\"", "Then left."}));
}

TEST(SplitSentences, DecimalIsNotBoundary) {
    EXPECT_EQ(split_sentences("It cost 3.50 today. Fine."), (std::vector<std::string>{"It cost 3.50 today.", "Fine."}));
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(texts(tokenize("I came, and I saw.")),
              (std::vector<std::string>{"I", "came", ",", "and", "I", "saw", "."}));
    EXPECT_EQ(texts(tokenize("don't")), (std::vector<std::string>{"don't"}));
    EXPECT_EQ(texts(tokenize("a well-known fact")), (std::vector<std::string>{"a", "well-known", "fact"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(texts(tokenize("(yes)—no")), (std::vector<std::string>{"(", "yes", ")", "—", "no"}));
}

TEST(Tokenize, Kinds) {
    const auto t = tokenize("Cats 42 , 3.5 x2");
    ASSERT_EQ(t.size(), 5u);
    EXPECT_EQ(t[0].kind, TokenKind::Word);
    EXPECT_EQ(t[1].kind, TokenKind::Number);
    EXPECT_EQ(t[2].kind, TokenKind::Punctuation);
    EXPECT_EQ(t[3].kind, TokenKind::Number);
    EXPECT_EQ(t[4].kind, TokenKind::Other);
}

TEST(Tokenize, TokensAreNonEmptyWithoutWhitespace) {
    for (const auto &t : tokenize("  \"Well,\" she said;  it's (mostly) fine:  yes!\t ")) {
        EXPECT_FALSE(t.text.empty());
        EXPECT_EQ(t.text.find_first_of(" \t\n\r"), std::string::npos);
    }
}

TEST(Detokenize, RoundTripsNormalizedSentences) {
    for (const std::string s : {"I came, and I saw.", "He said \"go home\" (twice); then left: fast!",
                                "It's well-known—or is it?", "Numbers like 3.5 and 1,000 stay."}) {
        EXPECT_EQ(detokenize(tokenize(s)), s);
    }
}

TEST(Corpus, TokenCountConservation) {
    const std::string para = "I came. I saw, and I conquered! Mr. Brown agreed? Yes.";
    const auto doc = parse_document(para, "x");
    std::size_t n = 0;
    for (const auto &s : doc.paragraphs[0].sentences) n += s.tokens.size();
    EXPECT_EQ(n, tokenize(para).size());
}

TEST(LoadCorpus, SegmentsFiles) {
    TempDir dir;
    const auto p = dir.write("a.txt", "A. B.\n\nC.");
    const auto c = load_corpus({p});
    ASSERT_EQ(c.documents.size(), 1u);
    ASSERT_EQ(c.documents[0].paragraphs.size(), 2u);
    EXPECT_EQ(sentence_texts(c.documents[0].paragraphs[0]), (std::vector<std::string>{"A.", "B."}));
    EXPECT_EQ(sentence_texts(c.documents[0].paragraphs[1]), (std::vector<std::string>{"C."}));
}

TEST(LoadCorpus, EmptyFileAndOrdering) {
    TempDir dir;
    const auto b = dir.write("b.txt", "Bee.");
    const auto e = dir.write("a.txt", "");
    const auto c = load_corpus({b, e});
    ASSERT_EQ(c.documents.size(), 2u);
    EXPECT_EQ(c.documents[0].source_id, e);
    EXPECT_TRUE(c.documents[0].paragraphs.empty());
    EXPECT_EQ(c.documents[1].source_id, b);
}

TEST(LoadCorpus, ErrorsNameTheFile) {
    TempDir dir;
    const auto bad = dir.write("bad.txt", std::string("ok \xc3\x28 no"));
    try {
        load_corpus({bad});
        FAIL() << "expected EncodingError";
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::Encoding);
        EXPECT_NE(std::string(e.what()).find("bad.txt"), std::string::npos);
    }
    const auto missing = (dir.path() / "missing.txt").string();
    try {
        load_corpus({missing});
        FAIL() << "expected IoError";
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::Io);
        EXPECT_NE(std::string(e.what()).find("missing.txt"), std::string::npos);
    }
}

TEST(LoadCorpus, DirectoriesExpandRecursively) {
    TempDir dir;
    dir.write("d/one.txt", "One.");
    dir.write("d/sub/two.txt", "Two.");
    const auto c = load_corpus(expand_corpus_paths({dir.path() / "d"}));
    EXPECT_EQ(c.documents.size(), 2u);
    EXPECT_EQ(c.sentence_count(), 2u);
}

TEST(Corpus, Deterministic) {
    const std::string raw = "Some text. More text!\n\nAnother para, with commas; and more.";
    const auto a = corpus_from_text(raw), b = corpus_from_text(raw);
    ASSERT_EQ(a.sentence_count(), b.sentence_count());
    std::vector<std::string> ta, tb;
    a.for_each_sentence([&](const Sentence &s) { ta.push_back(s.text); });
    b.for_each_sentence([&](const Sentence &s) { tb.push_back(s.text); });
    EXPECT_EQ(ta, tb);
}
