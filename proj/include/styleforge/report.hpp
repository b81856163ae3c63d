#pragma once

// Style profiles, the evaluation report and its JSON form, and aggregation of
// per-author reports into mean ± sample standard deviation.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "styleforge/corpus.hpp"
#include "styleforge/error.hpp"
#include "styleforge/lexstyle.hpp"
#include "styleforge/metrics.hpp"
#include "styleforge/synstyle.hpp"
#include "styleforge/text.hpp"

namespace styleforge {

inline constexpr std::string_view kVersion = "styleforge 0.1.0";

using Json = nlohmann::ordered_json;

struct StyleProfile {
    LexicalProfile lexical;
    SyntacticProfile syntactic{};
    SurfaceProfile surface;
};

inline StyleProfile style_profile(const Corpus &corpus, const StyleLexicon &lexicon,
                                  const SurfaceCaps &caps = kDefaultSurfaceCaps) {
    return {lexical_profile(corpus, lexicon), syntactic_profile(corpus), surface_profile(corpus, caps)};
}

struct ContentScores {
    double bleu = 0.0;
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rouge3 = 0.0;
    double rougeL = 0.0;
};

struct AlignmentScores {
    double lexical_mse = 0.0;
    double syntactic_jsd = 0.0;
    double surface_mse = 0.0;
};

struct ReportMeta {
    std::string source_id;
    std::string target_id;
    std::string config_hash;
    std::string version{kVersion};
};

struct EvaluationReport {
    ContentScores content;
    AlignmentScores alignment;
    StyleProfile generated;
    StyleProfile target;
    ReportMeta meta;
};

/// Lowercased token texts of every sentence, in corpus order.
inline std::vector<TokenSeq> sentence_token_texts(const Corpus &corpus) {
    std::vector<TokenSeq> out;
    corpus.for_each_sentence([&](const Sentence &s) {
        TokenSeq seq;
        seq.reserve(s.tokens.size());
        for (const auto &t : s.tokens) seq.push_back(text::ascii_lower(t.text));
        out.push_back(std::move(seq));
    });
    return out;
}

inline ContentScores content_scores(const Corpus &generated, const Corpus &source) {
    const auto cand = sentence_token_texts(generated);
    const auto ref = sentence_token_texts(source);
    if (cand.size() != ref.size())
        throw Error(Errc::AlignmentMismatch, "generated has " + std::to_string(cand.size()) + " sentences, source has " +
                                                 std::to_string(ref.size()));
    if (cand.empty()) throw Error(Errc::EmptyCorpus, "no sentences to compare");
    for (std::size_t i = 0; i < cand.size(); ++i)
        if (cand[i].empty() || ref[i].empty())
            throw Error(Errc::EmptyInput, "sentence " + std::to_string(i) + " has no tokens");
    ContentScores c;
    c.bleu = bleu(cand, ref);
    c.rouge1 = rouge(cand, ref, RougeVariant::N1);
    c.rouge2 = rouge(cand, ref, RougeVariant::N2);
    c.rouge3 = rouge(cand, ref, RougeVariant::N3);
    c.rougeL = rouge(cand, ref, RougeVariant::L);
    return c;
}

inline AlignmentScores alignment_scores(const StyleProfile &generated, const StyleProfile &target) {
    AlignmentScores a;
    a.lexical_mse = mse(generated.lexical.values, target.lexical.values);
    a.syntactic_jsd = jsd(generated.syntactic, target.syntactic);
    a.surface_mse = mse(generated.surface.normalized, target.surface.normalized);
    return a;
}

/// Content scores compare generated text against its source; alignment
/// compares the generated profile against the target author's profile.
inline EvaluationReport style_report(const Corpus &generated, const Corpus &target_author, const Corpus &source,
                                     const StyleLexicon &lexicon, const SurfaceCaps &caps = kDefaultSurfaceCaps,
                                     ReportMeta meta = {}) {
    if (target_author.empty()) throw Error(Errc::EmptyCorpus, "target author corpus has no sentences");
    EvaluationReport r;
    r.content = content_scores(generated, source);
    r.generated = style_profile(generated, lexicon, caps);
    r.target = style_profile(target_author, lexicon, caps);
    r.alignment = alignment_scores(r.generated, r.target);
    r.meta = std::move(meta);
    return r;
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const StyleProfile &p) {
    Json j;
    j["lexical"] = p.lexical.values;
    j["syntactic"] = p.syntactic;
    j["surface"] = {{"raw", p.surface.raw}, {"normalized", p.surface.normalized}};
    return j;
}

inline Json to_json(const EvaluationReport &r) {
    Json j;
    j["content"] = {{"bleu", r.content.bleu},
                    {"rouge1", r.content.rouge1},
                    {"rouge2", r.content.rouge2},
                    {"rouge3", r.content.rouge3},
                    {"rougeL", r.content.rougeL}};
    j["alignment"] = {{"lexical_mse", r.alignment.lexical_mse},
                      {"syntactic_jsd", r.alignment.syntactic_jsd},
                      {"surface_mse", r.alignment.surface_mse}};
    j["profiles"] = {{"generated", to_json(r.generated)}, {"target", to_json(r.target)}};
    j["meta"] = {{"source_id", r.meta.source_id},
                 {"target_id", r.meta.target_id},
                 {"config_hash", r.meta.config_hash},
                 {"version", r.meta.version}};
    return j;
}

/// The eight Table-style columns, in order, with the JSON path of each.
struct MetricColumn {
    std::string_view label;
    std::string_view group;
    std::string_view key;
    int decimals;
};

inline constexpr std::array<MetricColumn, 8> kReportColumns = {{
    {"BLEU", "content", "bleu", 1},
    {"ROUGE-1", "content", "rouge1", 2},
    {"ROUGE-2", "content", "rouge2", 2},
    {"ROUGE-3", "content", "rouge3", 2},
    {"ROUGE-L", "content", "rougeL", 2},
    {"Lexical (MSE)", "alignment", "lexical_mse", 2},
    {"Syntactic (JSD)", "alignment", "syntactic_jsd", 2},
    {"Surface (MSE)", "alignment", "surface_mse", 2},
}};

struct AggregateCell {
    double mean = 0.0;
    double stddev = 0.0; // sample (n-1) standard deviation; 0 for a single report
};

struct Aggregate {
    std::size_t n_reports = 0;
    std::array<AggregateCell, kReportColumns.size()> cells{};
};

inline Aggregate aggregate_reports(const std::vector<Json> &reports) {
    if (reports.empty()) throw Error(Errc::EmptyInput, "no reports to aggregate");
    Aggregate agg;
    agg.n_reports = reports.size();
    for (std::size_t c = 0; c < kReportColumns.size(); ++c) {
        const auto &col = kReportColumns[c];
        std::vector<double> xs;
        for (const auto &r : reports) {
            const auto g = r.find(std::string(col.group));
            if (g == r.end() || !g->contains(std::string(col.key)) || !(*g)[std::string(col.key)].is_number())
                throw Error(Errc::Format, "report lacks " + std::string(col.group) + "." + std::string(col.key));
            xs.push_back((*g)[std::string(col.key)].get<double>());
        }
        double sum = 0.0;
        for (double x : xs) sum += x;
        const double mean = sum / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        agg.cells[c].mean = mean;
        agg.cells[c].stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    }
    return agg;
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

/// Markdown-style table: one header row of metric names and one row of
/// "μ ± σ" cells, rounded like the published tables (BLEU to one decimal,
/// the rest to two).
inline std::string format_aggregate_table(const Aggregate &agg, std::string_view row_label = "mean ± std") {
    std::ostringstream out;
    out << "| |";
    for (const auto &col : kReportColumns) out << ' ' << col.label << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << "---|";
    out << "\n| " << row_label << " |";
    for (std::size_t c = 0; c < kReportColumns.size(); ++c)
        out << ' ' << format_fixed(agg.cells[c].mean, kReportColumns[c].decimals) << " ± "
            << format_fixed(agg.cells[c].stddev, kReportColumns[c].decimals) << " |";
    out << '\n';
    return out.str();
}

inline Json to_json(const Aggregate &agg) {
    Json j;
    j["n_reports"] = agg.n_reports;
    for (std::size_t c = 0; c < kReportColumns.size(); ++c)
        j[std::string(kReportColumns[c].group)][std::string(kReportColumns[c].key)] = {
            {"mean", agg.cells[c].mean}, {"stddev", agg.cells[c].stddev}};
    return j;
}

} // namespace styleforge
