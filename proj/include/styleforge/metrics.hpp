#pragma once

// Content-preservation scores (corpus BLEU, ROUGE-N / ROUGE-L F1) and the
// distances used for stylistic alignment (MSE, base-2 Jensen-Shannon).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "styleforge/error.hpp"

namespace styleforge {

using TokenSeq = std::vector<std::string>;

namespace detail {

inline std::map<std::vector<std::string>, std::uint64_t> ngram_counts(const TokenSeq &seq, std::size_t n) {
    std::map<std::vector<std::string>, std::uint64_t> counts;
    if (seq.size() < n) return counts;
    for (std::size_t i = 0; i + n <= seq.size(); ++i)
        ++counts[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                          seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return counts;
}

inline std::uint64_t clipped_overlap(const std::map<std::vector<std::string>, std::uint64_t> &cand,
                                     const std::map<std::vector<std::string>, std::uint64_t> &ref) {
    std::uint64_t m = 0;
    for (const auto &[g, c] : cand) {
        auto it = ref.find(g);
        if (it != ref.end()) m += std::min(c, it->second);
    }
    return m;
}

} // namespace detail

struct BleuStats {
    std::array<std::uint64_t, 4> matches{};
    std::array<std::uint64_t, 4> totals{};
    std::uint64_t candidate_length = 0;
    std::uint64_t reference_length = 0;
};

inline BleuStats bleu_stats(const std::vector<TokenSeq> &candidates, const std::vector<TokenSeq> &references) {
    if (candidates.size() != references.size())
        throw Error(Errc::LengthMismatch, "BLEU needs one reference per candidate");
    if (candidates.empty()) throw Error(Errc::EmptyInput, "BLEU over an empty corpus");
    BleuStats st;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        st.candidate_length += candidates[i].size();
        st.reference_length += references[i].size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto c = detail::ngram_counts(candidates[i], n);
            const auto r = detail::ngram_counts(references[i], n);
            st.matches[n - 1] += detail::clipped_overlap(c, r);
            if (candidates[i].size() >= n) st.totals[n - 1] += candidates[i].size() - n + 1;
        }
    }
    return st;
}

/// Corpus BLEU in [0,100]: geometric mean of clipped 1..4-gram precisions
/// times exp(min(0, 1 - r/c)), no smoothing. Orders for which the candidate
/// side has no n-grams at all are left out of the mean; any order with
/// n-grams but no match gives 0.
inline double bleu(const BleuStats &st) {
    if (st.candidate_length == 0) return 0.0;
    double log_sum = 0.0;
    int orders = 0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (st.totals[n] == 0) continue;
        if (st.matches[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]));
        ++orders;
    }
    const double c = static_cast<double>(st.candidate_length);
    const double r = static_cast<double>(st.reference_length);
    const double bp = std::exp(std::min(0.0, 1.0 - r / c));
    return 100.0 * bp * std::exp(log_sum / orders);
}

inline double bleu(const std::vector<TokenSeq> &candidates, const std::vector<TokenSeq> &references) {
    return bleu(bleu_stats(candidates, references));
}

enum class RougeVariant { N1, N2, N3, L };

inline std::size_t lcs_length(const TokenSeq &a, const TokenSeq &b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline double f1(double overlap, double cand_total, double ref_total) {
    if (overlap == 0.0) return 0.0;
    const double p = overlap / cand_total;
    const double r = overlap / ref_total;
    return 2.0 * p * r / (p + r);
}

/// ROUGE F1 for one pair. When both sides are too short to contain an
/// n-gram of the requested order the score is 1 for identical sequences
/// and 0 otherwise.
inline double rouge(const TokenSeq &candidate, const TokenSeq &reference, RougeVariant variant) {
    if (candidate.empty() || reference.empty()) throw Error(Errc::EmptyInput, "ROUGE needs non-empty sequences");
    if (variant == RougeVariant::L)
        return f1(static_cast<double>(lcs_length(candidate, reference)), static_cast<double>(candidate.size()),
                  static_cast<double>(reference.size()));
    const std::size_t n = variant == RougeVariant::N1 ? 1 : variant == RougeVariant::N2 ? 2 : 3;
    const auto c = detail::ngram_counts(candidate, n);
    const auto r = detail::ngram_counts(reference, n);
    if (c.empty() && r.empty()) return candidate == reference ? 1.0 : 0.0;
    if (c.empty() || r.empty()) return 0.0;
    return f1(static_cast<double>(detail::clipped_overlap(c, r)), static_cast<double>(candidate.size() - n + 1),
              static_cast<double>(reference.size() - n + 1));
}

/// Mean of per-pair ROUGE F1, accumulated in pair order.
inline double rouge(const std::vector<TokenSeq> &candidates, const std::vector<TokenSeq> &references,
                    RougeVariant variant) {
    if (candidates.size() != references.size()) throw Error(Errc::LengthMismatch, "ROUGE needs aligned pairs");
    if (candidates.empty()) throw Error(Errc::EmptyInput, "ROUGE over an empty corpus");
    double sum = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge(candidates[i], references[i], variant);
    return sum / static_cast<double>(candidates.size());
}

inline double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw Error(Errc::LengthMismatch, "MSE needs equal, non-empty lengths");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

/// Jensen-Shannon divergence with base-2 logarithms, so the result is in
/// [0,1]. Inputs are renormalized; 0 log 0 = 0.
inline double jsd(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) throw Error(Errc::LengthMismatch, "JSD needs equal, non-empty lengths");
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw Error(Errc::NegativeComponent, "JSD inputs must be non-negative");
        sp += p[i];
        sq += q[i];
    }
    if (std::fabs(sp - 1.0) > 1e-6 || std::fabs(sq - 1.0) > 1e-6)
        throw Error(Errc::InvalidArgument, "JSD inputs must sum to 1 within 1e-6");
    auto kl_to_mid = [](double x, double y) { return x > 0.0 ? x * std::log2(x / (0.5 * (x + y))) : 0.0; };
    double kp = 0.0, kq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i] / sp;
        const double qi = q[i] / sq;
        kp += kl_to_mid(pi, qi);
        kq += kl_to_mid(qi, pi);
    }
    return std::clamp(0.5 * (kp + kq), 0.0, 1.0);
}

} // namespace styleforge
