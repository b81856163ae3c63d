#pragma once

// Self-supervision corruptions: masked-LM substitution for pretraining and
// word drop / blank corruption for denoising fine-tuning.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "styleforge/bpe.hpp"
#include "styleforge/error.hpp"
#include "styleforge/rng.hpp"

namespace styleforge {

struct MaskConfig {
    double p_mask = 0.15;
    double p_to_mask_token = 0.8;
    double p_to_random = 0.1;
    double p_unchanged = 0.1;

    void validate() const {
        for (double p : {p_mask, p_to_mask_token, p_to_random, p_unchanged})
            if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::Config, "mask probabilities must lie in [0,1]");
        const double sum = p_to_mask_token + p_to_random + p_unchanged;
        if (sum < 1.0 - 1e-9 || sum > 1.0 + 1e-9)
            throw Error(Errc::Config, "mask/random/unchanged probabilities must sum to 1");
    }
};

struct MaskedBatch {
    std::vector<TokenId> inputs;
    std::vector<std::size_t> target_positions;
    std::vector<TokenId> target_ids;
};

struct NoiseConfig {
    double p_drop = 0.1;
    double p_blank = 0.1;

    void validate() const {
        if (!(p_drop >= 0.0 && p_drop <= 1.0) || !(p_blank >= 0.0 && p_blank <= 1.0))
            throw Error(Errc::Config, "noise probabilities must lie in [0,1]");
    }
};

/// Selects each non-special position with p_mask and substitutes it with
/// MASK / a random non-special id / itself. When nothing is selected the
/// first eligible position is selected anyway so the loss is defined.
inline MaskedBatch mask_mlm(const std::vector<TokenId> &stream, const MaskConfig &cfg, std::size_t vocab_size,
                            Rng &rng) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < stream.size(); ++i)
        if (!is_special(stream[i])) eligible.push_back(i);
    if (eligible.empty()) throw Error(Errc::AllPad, "stream has no maskable positions");
    if (vocab_size <= static_cast<std::size_t>(special::kCount))
        throw Error(Errc::InvalidArgument, "vocabulary has no non-special ids");

    MaskedBatch batch;
    batch.inputs = stream;
    auto substitute = [&](std::size_t pos) {
        batch.target_positions.push_back(pos);
        batch.target_ids.push_back(stream[pos]);
        const double u = rng.uniform();
        if (u < cfg.p_to_mask_token) {
            batch.inputs[pos] = special::MASK;
        } else if (u < cfg.p_to_mask_token + cfg.p_to_random) {
            const auto span = static_cast<std::uint64_t>(vocab_size - special::kCount);
            batch.inputs[pos] = static_cast<TokenId>(special::kCount + static_cast<TokenId>(rng.below(span)));
        }
    };
    for (std::size_t pos : eligible)
        if (rng.uniform() < cfg.p_mask) substitute(pos);
    if (batch.target_positions.empty()) substitute(eligible.front());
    return batch;
}

/// One left-to-right pass over words: drop with p_drop, otherwise blank with
/// p_blank (the whole word becomes a single BLANK), otherwise keep. An empty
/// result becomes [BLANK].
inline std::vector<TokenId> corrupt_dae(const std::vector<std::vector<TokenId>> &words, const NoiseConfig &cfg,
                                        Rng &rng) {
    std::vector<TokenId> out;
    for (const auto &w : words) {
        if (rng.uniform() < cfg.p_drop) continue;
        if (rng.uniform() < cfg.p_blank) {
            out.push_back(special::BLANK);
        } else {
            out.insert(out.end(), w.begin(), w.end());
        }
    }
    if (out.empty()) out.push_back(special::BLANK);
    return out;
}

/// Id-level form: every id is its own word.
inline std::vector<TokenId> corrupt_dae(const std::vector<TokenId> &tokens, const NoiseConfig &cfg, Rng &rng) {
    std::vector<std::vector<TokenId>> words;
    words.reserve(tokens.size());
    for (TokenId t : tokens) words.push_back({t});
    return corrupt_dae(words, cfg, rng);
}

} // namespace styleforge
