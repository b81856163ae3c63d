#pragma once

// Flat key=value run configuration shared by every subcommand.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "styleforge/error.hpp"
#include "styleforge/lexstyle.hpp"
#include "styleforge/model.hpp"
#include "styleforge/noise.hpp"
#include "styleforge/text.hpp"
#include "styleforge/train.hpp"

namespace styleforge {

struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t bpe_merges = 2000;
    ModelConfig model;
    StopConfig train;
    NoiseConfig noise;
    MaskConfig mask;
    LexiconBuildConfig lexstyle;
    RewriteConfig rewrite;

    /// Applies one entry; unknown keys and unparsable values are Config errors.
    void set(std::string_view key, const std::string &value) {
        using detail::parse_real;
        using detail::parse_size;
        if (key == "seed") seed = parse_size(key, value);
        else if (key == "bpe.n_merges") bpe_merges = parse_size(key, value);
        else if (key == "train.max_steps") train.max_steps = parse_size(key, value);
        else if (key == "train.patience") train.patience = parse_size(key, value);
        else if (key == "train.eval_every") train.eval_every = parse_size(key, value);
        else if (key == "noise.p_drop") noise.p_drop = parse_real(key, value);
        else if (key == "noise.p_blank") noise.p_blank = parse_real(key, value);
        else if (key == "mask.p_mask") mask.p_mask = parse_real(key, value);
        else if (key == "mask.p_to_mask_token") mask.p_to_mask_token = parse_real(key, value);
        else if (key == "mask.p_to_random") mask.p_to_random = parse_real(key, value);
        else if (key == "mask.p_unchanged") mask.p_unchanged = parse_real(key, value);
        else if (key == "lexstyle.k") lexstyle.k = parse_size(key, value);
        else if (key == "lexstyle.f_min") lexstyle.f_min = parse_size(key, value);
        else if (key == "lexstyle.V") lexstyle.context_size = parse_size(key, value);
        else if (key == "lexstyle.tol") lexstyle.tol = parse_real(key, value);
        else if (key == "lexstyle.max_iter") lexstyle.max_iter = parse_size(key, value);
        else if (key == "rewrite.max_len_factor") rewrite.max_len_factor = parse_real(key, value);
        else if (key == "rewrite.max_len_bias") rewrite.max_len_bias = parse_size(key, value);
        else if (key == "model.seed" || key == "model.vocab_size")
            throw Error(Errc::Config, std::string(key) + " is derived and cannot be set");
        else if (!apply_config_entry(model, key, value))
            throw Error(Errc::Config, "unknown configuration key '" + std::string(key) + "'");
        model.seed = seed;
    }

    /// "key=value" form.
    void set(std::string_view assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) throw Error(Errc::Config, "expected key=value, got '" + std::string(assignment) + "'");
        set(text::trim(assignment.substr(0, eq)), std::string(text::trim(assignment.substr(eq + 1))));
    }

    /// Reads key=value lines; blank lines and lines starting with # are skipped.
    void read(std::istream &in, const std::string &name = "<config>") {
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            const auto t = text::trim(line);
            if (t.empty() || t[0] == '#') continue;
            try {
                set(t);
            } catch (const Error &e) {
                throw Error(Errc::Config, name + ":" + std::to_string(n) + ": " + e.what());
            }
        }
    }

    void load(const std::string &path) {
        std::ifstream in(path);
        if (!in) throw Error(Errc::Io, "cannot open config " + path);
        read(in, path);
    }

    void validate() const {
        noise.validate();
        mask.validate();
        if (model.d_model % std::max<std::size_t>(1, model.n_heads) != 0)
            throw Error(Errc::Config, "d_model must be divisible by n_heads");
        if (lexstyle.k < 1) throw Error(Errc::Config, "lexstyle.k must be at least 1");
        if (!(rewrite.max_len_factor >= 0.0)) throw Error(Errc::Config, "rewrite.max_len_factor must be non-negative");
    }

    /// Every key with its canonical value, sorted by key.
    std::vector<std::pair<std::string, std::string>> entries() const {
        std::vector<std::pair<std::string, std::string>> e = {
            {"seed", std::to_string(seed)},
            {"bpe.n_merges", std::to_string(bpe_merges)},
            {"train.max_steps", std::to_string(train.max_steps)},
            {"train.patience", std::to_string(train.patience)},
            {"train.eval_every", std::to_string(train.eval_every)},
            {"noise.p_drop", format_double(noise.p_drop)},
            {"noise.p_blank", format_double(noise.p_blank)},
            {"mask.p_mask", format_double(mask.p_mask)},
            {"mask.p_to_mask_token", format_double(mask.p_to_mask_token)},
            {"mask.p_to_random", format_double(mask.p_to_random)},
            {"mask.p_unchanged", format_double(mask.p_unchanged)},
            {"lexstyle.k", std::to_string(lexstyle.k)},
            {"lexstyle.f_min", std::to_string(lexstyle.f_min)},
            {"lexstyle.V", std::to_string(lexstyle.context_size)},
            {"lexstyle.tol", format_double(lexstyle.tol)},
            {"lexstyle.max_iter", std::to_string(lexstyle.max_iter)},
            {"rewrite.max_len_factor", format_double(rewrite.max_len_factor)},
            {"rewrite.max_len_bias", std::to_string(rewrite.max_len_bias)},
        };
        for (auto &kv : config_entries(model))
            if (kv.first != "model.seed" && kv.first != "model.vocab_size") e.push_back(std::move(kv));
        std::sort(e.begin(), e.end());
        return e;
    }

    /// FNV-1a 64 over the sorted "key=value\n" lines, as 16 hex digits.
    std::string hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto feed = [&](std::string_view s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 0x100000001b3ULL;
            }
        };
        for (const auto &[k, v] : entries()) {
            feed(k);
            feed("=");
            feed(v);
            feed("\n");
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

} // namespace styleforge
