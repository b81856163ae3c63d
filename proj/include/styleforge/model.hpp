#pragma once

// Transformer language model (pre-norm encoder stack, tied output projection),
// masked-LM and denoising losses, and the cascade that turns one pretrained
// LM into an encoder-decoder.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "styleforge/autograd.hpp"
#include "styleforge/bpe.hpp"
#include "styleforge/error.hpp"
#include "styleforge/noise.hpp"
#include "styleforge/rng.hpp"

namespace styleforge {

struct ModelConfig {
    std::size_t n_layers = 2;
    std::size_t d_model = 64;
    std::size_t n_heads = 4;
    std::size_t d_ffn = 256;
    double dropout = 0.1;
    std::size_t stream_len = 64;
    std::size_t vocab_size = 0;
    double learning_rate = 1e-3;
    std::size_t batch_size = 8;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    /// The published 12-layer configuration. Selectable, not desk-sized.
    static ModelConfig published_scale() {
        ModelConfig c;
        c.n_layers = 12;
        c.d_model = 512;
        c.n_heads = 16;
        c.d_ffn = 2048;
        c.stream_len = 256;
        c.learning_rate = 1e-4;
        c.batch_size = 32;
        return c;
    }

    void validate() const {
        if (n_layers < 1 || d_model < 1 || n_heads < 1 || d_ffn < 1 || stream_len < 1 || batch_size < 1)
            throw Error(Errc::Config, "model dimensions must be at least 1");
        if (d_model % n_heads != 0) throw Error(Errc::Config, "d_model must be divisible by n_heads");
        if (vocab_size <= static_cast<std::size_t>(special::kCount))
            throw Error(Errc::Config, "vocab_size must exceed the special-token count");
        for (double p : {dropout, adam_beta1, adam_beta2})
            if (!(p >= 0.0 && p < 1.0)) throw Error(Errc::Config, "dropout and Adam betas must lie in [0,1)");
        if (!(learning_rate > 0.0) || !(adam_eps > 0.0))
            throw Error(Errc::Config, "learning rate and Adam epsilon must be positive");
    }

    bool operator==(const ModelConfig &) const = default;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// key=value view of a config, in a fixed order (used by checkpoints and the
/// run-config hash).
inline std::vector<std::pair<std::string, std::string>> config_entries(const ModelConfig &c) {
    return {
        {"model.n_layers", std::to_string(c.n_layers)},
        {"model.d_model", std::to_string(c.d_model)},
        {"model.n_heads", std::to_string(c.n_heads)},
        {"model.d_ffn", std::to_string(c.d_ffn)},
        {"model.dropout", format_double(c.dropout)},
        {"model.stream_len", std::to_string(c.stream_len)},
        {"model.vocab_size", std::to_string(c.vocab_size)},
        {"model.learning_rate", format_double(c.learning_rate)},
        {"model.batch_size", std::to_string(c.batch_size)},
        {"model.adam_beta1", format_double(c.adam_beta1)},
        {"model.adam_beta2", format_double(c.adam_beta2)},
        {"model.adam_eps", format_double(c.adam_eps)},
        {"model.seed", std::to_string(c.seed)},
    };
}

namespace detail {

inline std::size_t parse_size(std::string_view key, const std::string &v) {
    std::size_t pos = 0;
    unsigned long long x = 0;
    try {
        if (v.empty() || v[0] == '-') throw std::invalid_argument("negative");
        x = std::stoull(v, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw Error(Errc::Config, std::string(key) + " expects a non-negative integer");
    return static_cast<std::size_t>(x);
}

inline double parse_real(std::string_view key, const std::string &v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size() || !std::isfinite(x))
        throw Error(Errc::Config, std::string(key) + " expects a finite number");
    return x;
}

} // namespace detail

/// Applies one "model.*" entry; returns false if the key is not a model key.
inline bool apply_config_entry(ModelConfig &c, std::string_view key, const std::string &value) {
    using detail::parse_real;
    using detail::parse_size;
    if (key == "model.n_layers") c.n_layers = parse_size(key, value);
    else if (key == "model.d_model") c.d_model = parse_size(key, value);
    else if (key == "model.n_heads") c.n_heads = parse_size(key, value);
    else if (key == "model.d_ffn") c.d_ffn = parse_size(key, value);
    else if (key == "model.dropout") c.dropout = parse_real(key, value);
    else if (key == "model.stream_len") c.stream_len = parse_size(key, value);
    else if (key == "model.vocab_size") c.vocab_size = parse_size(key, value);
    else if (key == "model.learning_rate") c.learning_rate = parse_real(key, value);
    else if (key == "model.batch_size") c.batch_size = parse_size(key, value);
    else if (key == "model.adam_beta1") c.adam_beta1 = parse_real(key, value);
    else if (key == "model.adam_beta2") c.adam_beta2 = parse_real(key, value);
    else if (key == "model.adam_eps") c.adam_eps = parse_real(key, value);
    else if (key == "model.seed") c.seed = parse_size(key, value);
    else return false;
    return true;
}

/// Named dense arrays in insertion order.
template <typename T> class ParamSet {
  public:
    nn::Matrix<T> &add(std::string name, std::size_t rows, std::size_t cols) {
        if (index_.count(name)) throw Error(Errc::Shape, "duplicate parameter " + name);
        index_.emplace(name, names_.size());
        names_.push_back(std::move(name));
        values_.push_back(nn::Matrix<T>::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
        return values_.back();
    }

    std::size_t size() const { return names_.size(); }
    const std::string &name(std::size_t i) const { return names_[i]; }
    nn::Matrix<T> &value(std::size_t i) { return values_[i]; }
    const nn::Matrix<T> &value(std::size_t i) const { return values_[i]; }

    bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

    std::size_t index(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) throw Error(Errc::Shape, "no parameter named " + std::string(name));
        return it->second;
    }

    nn::Matrix<T> &operator[](std::string_view name) { return values_[index(name)]; }
    const nn::Matrix<T> &operator[](std::string_view name) const { return values_[index(name)]; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto &v : values_) n += static_cast<std::size_t>(v.size());
        return n;
    }

    template <typename U> ParamSet<U> cast() const {
        ParamSet<U> out;
        for (std::size_t i = 0; i < size(); ++i)
            out.add(names_[i], static_cast<std::size_t>(values_[i].rows()), static_cast<std::size_t>(values_[i].cols())) =
                values_[i].template cast<U>();
        return out;
    }

    bool operator==(const ParamSet &o) const {
        if (names_ != o.names_) return false;
        for (std::size_t i = 0; i < size(); ++i)
            if (values_[i].rows() != o.values_[i].rows() || values_[i].cols() != o.values_[i].cols() ||
                values_[i] != o.values_[i])
                return false;
        return true;
    }

  private:
    std::vector<std::string> names_;
    std::vector<nn::Matrix<T>> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

template <typename T> struct ModelParams {
    ModelConfig config;
    ParamSet<T> arrays;

    template <typename U> ModelParams<U> cast() const { return {config, arrays.template cast<U>()}; }
};

template <typename T> struct EncDecParams {
    ModelParams<T> encoder;
    ModelParams<T> decoder; // the LM arrays plus per-layer cross-attention
    bool decoder_causal = true;

    template <typename U> EncDecParams<U> cast() const {
        return {encoder.template cast<U>(), decoder.template cast<U>(), decoder_causal};
    }
};

inline std::string layer_prefix(std::size_t l) { return "layers." + std::to_string(l) + "."; }

/// Names of the per-layer cross-attention arrays a cascade adds.
inline bool is_cross_attention_param(std::string_view name) {
    return name.find(".xattn.") != std::string_view::npos || name.find(".ln_x.") != std::string_view::npos;
}

namespace detail {

template <typename T> void init_uniform(nn::Matrix<T> &m, Rng &rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-a, a));
}

template <typename T> void add_layer_norm(ParamSet<T> &p, const std::string &name, std::size_t d) {
    p.add(name + ".g", 1, d).setOnes();
    p.add(name + ".b", 1, d);
}

template <typename T> void add_attention(ParamSet<T> &p, const std::string &name, std::size_t d, Rng &rng) {
    for (const char *w : {".q", ".k", ".v", ".o"}) init_uniform(p.add(name + w, d, d), rng);
}

} // namespace detail

template <typename T = float> ModelParams<T> init_params(const ModelConfig &cfg, Rng &rng) {
    cfg.validate();
    ModelParams<T> m{cfg, {}};
    auto &p = m.arrays;
    const std::size_t d = cfg.d_model;
    detail::init_uniform(p.add("tok_emb", cfg.vocab_size, d), rng);
    detail::init_uniform(p.add("pos_emb", cfg.stream_len, d), rng);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto pre = layer_prefix(l);
        detail::add_layer_norm(p, pre + "ln1", d);
        detail::add_attention(p, pre + "attn", d, rng);
        detail::add_layer_norm(p, pre + "ln2", d);
        detail::init_uniform(p.add(pre + "ffn.w1", d, cfg.d_ffn), rng);
        p.add(pre + "ffn.b1", 1, cfg.d_ffn);
        detail::init_uniform(p.add(pre + "ffn.w2", cfg.d_ffn, d), rng);
        p.add(pre + "ffn.b2", 1, d);
    }
    detail::add_layer_norm(p, "ln_f", d);
    return m;
}

/// Encoder = copy, decoder = copy plus fresh cross-attention per layer.
template <typename T> EncDecParams<T> cascade(const ModelParams<T> &pretrained, Rng &rng) {
    EncDecParams<T> e{pretrained, pretrained, true};
    const std::size_t d = pretrained.config.d_model;
    for (std::size_t l = 0; l < pretrained.config.n_layers; ++l) {
        const auto pre = layer_prefix(l);
        detail::add_layer_norm(e.decoder.arrays, pre + "ln_x", d);
        detail::add_attention(e.decoder.arrays, pre + "xattn", d, rng);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Forward passes on a tape

/// Binds a parameter set to tape leaves on first use.
template <typename T> class Binding {
  public:
    Binding(nn::Tape<T> &tape, const ParamSet<T> &params)
        : tape_(tape), params_(params), vars_(params.size()), bound_(params.size(), false) {}

    nn::Var operator()(std::string_view name) {
        const std::size_t i = params_.index(name);
        if (!bound_[i]) {
            vars_[i] = tape_.leaf(params_.value(i));
            bound_[i] = true;
        }
        return vars_[i];
    }

    /// Gradients aligned with the parameter set; zeros for unused arrays.
    std::vector<nn::Matrix<T>> gradients() {
        std::vector<nn::Matrix<T>> out;
        out.reserve(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (bound_[i] && tape_.has_grad(vars_[i])) out.push_back(tape_.grad(vars_[i]));
            else out.push_back(nn::Matrix<T>::Zero(params_.value(i).rows(), params_.value(i).cols()));
        }
        return out;
    }

  private:
    nn::Tape<T> &tape_;
    const ParamSet<T> &params_;
    std::vector<nn::Var> vars_;
    std::vector<bool> bound_;
};

using Sequences = std::vector<std::vector<TokenId>>;

namespace detail {

inline void check_sequences(const Sequences &seqs, const ModelConfig &cfg) {
    if (seqs.empty()) throw Error(Errc::Shape, "empty batch");
    for (const auto &s : seqs) {
        if (s.empty()) throw Error(Errc::Shape, "empty sequence");
        if (s.size() > cfg.stream_len)
            throw Error(Errc::Shape, "sequence of length " + std::to_string(s.size()) + " exceeds stream_len " +
                                         std::to_string(cfg.stream_len));
        for (TokenId id : s)
            if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size)
                throw Error(Errc::Shape, "token id " + std::to_string(id) + " outside the vocabulary");
    }
}

inline std::vector<std::size_t> offsets(const Sequences &seqs) {
    std::vector<std::size_t> off;
    std::size_t at = 0;
    for (const auto &s : seqs) {
        off.push_back(at);
        at += s.size();
    }
    return off;
}

inline std::vector<unsigned char> non_pad(const Sequences &seqs) {
    std::vector<unsigned char> v;
    for (const auto &s : seqs)
        for (TokenId id : s) v.push_back(id != special::PAD ? 1 : 0);
    return v;
}

} // namespace detail

inline nn::AttentionLayout self_attention_layout(const Sequences &seqs, std::size_t heads, bool causal) {
    nn::AttentionLayout lay;
    const auto off = detail::offsets(seqs);
    for (std::size_t i = 0; i < seqs.size(); ++i) lay.segments.push_back({off[i], seqs[i].size(), off[i], seqs[i].size()});
    lay.key_valid = detail::non_pad(seqs);
    lay.causal = causal;
    lay.heads = heads;
    return lay;
}

inline nn::AttentionLayout cross_attention_layout(const Sequences &queries, const Sequences &keys, std::size_t heads) {
    nn::AttentionLayout lay;
    const auto qo = detail::offsets(queries);
    const auto ko = detail::offsets(keys);
    for (std::size_t i = 0; i < queries.size(); ++i) lay.segments.push_back({qo[i], queries[i].size(), ko[i], keys[i].size()});
    lay.key_valid = detail::non_pad(keys);
    lay.heads = heads;
    return lay;
}

/// One forward pass over a stacked batch. Dropout is applied only when a
/// generator is supplied.
template <typename T> class TransformerPass {
  public:
    TransformerPass(nn::Tape<T> &tape, Binding<T> &p, const ModelConfig &cfg, Rng *dropout_rng)
        : tape_(tape), p_(p), cfg_(cfg), rng_(dropout_rng) {}

    nn::Var embed(const Sequences &seqs) {
        std::vector<std::size_t> ids, pos;
        for (const auto &s : seqs)
            for (std::size_t t = 0; t < s.size(); ++t) {
                ids.push_back(static_cast<std::size_t>(s[t]));
                pos.push_back(t);
            }
        auto x = tape_.add(tape_.gather_rows(p_("tok_emb"), std::move(ids)), tape_.gather_rows(p_("pos_emb"), std::move(pos)));
        return drop(x);
    }

    nn::Var self_block(std::size_t l, nn::Var x, const nn::AttentionLayout &lay,
                       nn::AttentionProbe<T> *probe = nullptr) {
        const auto pre = layer_prefix(l);
        auto h = tape_.layer_norm(x, p_(pre + "ln1.g"), p_(pre + "ln1.b"));
        auto a = attend(pre + "attn", h, h, lay, probe);
        return tape_.add(x, drop(a));
    }

    nn::Var cross_block(std::size_t l, nn::Var x, nn::Var memory, const nn::AttentionLayout &lay) {
        const auto pre = layer_prefix(l);
        auto h = tape_.layer_norm(x, p_(pre + "ln_x.g"), p_(pre + "ln_x.b"));
        auto a = attend(pre + "xattn", h, memory, lay, nullptr);
        return tape_.add(x, drop(a));
    }

    nn::Var ffn_block(std::size_t l, nn::Var x) {
        const auto pre = layer_prefix(l);
        auto h = tape_.layer_norm(x, p_(pre + "ln2.g"), p_(pre + "ln2.b"));
        auto f = tape_.gelu(tape_.add_bias(tape_.matmul(h, p_(pre + "ffn.w1")), p_(pre + "ffn.b1")));
        f = tape_.add_bias(tape_.matmul(f, p_(pre + "ffn.w2")), p_(pre + "ffn.b2"));
        return tape_.add(x, drop(f));
    }

    nn::Var final_norm(nn::Var x) { return tape_.layer_norm(x, p_("ln_f.g"), p_("ln_f.b")); }

    /// Tied output projection.
    nn::Var logits(nn::Var h) { return tape_.matmul_nt(h, p_("tok_emb")); }

    /// Bidirectional encoder stack, final layer norm included.
    nn::Var encode(const Sequences &seqs, std::vector<nn::AttentionProbe<T>> *probes = nullptr) {
        const auto lay = self_attention_layout(seqs, cfg_.n_heads, false);
        auto x = embed(seqs);
        if (probes) probes->assign(cfg_.n_layers, {});
        for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
            x = self_block(l, x, lay, probes ? &(*probes)[l] : nullptr);
            x = ffn_block(l, x);
        }
        return final_norm(x);
    }

    nn::Var decode(const Sequences &prefixes, bool causal, nn::Var memory, const Sequences &sources) {
        const auto self = self_attention_layout(prefixes, cfg_.n_heads, causal);
        const auto cross = cross_attention_layout(prefixes, sources, cfg_.n_heads);
        auto x = embed(prefixes);
        for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
            x = self_block(l, x, self);
            x = cross_block(l, x, memory, cross);
            x = ffn_block(l, x);
        }
        return final_norm(x);
    }

  private:
    nn::Var attend(const std::string &name, nn::Var hq, nn::Var hkv, const nn::AttentionLayout &lay,
                   nn::AttentionProbe<T> *probe) {
        auto q = tape_.matmul(hq, p_(name + ".q"));
        auto k = tape_.matmul(hkv, p_(name + ".k"));
        auto v = tape_.matmul(hkv, p_(name + ".v"));
        return tape_.matmul(tape_.attention(q, k, v, lay, probe), p_(name + ".o"));
    }

    nn::Var drop(nn::Var x) {
        if (!rng_ || cfg_.dropout <= 0.0) return x;
        return tape_.dropout(x, static_cast<T>(cfg_.dropout), *rng_);
    }

    nn::Tape<T> &tape_;
    Binding<T> &p_;
    const ModelConfig &cfg_;
    Rng *rng_;
};

// ---------------------------------------------------------------------------
// Public forward / loss API

/// Logits (positions × vocab) of the bidirectional LM over one sequence.
template <typename T>
nn::Matrix<T> lm_forward(const ModelParams<T> &params, const std::vector<TokenId> &ids, bool train_mode, Rng &rng,
                         std::vector<nn::AttentionProbe<T>> *probes = nullptr) {
    const Sequences seqs{ids};
    detail::check_sequences(seqs, params.config);
    nn::Tape<T> tape;
    Binding<T> bind(tape, params.arrays);
    TransformerPass<T> pass(tape, bind, params.config, train_mode ? &rng : nullptr);
    return tape.value(pass.logits(pass.encode(seqs, probes)));
}

/// Mean over target positions of -log softmax(logits[pos])[target].
template <typename Derived> double mlm_loss(const Eigen::MatrixBase<Derived> &logits, const MaskedBatch &batch) {
    if (batch.target_positions.empty()) throw Error(Errc::EmptyTargets, "no masked positions");
    if (batch.target_positions.size() != batch.target_ids.size())
        throw Error(Errc::Shape, "target positions and ids differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < batch.target_positions.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(batch.target_positions[i]);
        const auto t = static_cast<Eigen::Index>(batch.target_ids[i]);
        if (r >= logits.rows() || t < 0 || t >= logits.cols()) throw Error(Errc::Shape, "target outside logits");
        const auto row = logits.row(r).template cast<double>();
        const double mx = row.maxCoeff();
        total += std::log((row.array() - mx).exp().sum()) + mx - row(t);
    }
    return total / static_cast<double>(batch.target_positions.size());
}

template <typename T> struct LossGrad {
    double loss = 0.0;
    std::size_t n_targets = 0;
    std::vector<nn::Matrix<T>> grads; // aligned with the parameter order
};

namespace detail {

template <typename T>
nn::Var mlm_loss_var(nn::Tape<T> &tape, TransformerPass<T> &pass, const std::vector<MaskedBatch> &batch,
                     const ModelConfig &cfg, std::size_t &n_targets) {
    Sequences seqs;
    for (const auto &b : batch) seqs.push_back(b.inputs);
    check_sequences(seqs, cfg);
    std::vector<std::size_t> rows, targets;
    std::size_t off = 0;
    for (const auto &b : batch) {
        if (b.target_positions.size() != b.target_ids.size()) throw Error(Errc::Shape, "target arrays differ");
        for (std::size_t i = 0; i < b.target_positions.size(); ++i) {
            if (b.target_positions[i] >= b.inputs.size()) throw Error(Errc::Shape, "target position outside stream");
            rows.push_back(off + b.target_positions[i]);
            targets.push_back(static_cast<std::size_t>(b.target_ids[i]));
        }
        off += b.inputs.size();
    }
    if (targets.empty()) throw Error(Errc::EmptyTargets, "no masked positions");
    n_targets = targets.size();
    auto h = tape.gather_rows(pass.encode(seqs), std::move(rows));
    return tape.cross_entropy(pass.logits(h), std::move(targets));
}

/// Decoder input is BOS + target, prediction target is target + EOS.
inline std::pair<std::vector<TokenId>, std::vector<TokenId>> teacher_forcing(const std::vector<TokenId> &clean) {
    std::vector<TokenId> in{special::BOS};
    in.insert(in.end(), clean.begin(), clean.end());
    std::vector<TokenId> out = clean;
    out.push_back(special::EOS);
    return {std::move(in), std::move(out)};
}

template <typename T>
nn::Var dae_loss_var(nn::Tape<T> &tape, TransformerPass<T> &enc, TransformerPass<T> &dec, const EncDecParams<T> &p,
                     const std::vector<std::pair<std::vector<TokenId>, std::vector<TokenId>>> &examples,
                     std::size_t &n_targets) {
    Sequences src, tin;
    std::vector<std::size_t> targets;
    for (const auto &[corrupted, clean] : examples) {
        if (clean.empty()) throw Error(Errc::EmptyTargets, "clean target is empty");
        auto [in, out] = teacher_forcing(clean);
        src.push_back(corrupted);
        tin.push_back(std::move(in));
        for (TokenId t : out) targets.push_back(static_cast<std::size_t>(t));
    }
    check_sequences(src, p.encoder.config);
    check_sequences(tin, p.decoder.config);
    n_targets = targets.size();
    auto memory = enc.encode(src);
    auto h = dec.decode(tin, p.decoder_causal, memory, src);
    return tape.cross_entropy(dec.logits(h), std::move(targets));
}

} // namespace detail

/// Loss and gradients of the masked-LM objective over a batch of streams.
/// `dropout_rng` null means dropout off.
template <typename T>
LossGrad<T> mlm_loss_grad(const ModelParams<T> &params, const std::vector<MaskedBatch> &batch, Rng *dropout_rng) {
    nn::Tape<T> tape;
    Binding<T> bind(tape, params.arrays);
    TransformerPass<T> pass(tape, bind, params.config, dropout_rng);
    LossGrad<T> r;
    auto loss = detail::mlm_loss_var(tape, pass, batch, params.config, r.n_targets);
    r.loss = static_cast<double>(tape.value(loss)(0, 0));
    tape.backward(loss);
    r.grads = bind.gradients();
    return r;
}

/// Logits over target positions; position t predicts prefix token t+1.
template <typename T>
nn::Matrix<T> encdec_forward(const EncDecParams<T> &params, const std::vector<TokenId> &src_ids,
                             const std::vector<TokenId> &tgt_prefix_ids, bool train_mode, Rng &rng) {
    const Sequences src{src_ids}, tgt{tgt_prefix_ids};
    detail::check_sequences(src, params.encoder.config);
    detail::check_sequences(tgt, params.decoder.config);
    nn::Tape<T> tape;
    Binding<T> eb(tape, params.encoder.arrays), db(tape, params.decoder.arrays);
    TransformerPass<T> enc(tape, eb, params.encoder.config, train_mode ? &rng : nullptr);
    TransformerPass<T> dec(tape, db, params.decoder.config, train_mode ? &rng : nullptr);
    auto memory = enc.encode(src);
    return tape.value(dec.logits(dec.decode(tgt, params.decoder_causal, memory, src)));
}

using DaeExample = std::pair<std::vector<TokenId>, std::vector<TokenId>>; // (corrupted source, clean target)

/// Loss and gradients of the denoising objective; gradients are the encoder
/// arrays followed by the decoder arrays.
template <typename T>
LossGrad<T> dae_loss_grad(const EncDecParams<T> &params, const std::vector<DaeExample> &examples, Rng *dropout_rng) {
    nn::Tape<T> tape;
    Binding<T> eb(tape, params.encoder.arrays), db(tape, params.decoder.arrays);
    TransformerPass<T> enc(tape, eb, params.encoder.config, dropout_rng);
    TransformerPass<T> dec(tape, db, params.decoder.config, dropout_rng);
    LossGrad<T> r;
    auto loss = detail::dae_loss_var(tape, enc, dec, params, examples, r.n_targets);
    r.loss = static_cast<double>(tape.value(loss)(0, 0));
    tape.backward(loss);
    r.grads = eb.gradients();
    auto dg = db.gradients();
    for (auto &g : dg) r.grads.push_back(std::move(g));
    return r;
}

/// Teacher-forced cross-entropy of clean_target given corrupted_src.
template <typename T>
double dae_loss(const EncDecParams<T> &params, const std::vector<TokenId> &corrupted_src,
                const std::vector<TokenId> &clean_target, bool train_mode, Rng &rng) {
    nn::Tape<T> tape;
    Binding<T> eb(tape, params.encoder.arrays), db(tape, params.decoder.arrays);
    TransformerPass<T> enc(tape, eb, params.encoder.config, train_mode ? &rng : nullptr);
    TransformerPass<T> dec(tape, db, params.decoder.config, train_mode ? &rng : nullptr);
    std::size_t n = 0;
    auto loss = detail::dae_loss_var(tape, enc, dec, params, {{corrupted_src, clean_target}}, n);
    return static_cast<double>(tape.value(loss)(0, 0));
}

} // namespace styleforge
