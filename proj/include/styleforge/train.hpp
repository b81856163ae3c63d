#pragma once

// Training loops (masked-LM pretraining, denoising fine-tuning), validation
// perplexity, greedy rewriting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "styleforge/bpe.hpp"
#include "styleforge/corpus.hpp"
#include "styleforge/error.hpp"
#include "styleforge/model.hpp"
#include "styleforge/noise.hpp"
#include "styleforge/optim.hpp"
#include "styleforge/rng.hpp"

namespace styleforge {

struct StopConfig {
    std::size_t max_steps = 2000;
    std::size_t patience = 3;    // evaluations without improvement
    std::size_t eval_every = 100;
    bool restore_best = true; // false keeps the last weights, for overfit checks
};

struct LogEntry {
    std::size_t step = 0;
    double train_loss = 0.0; // mean over the steps since the previous evaluation
    double val_loss = 0.0;
    double perplexity = 0.0;
};

inline std::string to_json_line(const LogEntry &e) {
    nlohmann::ordered_json j;
    j["step"] = e.step;
    j["train_loss"] = e.train_loss;
    j["val_loss"] = e.val_loss;
    j["perplexity"] = e.perplexity;
    return j.dump();
}

template <typename P> struct TrainResult {
    P params;
    std::vector<LogEntry> log;
    std::vector<double> step_losses; // training loss of every step
    std::size_t best_step = 0;
    bool early_stopped = false;
};

using LogSink = std::function<void(const LogEntry &)>;

inline AdamConfig adam_config(const ModelConfig &c) {
    return {c.learning_rate, c.adam_beta1, c.adam_beta2, c.adam_eps};
}

namespace detail {

/// Epoch-shuffled index stream.
class BatchCursor {
  public:
    BatchCursor(std::size_t n, Rng &rng) : order_(n), rng_(rng) { reshuffle(); }

    std::vector<std::size_t> next(std::size_t batch) {
        std::vector<std::size_t> out;
        while (out.size() < batch) {
            if (at_ == order_.size()) reshuffle();
            out.push_back(order_[at_++]);
        }
        return out;
    }

  private:
    void reshuffle() {
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
        at_ = 0;
    }

    std::vector<std::size_t> order_;
    Rng &rng_;
    std::size_t at_ = 0;
};

template <typename T> std::vector<nn::Matrix<T> *> param_pointers(ParamSet<T> &p) {
    std::vector<nn::Matrix<T> *> out;
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back(&p.value(i));
    return out;
}

template <typename T> std::vector<std::string> param_names(const ParamSet<T> &p, const std::string &prefix = {}) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back(prefix + p.name(i));
    return out;
}

inline bool has_maskable(const std::vector<TokenId> &s) {
    return std::any_of(s.begin(), s.end(), [](TokenId t) { return !is_special(t); });
}

/// Early-stopping bookkeeping shared by both loops.
struct Plateau {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bad = 0;

    /// True if this evaluation improved on the best so far.
    bool observe(double v) {
        if (v < best) {
            best = v;
            bad = 0;
            return true;
        }
        ++bad;
        return false;
    }
};

} // namespace detail

/// Validation masking is fixed: stream i is masked with seed (seed XOR i).
inline std::vector<MaskedBatch> validation_masks(const std::vector<std::vector<TokenId>> &streams, const MaskConfig &mask,
                                                 std::size_t vocab_size, std::uint64_t seed) {
    std::vector<MaskedBatch> out;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        if (!detail::has_maskable(streams[i])) continue;
        Rng rng(seed ^ static_cast<std::uint64_t>(i));
        out.push_back(mask_mlm(streams[i], mask, vocab_size, rng));
    }
    return out;
}

/// Mean masked-LM loss per target token, dropout off.
template <typename T> double mean_mlm_loss(const ModelParams<T> &params, const std::vector<MaskedBatch> &batches) {
    if (batches.empty()) throw Error(Errc::EmptyInput, "no validation streams");
    double total = 0.0;
    std::size_t n = 0;
    Rng unused(0);
    for (const auto &b : batches) {
        const auto logits = lm_forward(params, b.inputs, false, unused);
        total += mlm_loss(logits, b) * static_cast<double>(b.target_positions.size());
        n += b.target_positions.size();
    }
    return total / static_cast<double>(n);
}

template <typename T>
double perplexity(const ModelParams<T> &params, const std::vector<std::vector<TokenId>> &streams,
                  const MaskConfig &mask = {}) {
    if (streams.empty()) throw Error(Errc::EmptyInput, "perplexity needs at least one stream");
    return std::exp(mean_mlm_loss(params, validation_masks(streams, mask, params.config.vocab_size, params.config.seed)));
}

/// Masked-LM pretraining. The last max(1, n/20) streams are held out for
/// validation; evaluation every `eval_every` steps (and at the last step),
/// stopping after `patience` evaluations without improvement. Returns the
/// parameters of the best evaluation.
template <typename T = float>
TrainResult<ModelParams<T>> pretrain(const Corpus &corpus, const MergeTable &table, ModelConfig cfg,
                                     const MaskConfig &mask, const StopConfig &stop, const LogSink &on_log = {}) {
    cfg.vocab_size = table.vocab_size();
    cfg.validate();
    mask.validate();
    std::vector<std::vector<TokenId>> streams;
    for (auto &s : build_streams(corpus, table, cfg.stream_len))
        if (detail::has_maskable(s)) streams.push_back(std::move(s));
    if (streams.size() < 2)
        throw Error(Errc::CorpusTooSmall, "pretraining needs at least 2 streams, corpus yields " +
                                              std::to_string(streams.size()));
    const std::size_t n_val = std::max<std::size_t>(1, streams.size() / 20);
    const std::vector<std::vector<TokenId>> val(streams.end() - static_cast<std::ptrdiff_t>(n_val), streams.end());
    streams.resize(streams.size() - n_val);

    Rng init_rng(mix_seed(cfg.seed, 0));
    TrainResult<ModelParams<T>> r{init_params<T>(cfg, init_rng), {}, {}, 0, false};
    if (stop.max_steps == 0) return r;

    const auto val_masks = validation_masks(val, mask, cfg.vocab_size, cfg.seed);
    ModelParams<T> current = r.params;
    OptimizerState<T> opt;
    const auto names = detail::param_names(current.arrays);
    Rng order_rng(mix_seed(cfg.seed, 1));
    detail::BatchCursor cursor(streams.size(), order_rng);
    detail::Plateau plateau;
    double since_eval = 0.0;
    std::size_t since_count = 0;
    const std::size_t eval_every = std::max<std::size_t>(1, stop.eval_every);

    for (std::size_t step = 1; step <= stop.max_steps; ++step) {
        Rng step_rng(mix_seed(cfg.seed, 1000 + step));
        std::vector<MaskedBatch> batch;
        for (std::size_t i : cursor.next(std::min(cfg.batch_size, streams.size())))
            batch.push_back(mask_mlm(streams[i], mask, cfg.vocab_size, step_rng));
        auto lg = mlm_loss_grad(current, batch, cfg.dropout > 0.0 ? &step_rng : nullptr);
        adam_step(opt, detail::param_pointers(current.arrays), lg.grads, adam_config(cfg), &names);
        r.step_losses.push_back(lg.loss);
        since_eval += lg.loss;
        ++since_count;

        if (step % eval_every == 0 || step == stop.max_steps) {
            LogEntry e;
            e.step = step;
            e.train_loss = since_eval / static_cast<double>(since_count);
            e.val_loss = mean_mlm_loss(current, val_masks);
            e.perplexity = std::exp(e.val_loss);
            since_eval = 0.0;
            since_count = 0;
            r.log.push_back(e);
            if (on_log) on_log(e);
            if (plateau.observe(e.val_loss)) {
                r.params = current;
                r.best_step = step;
            } else if (plateau.bad >= stop.patience) {
                r.early_stopped = true;
                break;
            }
        }
    }
    if (!stop.restore_best) r.params = std::move(current);
    return r;
}

// ---------------------------------------------------------------------------
// Denoising fine-tuning

/// One training sentence as BPE word groups, truncated so BOS/EOS framing
/// fits in stream_len.
struct EncodedSentence {
    std::vector<std::vector<TokenId>> words;
    std::vector<TokenId> ids;
    bool truncated = false;
};

inline EncodedSentence encode_sentence(const MergeTable &table, const Sentence &s, std::size_t stream_len) {
    EncodedSentence e;
    const std::size_t limit = stream_len > 1 ? stream_len - 1 : 1;
    for (auto &w : encode_words(table, s)) {
        if (e.ids.size() + w.size() > limit) {
            e.truncated = true;
            break;
        }
        e.ids.insert(e.ids.end(), w.begin(), w.end());
        e.words.push_back(std::move(w));
    }
    return e;
}

inline std::vector<EncodedSentence> encode_corpus_sentences(const Corpus &corpus, const MergeTable &table,
                                                            std::size_t stream_len) {
    std::vector<EncodedSentence> out;
    corpus.for_each_sentence([&](const Sentence &s) {
        auto e = encode_sentence(table, s, stream_len);
        if (!e.ids.empty()) out.push_back(std::move(e));
    });
    return out;
}

template <typename T>
double mean_dae_loss(const EncDecParams<T> &params, const std::vector<DaeExample> &examples) {
    if (examples.empty()) throw Error(Errc::EmptyInput, "no validation sentences");
    double total = 0.0;
    std::size_t n = 0;
    for (const auto &ex : examples) {
        auto lg = dae_loss_grad<T>(params, {ex}, nullptr);
        total += lg.loss * static_cast<double>(lg.n_targets);
        n += lg.n_targets;
    }
    return total / static_cast<double>(n);
}

/// Denoising fine-tuning on one author's sentences. The last max(1, n/20)
/// sentences are held out; validation corruption of sentence i uses seed
/// (seed XOR i).
template <typename T = float>
TrainResult<EncDecParams<T>> finetune(const EncDecParams<T> &start, const Corpus &author, const MergeTable &table,
                                      const NoiseConfig &noise, const StopConfig &stop, const LogSink &on_log = {}) {
    const ModelConfig &cfg = start.encoder.config;
    noise.validate();
    if (table.vocab_size() != cfg.vocab_size)
        throw Error(Errc::Shape, "merge table vocabulary does not match the checkpoint");
    auto sentences = encode_corpus_sentences(author, table, cfg.stream_len);
    if (sentences.size() < 10)
        throw Error(Errc::CorpusTooSmall,
                    "fine-tuning needs at least 10 sentences, corpus has " + std::to_string(sentences.size()));
    TrainResult<EncDecParams<T>> r{start, {}, {}, 0, false};
    if (stop.max_steps == 0) return r;

    const std::size_t n_val = std::max<std::size_t>(1, sentences.size() / 20);
    std::vector<DaeExample> val;
    for (std::size_t i = sentences.size() - n_val; i < sentences.size(); ++i) {
        Rng rng(cfg.seed ^ static_cast<std::uint64_t>(i));
        val.push_back({corrupt_dae(sentences[i].words, noise, rng), sentences[i].ids});
    }
    sentences.resize(sentences.size() - n_val);

    EncDecParams<T> current = start;
    OptimizerState<T> opt;
    auto names = detail::param_names(current.encoder.arrays, "encoder.");
    for (auto &n : detail::param_names(current.decoder.arrays, "decoder.")) names.push_back(std::move(n));
    Rng order_rng(mix_seed(cfg.seed, 2));
    detail::BatchCursor cursor(sentences.size(), order_rng);
    detail::Plateau plateau;
    double since_eval = 0.0;
    std::size_t since_count = 0;
    const std::size_t eval_every = std::max<std::size_t>(1, stop.eval_every);

    for (std::size_t step = 1; step <= stop.max_steps; ++step) {
        Rng step_rng(mix_seed(cfg.seed, 500000 + step));
        std::vector<DaeExample> batch;
        for (std::size_t i : cursor.next(std::min(cfg.batch_size, sentences.size())))
            batch.push_back({corrupt_dae(sentences[i].words, noise, step_rng), sentences[i].ids});
        auto lg = dae_loss_grad(current, batch, cfg.dropout > 0.0 ? &step_rng : nullptr);
        auto ptrs = detail::param_pointers(current.encoder.arrays);
        for (auto *p : detail::param_pointers(current.decoder.arrays)) ptrs.push_back(p);
        adam_step(opt, ptrs, lg.grads, adam_config(cfg), &names);
        r.step_losses.push_back(lg.loss);
        since_eval += lg.loss;
        ++since_count;

        if (step % eval_every == 0 || step == stop.max_steps) {
            LogEntry e;
            e.step = step;
            e.train_loss = since_eval / static_cast<double>(since_count);
            e.val_loss = mean_dae_loss(current, val);
            e.perplexity = std::exp(e.val_loss);
            since_eval = 0.0;
            since_count = 0;
            r.log.push_back(e);
            if (on_log) on_log(e);
            if (plateau.observe(e.val_loss)) {
                r.params = current;
                r.best_step = step;
            } else if (plateau.bad >= stop.patience) {
                r.early_stopped = true;
                break;
            }
        }
    }
    if (!stop.restore_best) r.params = std::move(current);
    return r;
}

/// Teacher-forced argmax accuracy over (clean target + EOS) positions with
/// the clean sentence as encoder input.
template <typename T>
double reconstruction_accuracy(const EncDecParams<T> &params, const std::vector<std::vector<TokenId>> &sentences) {
    std::size_t hit = 0, total = 0;
    Rng unused(0);
    for (const auto &s : sentences) {
        const auto [in, out] = detail::teacher_forcing(s);
        const auto logits = encdec_forward(params, s, in, false, unused);
        for (std::size_t t = 0; t < out.size(); ++t) {
            Eigen::Index arg = 0;
            logits.row(static_cast<Eigen::Index>(t)).maxCoeff(&arg);
            hit += static_cast<TokenId>(arg) == out[t] ? 1 : 0;
            ++total;
        }
    }
    if (total == 0) throw Error(Errc::EmptyInput, "no sentences to score");
    return static_cast<double>(hit) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Rewriting

struct RewriteConfig {
    double max_len_factor = 2.0;
    std::size_t max_len_bias = 10;
};

struct RewriteStats {
    std::size_t sentences = 0;
    std::size_t truncated_inputs = 0;
    std::size_t max_output_ids = 0;
    std::size_t empty_decodes = 0;
};

/// Greedy decode from BOS until EOS, the length cap, or stream_len.
/// PAD, BOS and MASK are never emitted.
template <typename T>
std::vector<TokenId> greedy_decode(const EncDecParams<T> &params, const std::vector<TokenId> &src, std::size_t max_len) {
    const auto &cfg = params.decoder.config;
    const Sequences srcs{src};
    detail::check_sequences(srcs, params.encoder.config);
    nn::Tape<T> enc_tape;
    Binding<T> eb(enc_tape, params.encoder.arrays);
    TransformerPass<T> enc(enc_tape, eb, params.encoder.config, nullptr);
    const nn::Matrix<T> memory = enc_tape.value(enc.encode(srcs));

    std::vector<TokenId> prefix{special::BOS};
    std::vector<TokenId> out;
    while (out.size() < max_len && prefix.size() <= cfg.stream_len) {
        nn::Tape<T> tape;
        Binding<T> db(tape, params.decoder.arrays);
        TransformerPass<T> dec(tape, db, cfg, nullptr);
        const Sequences pre{prefix};
        auto h = dec.decode(pre, params.decoder_causal, tape.leaf(memory), srcs);
        auto last = tape.gather_rows(h, {prefix.size() - 1});
        const auto &row = tape.value(dec.logits(last));
        TokenId best = special::EOS;
        T best_v = -std::numeric_limits<T>::infinity();
        for (Eigen::Index j = 0; j < row.cols(); ++j) {
            const auto id = static_cast<TokenId>(j);
            if (id == special::PAD || id == special::BOS || id == special::MASK) continue;
            if (row(0, j) > best_v) {
                best_v = row(0, j);
                best = id;
            }
        }
        if (best == special::EOS) break;
        out.push_back(best);
        prefix.push_back(best);
    }
    return out;
}

inline std::size_t decode_cap(const RewriteConfig &rc, std::size_t src_len) {
    return static_cast<std::size_t>(std::floor(rc.max_len_factor * static_cast<double>(src_len))) + rc.max_len_bias;
}

/// Makes one decoded sentence segment back as exactly one sentence, so the
/// output stays aligned with its source. Interior terminators are dropped and
/// an empty decode becomes a bare terminator.
inline std::string seal_sentence(std::string_view decoded) {
    auto is_term = [](char c) { return c == '.' || c == '!' || c == '?'; };
    const auto trimmed = text::trim(decoded);
    const char term = !trimmed.empty() && is_term(trimmed.back()) ? trimmed.back() : '.';
    std::string body;
    for (char c : trimmed) {
        if (is_term(c)) continue;
        if (text::is_space(c) && (body.empty() || body.back() == ' ')) continue;
        body += text::is_space(c) ? ' ' : c;
    }
    while (!body.empty() && body.back() == ' ') body.pop_back();
    std::string out = body + term;
    // A trailing abbreviation or initial would swallow the next sentence.
    if (split_sentences(out + " X.").size() != 2) out = body + " " + term;
    return out;
}

/// Rewrites raw text sentence by sentence; sentences are joined by single
/// spaces and paragraphs by blank lines. Every source sentence yields exactly
/// one output sentence.
template <typename T>
std::string rewrite(const EncDecParams<T> &params, std::string_view raw, const MergeTable &table,
                    const RewriteConfig &rc = {}, RewriteStats *stats = nullptr) {
    if (table.vocab_size() != params.encoder.config.vocab_size)
        throw Error(Errc::Shape, "merge table vocabulary does not match the checkpoint");
    const auto doc = parse_document(raw, "<input>");
    std::size_t tokens = 0;
    for (const auto &p : doc.paragraphs)
        for (const auto &s : p.sentences) tokens += s.tokens.size();
    if (tokens == 0) throw Error(Errc::EmptyInput, "input has no tokens");

    RewriteStats st;
    std::string out;
    const std::size_t len = params.encoder.config.stream_len;
    for (const auto &p : doc.paragraphs) {
        if (p.sentences.empty()) continue;
        if (!out.empty()) out += "\n\n";
        std::string para;
        for (const auto &s : p.sentences) {
            auto src = flatten(encode_words(table, s));
            if (src.empty()) continue;
            if (src.size() > len) {
                src.resize(len);
                ++st.truncated_inputs;
            }
            const auto ids = greedy_decode(params, src, decode_cap(rc, src.size()));
            st.max_output_ids = std::max(st.max_output_ids, ids.size());
            ++st.sentences;
            const auto text = bpe_decode(ids, table);
            if (text::trim(text).empty()) ++st.empty_decodes;
            if (!para.empty()) para += ' ';
            para += seal_sentence(text);
        }
        out += para;
    }
    if (stats) *stats = st;
    return out;
}

} // namespace styleforge
