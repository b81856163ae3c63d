// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Independent oracles live in tests/support; nothing here reuses the code
// path it is checking where an oracle exists.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "styleforge/styleforge.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"
#include "support/style_experiment.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace styleforge;
using testing_support::run_cli;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

struct Check {
    bool pass = true;
    std::string detail;

    void expect(bool ok, const std::string &what) {
        if (ok) return;
        if (pass) detail.clear();
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
    void note(const std::string &s) {
        if (!detail.empty()) detail += "; ";
        detail += s;
    }
};

std::string fmt(const char *f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char *f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

TokenSeq random_seq(Rng &rng, std::size_t max_len) {
    static const std::vector<std::string> alphabet{"a", "b", "c", "d", "e", "f"};
    TokenSeq s(1 + rng.below(max_len));
    for (auto &w : s) w = alphabet[rng.below(alphabet.size())];
    return s;
}

// ---------------------------------------------------------------------------

Check metric_oracles() {
    Check c;
    const TokenSeq x{"the", "cat", "sat", "on", "the", "mat", "today"};
    c.expect(bleu({x}, {x}) == 100.0, "bleu(x,x) != 100");
    for (auto v : {RougeVariant::N1, RougeVariant::N2, RougeVariant::N3, RougeVariant::L})
        c.expect(rouge(x, x, v) == 1.0, "rouge(x,x) != 1");
    const std::vector<double> p{0.2, 0.3, 0.5};
    c.expect(jsd(p, p) == 0.0, "jsd(p,p) != 0");
    c.expect(jsd(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 1.0, "jsd((1,0),(0,1)) != 1");

    Rng rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<TokenSeq> cands, refs;
        const std::size_t n = 1 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) {
            cands.push_back(random_seq(rng, 12));
            refs.push_back(random_seq(rng, 12));
        }
        worst = std::max(worst, std::fabs(bleu(cands, refs) - oracle::bleu(cands, refs)));
        const std::pair<RougeVariant, std::size_t> variants[] = {
            {RougeVariant::N1, 1}, {RougeVariant::N2, 2}, {RougeVariant::N3, 3}, {RougeVariant::L, 0}};
        for (const auto &[v, order] : variants)
            worst = std::max(worst, std::fabs(rouge(cands[0], refs[0], v) - oracle::rouge(cands[0], refs[0], order)));
    }
    c.expect(worst <= 1e-9, fmt("random pairs differ from oracle by %.3g", worst));
    c.note(fmt("max |diff| over 20 random pairs %.2g", worst));
    return c;
}

Check noise_statistics() {
    Check c;
    constexpr std::size_t n = 100000, vocab = 100;
    std::vector<TokenId> stream(n);
    for (std::size_t i = 0; i < n; ++i) stream[i] = static_cast<TokenId>(special::kCount + i % 80);
    Rng rng(2024);
    const auto b = mask_mlm(stream, MaskConfig{}, vocab, rng);
    std::size_t masked = 0, kept = 0, random = 0;
    for (std::size_t k = 0; k < b.target_positions.size(); ++k) {
        const TokenId in = b.inputs[b.target_positions[k]];
        if (in == special::MASK) ++masked;
        else if (in == b.target_ids[k]) ++kept;
        else ++random;
    }
    const double t = static_cast<double>(b.target_positions.size());
    // A random draw lands on the original id with chance 1/(vocab - specials);
    // those count as unchanged, so 10% of the rate moves from random to kept.
    const double coincide = 1.0 / static_cast<double>(vocab - special::kCount);
    const double rate = t / n, r_mask = masked / t, r_rand = random / t, r_keep = kept / t;
    c.expect(std::fabs(rate - 0.15) <= 0.01, fmt("mask rate %.4f", rate));
    c.expect(std::fabs(r_mask - 0.8) <= 0.02, fmt("[MASK] share %.4f", r_mask));
    c.expect(std::fabs(r_rand - 0.1 * (1 - coincide)) <= 0.02, fmt("random share %.4f", r_rand));
    c.expect(std::fabs(r_keep - (0.1 + 0.1 * coincide)) <= 0.02, fmt("unchanged share %.4f", r_keep));

    std::vector<TokenId> toks(n);
    for (std::size_t i = 0; i < n; ++i) toks[i] = static_cast<TokenId>(special::kCount + i % 50);
    Rng rng2(77);
    const auto out = corrupt_dae(toks, NoiseConfig{}, rng2);
    const double dropped = 1.0 - static_cast<double>(out.size()) / n;
    const double blank = static_cast<double>(std::count(out.begin(), out.end(), special::BLANK)) / out.size();
    c.expect(std::fabs(dropped - 0.10) <= 0.01, fmt("drop rate %.4f", dropped));
    c.expect(std::fabs(blank - 0.10) <= 0.01, fmt("blank rate %.4f", blank));
    c.note(fmt("mask %.4f, split %.3f", rate, r_mask) + fmt("/%.3f", r_rand) + fmt("/%.3f", r_keep) +
           fmt(", drop %.4f, blank %.4f", dropped, blank));
    return c;
}

Check gradient_check() {
    Check c;
    for (const auto &[name, r] : {std::pair{"MLM", gradcheck::mlm(250)}, std::pair{"DAE", gradcheck::dae(250)}}) {
        c.expect(r.parameters <= 5000, std::string(name) + " model has " + std::to_string(r.parameters) + " parameters");
        c.expect(r.coordinates >= 200, std::string(name) + " checked too few coordinates");
        c.expect(r.max_rel_error < 1e-3, std::string(name) + fmt(" max rel error %.3g", r.max_rel_error));
        c.note(std::string(name) + " " + std::to_string(r.coordinates) + " coords of " + std::to_string(r.parameters) +
               fmt(", max rel %.2g", r.max_rel_error));
    }
    return c;
}

// Shared by criteria 4 and 5: the 50-sentence toy corpus and its model.
struct Toy {
    Corpus corpus = corpus_from_text(synth::author_text(synth::Style::Neutral, 50, 21), "toy");
    MergeTable table = learn_bpe(corpus, 100);
    ModelConfig cfg = [] {
        ModelConfig m;
        m.n_layers = 1;
        m.d_model = 64;
        m.n_heads = 4;
        m.d_ffn = 128;
        m.stream_len = 64;
        m.batch_size = 8;
        m.learning_rate = 5e-3;
        m.seed = 11;
        return m;
    }();
};

Check cascade_fidelity() {
    Check c;
    Toy toy;
    const auto lm = pretrain<float>(toy.corpus, toy.table, toy.cfg, MaskConfig{}, StopConfig{50, 100, 25}).params;
    TempDir tmp;
    const auto path = (tmp.path() / "lm.ckpt").string();
    save_checkpoint(path, lm);
    const auto loaded = load_lm_checkpoint(path);
    c.expect(loaded.arrays == lm.arrays, "checkpoint round trip changed weights");

    Rng rng(mix_seed(toy.cfg.seed, 3));
    const auto ed = cascade(loaded, rng);
    std::size_t compared = 0, cross = 0;
    for (std::size_t i = 0; i < ed.encoder.arrays.size(); ++i) {
        const auto &name = ed.encoder.arrays.name(i);
        c.expect(ed.encoder.arrays.value(i) == loaded.arrays[name], "encoder " + name + " differs");
        ++compared;
    }
    for (std::size_t i = 0; i < ed.decoder.arrays.size(); ++i) {
        const auto &name = ed.decoder.arrays.name(i);
        if (is_cross_attention_param(name)) {
            ++cross;
            continue;
        }
        c.expect(ed.decoder.arrays.value(i) == loaded.arrays[name], "decoder " + name + " differs");
        ++compared;
    }
    c.expect(cross > 0, "decoder has no cross-attention");

    // Changing target token j must leave logits at positions < j bitwise equal.
    std::vector<TokenId> src, tgt{special::BOS};
    for (TokenId t = 0; t < 12; ++t) {
        src.push_back(static_cast<TokenId>(special::kCount + (3 * t) % 40));
        tgt.push_back(static_cast<TokenId>(special::kCount + (5 * t + 1) % 40));
    }
    Rng unused(0);
    const auto base = encdec_forward(ed, src, tgt, false, unused);
    std::size_t rows = 0;
    for (std::size_t j = 1; j < tgt.size(); ++j) {
        auto changed = tgt;
        changed[j] = static_cast<TokenId>(special::kCount + 41);
        const auto l = encdec_forward(ed, src, changed, false, unused);
        for (std::size_t r = 0; r < j; ++r, ++rows)
            c.expect(l.row(static_cast<Eigen::Index>(r)) == base.row(static_cast<Eigen::Index>(r)),
                     "position " + std::to_string(r) + " sees token " + std::to_string(j));
    }
    c.note(std::to_string(compared) + " arrays bit-identical, " + std::to_string(cross) + " fresh cross arrays, " +
           std::to_string(rows) + " causal rows bitwise equal");
    return c;
}

Check overfit_sanity() {
    Check c;
    Toy toy;
    auto cfg = toy.cfg;
    cfg.vocab_size = toy.table.vocab_size();
    const MaskConfig mask;
    // Fixed masks over every training stream, scored before and after.
    const auto streams = build_streams(toy.corpus, toy.table, cfg.stream_len);
    const auto fixed = validation_masks(streams, mask, cfg.vocab_size, 99);
    Rng init_rng(mix_seed(cfg.seed, 0));
    const double before = mean_mlm_loss(init_params<float>(cfg, init_rng), fixed);
    const auto lm = pretrain<float>(toy.corpus, toy.table, cfg, mask, StopConfig{200, 1000, 50});
    const double after = mean_mlm_loss(lm.params, fixed);
    const double drop = 1.0 - after / before;
    c.expect(lm.step_losses.size() <= 200, "pretraining ran past 200 steps");
    c.expect(drop >= 0.30, fmt("MLM loss fell only %.1f%%", 100 * drop));

    Rng rng(mix_seed(cfg.seed, 3));
    const auto start = cascade(lm.params, rng);
    // Overfitting is the point here, so keep the last weights rather than the
    // best held-out ones.
    const auto ft = finetune(start, toy.corpus, toy.table, NoiseConfig{}, StopConfig{2000, 1000, 100, false});
    std::vector<std::vector<TokenId>> clean;
    for (const auto &e : encode_corpus_sentences(toy.corpus, toy.table, cfg.stream_len)) clean.push_back(e.ids);
    const double acc = reconstruction_accuracy(ft.params, clean);
    c.expect(ft.step_losses.size() <= 2000, "fine-tuning ran past 2000 steps");
    c.expect(acc >= 0.90, fmt("reconstruction accuracy %.3f", acc));
    c.note(fmt("MLM loss %.3f -> %.3f", before, after) + fmt(" (-%.1f%%)", 100 * drop) +
           fmt(", reconstruction %.3f after %.0f steps", acc, static_cast<double>(ft.step_losses.size())));
    return c;
}

Check style_direction() {
    Check c;
    experiment::Settings s;
    const auto o = experiment::run(s);
    const auto &a = o.model_a, &b = o.model_b, &j = o.joint;
    c.expect(a.jsd_to_a < a.jsd_to_b, fmt("model-A jsd toward A %.4f, toward B %.4f", a.jsd_to_a, a.jsd_to_b));
    c.expect(a.mse_to_a < a.mse_to_b, fmt("model-A surface mse toward A %.4f, toward B %.4f", a.mse_to_a, a.mse_to_b));
    c.expect(b.jsd_to_b < b.jsd_to_a, fmt("model-B jsd toward B %.4f, toward A %.4f", b.jsd_to_b, b.jsd_to_a));
    c.expect(b.mse_to_b < b.mse_to_a, fmt("model-B surface mse toward B %.4f, toward A %.4f", b.mse_to_b, b.mse_to_a));
    c.expect(j.jsd_to_a > a.jsd_to_a && j.mse_to_a > a.mse_to_a,
             fmt("LM+DAE toward A jsd %.4f mse %.4f is not worse than model-A", j.jsd_to_a, j.mse_to_a));
    c.expect(o.seconds < 45 * 60, fmt("took %.0f s", o.seconds));
    c.note(fmt("model-A jsd %.4f/%.4f", a.jsd_to_a, a.jsd_to_b) + fmt(" mse %.4f/%.4f", a.mse_to_a, a.mse_to_b) +
           fmt(", model-B jsd %.4f/%.4f", b.jsd_to_a, b.jsd_to_b) + fmt(" mse %.4f/%.4f", b.mse_to_a, b.mse_to_b) +
           fmt(", LM+DAE jsd %.4f/%.4f", j.jsd_to_a, j.jsd_to_b) + fmt(" mse %.4f/%.4f", j.mse_to_a, j.mse_to_b) +
           " (each pair: toward A/toward B)");
    return c;
}

Check label_propagation() {
    Check c;
    WordGraph g;
    g.nodes = {"alpha", "mid", "omega"};
    g.adjacency = {{{1, 1.0}}, {{0, 1.0}, {2, 1.0}}, {{1, 1.0}}};
    SeedLexicon tiny;
    for (std::size_t d = 0; d < kSpectra; ++d) {
        tiny.poles[d][0] = {"alpha"};
        tiny.poles[d][1] = {"omega"};
    }
    RawStyleScores raw;
    raw.raw.assign(3, StyleVector{});
    raw.normalized.assign(3, StyleVector{0.9, 0.9, 0.9, 0.9});
    const auto lex = propagate(g, tiny, raw, 1e-9, 1000);
    const auto harmonic = oracle::harmonic({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}}, {1, -1, 0}, {1, 0.9, 0}, 1000);
    for (std::size_t d = 0; d < kSpectra; ++d) {
        c.expect(std::fabs(lex.find("mid")->scores[d] - 0.5) <= 1e-6, fmt("middle node %.9f", lex.find("mid")->scores[d]));
        c.expect(std::fabs(harmonic[1] - 0.5) <= 1e-6, "harmonic oracle disagrees");
        c.expect(lex.find("alpha")->scores[d] == 1.0 && lex.find("omega")->scores[d] == 0.0, "3-node seeds moved");
    }

    // The shipped seed lexicon over a corpus built from its own words.
    const auto seeds = load_seed_lexicon(std::string(STYLEFORGE_DATA_DIR) + "/seeds.txt");
    const auto stop = load_word_list(std::string(STYLEFORGE_DATA_DIR) + "/stopwords.txt");
    std::string text;
    Rng rng(5);
    for (std::size_t d = 0; d < kSpectra; ++d)
        for (int p = 0; p < 2; ++p) {
            const std::vector<std::string> words(seeds.poles[d][p].begin(), seeds.poles[d][p].end());
            for (int para = 0; para < 6; ++para) {
                for (int w = 0; w < 8; ++w) text += words[rng.below(words.size())] + " ";
                text += "plain words here.\n\n";
            }
        }
    LexiconBuildConfig cfg;
    cfg.f_min = 2;
    const auto big = build_style_lexicon(corpus_from_text(text), seeds, stop, cfg);
    std::size_t in_range = 0;
    for (const auto &[w, e] : big.entries)
        for (double s : e.scores) {
            c.expect(s >= 0.0 && s <= 1.0, "score of " + w + " outside [0,1]");
            ++in_range;
        }
    std::size_t clamped = 0;
    for (std::size_t d = 0; d < kSpectra; ++d)
        for (int p = 0; p < 2; ++p)
            for (const auto &w : seeds.poles[d][p]) {
                const auto *e = big.find(w);
                c.expect(e && e->scores[d] == (p == 0 ? 1.0 : 0.0), "seed " + w + " not clamped");
                ++clamped;
            }

    std::string pure;
    for (const auto &w : seeds.poles[0][0]) pure += w + ". ";
    const auto prof = lexical_profile(corpus_from_text(pure), big);
    c.expect(prof.values[0] == 1.0, fmt("pure pole-A profile %.6f", prof.values[0]));
    c.note(fmt("middle %.9f", lex.find("mid")->scores[0]) + ", " + std::to_string(in_range) + " scores in [0,1], " +
           std::to_string(clamped) + " seeds clamped" + fmt(", pure pole-A profile %.1f", prof.values[0]));
    return c;
}

Check bpe() {
    Check c;
    const std::map<std::string, std::int64_t> toy{{"low", 5}, {"lower", 2}, {"newest", 6}, {"widest", 3}};
    // Pair counts by hand over the character sequences plus end-of-word.
    std::map<Merge, std::int64_t> counts;
    for (const auto &[w, n] : toy) {
        std::vector<std::string> sym;
        for (char ch : w) sym.emplace_back(1, ch);
        sym.emplace_back(kEndOfWord);
        for (std::size_t k = 0; k + 1 < sym.size(); ++k) counts[{sym[k], sym[k + 1]}] += n;
    }
    Merge best;
    std::int64_t top = 0;
    for (const auto &[pair, n] : counts)
        if (n > top) best = pair, top = n;
    const auto table = learn_bpe(toy, 1);
    c.expect(best == Merge{"e", "s"}, "oracle's first pair is not (e,s)");
    c.expect(!table.merges().empty() && table.merges()[0] == best, "first learned merge differs from oracle");

    const auto corpus = merge_corpora(corpus_from_text(synth::author_text(synth::Style::A, 80, 1), "a"),
                                      corpus_from_text(synth::author_text(synth::Style::B, 40, 2), "b"));
    const auto t = learn_bpe(corpus, 60);
    std::size_t checked = 0, ok = 0;
    corpus.for_each_sentence([&](const Sentence &s) {
        for (const auto &tok : s.tokens) {
            if (checked >= 1000) return;
            ok += bpe_decode(bpe_encode(t, tok.text), t) == text::ascii_lower(tok.text) ? 1 : 0;
            ++checked;
        }
    });
    c.expect(checked == 1000 && ok == checked, std::to_string(ok) + "/" + std::to_string(checked) + " round trips");
    c.note("first merge (" + best.first + "," + best.second + ") count " + std::to_string(top) + ", " +
           std::to_string(ok) + "/" + std::to_string(checked) + " words round-trip");
    return c;
}

Check determinism() {
    Check c;
    TempDir tmp;
    const auto a = tmp.write("corpus/a.txt", synth::author_text(synth::Style::A, 40, 1));
    tmp.write("corpus/b.txt", synth::author_text(synth::Style::B, 40, 2));
    const auto dir = (tmp.path() / "corpus").string();
    const auto input = tmp.write("input.txt", synth::author_text(synth::Style::Neutral, 8, 3));
    const std::vector<std::string> common = {"--seed", "13", "--set", "model.n_layers=1", "model.d_model=16",
                                             "model.n_heads=2", "model.d_ffn=32", "model.stream_len=48",
                                             "train.max_steps=60", "train.eval_every=30", "bpe.n_merges=80"};
    auto run = [&](std::vector<std::string> args) {
        args.insert(args.end(), common.begin(), common.end());
        const auto r = run_cli(args, tmp.path());
        c.expect(r.exit_code == 0, args[0] + " exited " + std::to_string(r.exit_code) + ": " + r.err);
    };
    const auto p = [&](const std::string &f) { return (tmp.path() / f).string(); };
    const std::vector<std::string> outputs = {"merges.txt", "lm.ckpt", "a.ckpt", "rewrite.txt", "report.json"};
    std::vector<std::string> first;
    for (int round = 0; round < 2; ++round) {
        run({"learn-bpe", "--out", p("merges.txt"), dir});
        run({"pretrain", "--merges", p("merges.txt"), "--out", p("lm.ckpt"), "--log", p("pre.log"), dir});
        run({"finetune", "--checkpoint", p("lm.ckpt"), "--merges", p("merges.txt"), "--out", p("a.ckpt"), "--log",
             p("ft.log"), a});
        run({"rewrite", "--checkpoint", p("a.ckpt"), "--merges", p("merges.txt"), "--out", p("rewrite.txt"), input});
        run({"evaluate", "--generated", p("rewrite.txt"), "--source", input, "--target", a, "--out",
             p("report.json")});
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            const auto bytes = slurp(p(outputs[i]));
            c.expect(!bytes.empty(), outputs[i] + " is empty");
            if (round == 0) first.push_back(bytes);
            else c.expect(bytes == first[i], outputs[i] + " differs between runs");
        }
    }
    std::size_t total = 0;
    for (const auto &f : first) total += f.size();
    c.note(std::to_string(outputs.size()) + " artifacts (" + std::to_string(total) + " bytes) identical across runs");
    return c;
}

Check report_format() {
    Check c;
    TempDir tmp;
    const std::string dir = std::string(STYLEFORGE_FIXTURE_DIR) + "/published_row";
    std::vector<std::string> reports;
    for (const auto &e : std::filesystem::directory_iterator(dir)) reports.push_back(e.path().string());
    std::sort(reports.begin(), reports.end());

    std::vector<std::string> args{"aggregate", "--label", "StyleLM"};
    args.insert(args.end(), reports.begin(), reports.end());
    const auto table = run_cli(args, tmp.path());
    c.expect(table.exit_code == 0, "aggregate failed: " + table.err);
    c.expect(table.out == slurp(std::string(STYLEFORGE_FIXTURE_DIR) + "/published_row_expected.md"),
             "table differs from the expected layout");

    args = {"aggregate", "--format", "json"};
    args.insert(args.end(), reports.begin(), reports.end());
    const auto js = run_cli(args, tmp.path());
    c.expect(js.exit_code == 0, "aggregate --format json failed: " + js.err);
    // Published row: mean and standard deviation per column.
    const double published[8][2] = {{43.4, 1.7}, {.73, .13}, {.53, .06}, {.41, .08},
                                    {.68, .07},  {.29, .04}, {.19, .01}, {.31, .04}};
    double worst = 0;
    if (js.exit_code == 0) {
        const auto agg = Json::parse(js.out);
        for (std::size_t k = 0; k < kReportColumns.size(); ++k) {
            const auto &col = kReportColumns[k];
            std::vector<double> xs;
            for (const auto &r : reports)
                xs.push_back(Json::parse(slurp(r))[std::string(col.group)][std::string(col.key)].get<double>());
            const auto [mean, sd] = oracle::mean_sd(xs);
            const auto &cell = agg[std::string(col.group)][std::string(col.key)];
            for (double d : {cell["mean"].get<double>() - mean, cell["stddev"].get<double>() - sd,
                             mean - published[k][0], sd - published[k][1]})
                worst = std::max(worst, std::fabs(d));
        }
    }
    c.expect(worst <= 1e-9, fmt("arithmetic off by %.3g", worst));
    c.note(std::to_string(reports.size()) + " fixtures, table layout matches, max |diff| " + fmt("%.2g", worst));
    return c;
}

} // namespace

// With arguments, runs only the listed criteria.
int main(int argc, char **argv) {
    struct Criterion {
        int id;
        const char *name;
        double limit_s; // 0 means no runtime bound
        std::function<Check()> run;
    };
    const Criterion criteria[] = {
        {1, "metric oracle suite", 10, metric_oracles},
        {2, "noise statistics", 10, noise_statistics},
        {3, "gradient check", 120, gradient_check},
        {4, "cascade fidelity", 0, cascade_fidelity},
        {5, "overfit sanity", 15 * 60, overfit_sanity},
        {6, "style direction", 45 * 60, style_direction},
        {7, "label propagation", 0, label_propagation},
        {8, "bpe", 0, bpe},
        {9, "determinism", 0, determinism},
        {10, "report format", 0, report_format},
    };
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    int failures = 0, ran = 0;
    for (const auto &cr : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), cr.id) == only.end()) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = cr.run();
        } catch (const std::exception &e) {
            c.expect(false, std::string("threw: ") + e.what());
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cr.limit_s > 0) c.expect(sec < cr.limit_s, fmt("runtime %.1f s over limit %.0f s", sec, cr.limit_s));
        failures += c.pass ? 0 : 1;
        std::printf("%s %2d %s (%.1f s): %s\n", c.pass ? "PASS" : "FAIL", cr.id, cr.name, sec, c.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
