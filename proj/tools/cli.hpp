#pragma once

// Command-line front end. `run` is kept separate from main() so the tests can
// drive it in-process.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "styleforge/styleforge.hpp"

#ifndef STYLEFORGE_DATA_DIR
#define STYLEFORGE_DATA_DIR "data"
#endif

namespace styleforge::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

inline int exit_code(ErrorClass c) {
    switch (c) {
    case ErrorClass::Usage:
        return kUsage;
    case ErrorClass::Numeric:
        return kNumeric;
    default:
        return kData;
    }
}

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;
    std::string out;

    void attach(CLI::App &app, bool out_required) {
        app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
        app.add_option("--seed", seed, "global seed (overrides the config file)");
        app.add_option("--set", sets, "override one key, e.g. --set model.d_model=32")->take_all();
        auto *o = app.add_option("--out", out, "output path");
        if (out_required) o->required();
    }

    // Precedence: defaults < --config < --set < --seed.
    RunConfig resolve() const {
        RunConfig rc;
        if (!config_path.empty()) rc.load(config_path);
        for (const auto &s : sets) rc.set(std::string_view(s));
        if (seed) rc.set("seed", std::to_string(*seed));
        rc.validate();
        return rc;
    }
};

inline Corpus read_corpus(const std::vector<std::string> &args) {
    std::vector<std::filesystem::path> paths(args.begin(), args.end());
    auto files = expand_corpus_paths(paths);
    if (files.empty()) throw Error(Errc::EmptyCorpus, "no input files");
    auto c = load_corpus(files);
    if (c.empty()) throw Error(Errc::EmptyCorpus, "input corpus has no sentences");
    return c;
}

/// Writes to `path`, or standard output when the path is empty or "-".
inline void emit(const std::string &path, const std::string &content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
    out << content;
    if (!out) throw Error(Errc::Io, "write failed for '" + path + "'");
}

inline Json read_json_file(const std::string &path) {
    const auto text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::Format, path + ": " + e.what());
    }
}

inline StyleLexicon lexicon_or_empty(const std::string &path) {
    if (!path.empty()) return load_lexicon(path);
    std::cerr << "styleforge: no --lexicon given; lexical profiles fall back to 0.5\n";
    return {};
}

inline int run(int argc, const char *const *argv) {
    CLI::App app{"styleforge: author-style pretraining, rewriting and stylistic evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // learn-bpe
    Common c_bpe;
    std::vector<std::string> bpe_inputs;
    auto *learn = app.add_subcommand("learn-bpe", "learn BPE merges from a corpus");
    c_bpe.attach(*learn, false);
    learn->add_option("corpus", bpe_inputs, "text files or directories")->required();

    // pretrain
    Common c_pre;
    std::vector<std::string> pre_inputs;
    std::string pre_merges, pre_log;
    auto *pre = app.add_subcommand("pretrain", "masked-LM pretraining; writes an LM checkpoint");
    c_pre.attach(*pre, true);
    pre->add_option("--merges", pre_merges, "merges file from learn-bpe")->required()->check(CLI::ExistingFile);
    pre->add_option("--log", pre_log, "training log (JSON lines); default standard error");
    pre->add_option("corpus", pre_inputs, "text files or directories")->required();

    // finetune
    Common c_ft;
    std::vector<std::string> ft_inputs;
    std::string ft_ckpt, ft_merges, ft_log;
    auto *ft = app.add_subcommand("finetune", "cascade an LM checkpoint and fine-tune it on one author");
    c_ft.attach(*ft, true);
    ft->add_option("--checkpoint", ft_ckpt, "LM checkpoint from pretrain")->required()->check(CLI::ExistingFile);
    ft->add_option("--merges", ft_merges, "merges file")->required()->check(CLI::ExistingFile);
    ft->add_option("--log", ft_log, "training log (JSON lines); default standard error");
    ft->add_option("corpus", ft_inputs, "author text files or directories")->required();

    // rewrite
    Common c_rw;
    std::string rw_ckpt, rw_merges, rw_input;
    auto *rw = app.add_subcommand("rewrite", "rewrite text with a fine-tuned checkpoint");
    c_rw.attach(*rw, false);
    rw->add_option("--checkpoint", rw_ckpt, "encoder-decoder checkpoint")->required()->check(CLI::ExistingFile);
    rw->add_option("--merges", rw_merges, "merges file")->required()->check(CLI::ExistingFile);
    rw->add_option("input", rw_input, "text file to rewrite")->required();

    // build-lexicon
    Common c_lex;
    std::vector<std::string> lex_inputs;
    std::string lex_seeds = std::string(STYLEFORGE_DATA_DIR) + "/seeds.txt";
    std::string lex_stop = std::string(STYLEFORGE_DATA_DIR) + "/stopwords.txt";
    auto *lexcmd = app.add_subcommand("build-lexicon", "build a style lexicon by label propagation");
    c_lex.attach(*lexcmd, false);
    lexcmd->add_option("--seeds", lex_seeds, "seed lexicon file")->check(CLI::ExistingFile);
    lexcmd->add_option("--stopwords", lex_stop, "stopword list")->check(CLI::ExistingFile);
    lexcmd->add_option("corpus", lex_inputs, "text files or directories")->required();

    // profile
    Common c_prof;
    std::vector<std::string> prof_inputs;
    std::string prof_lexicon;
    auto *prof = app.add_subcommand("profile", "style profile of a corpus as JSON");
    c_prof.attach(*prof, false);
    prof->add_option("--lexicon", prof_lexicon, "lexicon from build-lexicon")->check(CLI::ExistingFile);
    prof->add_option("corpus", prof_inputs, "text files or directories")->required();

    // evaluate
    Common c_ev;
    std::vector<std::string> ev_gen, ev_src, ev_tgt;
    std::string ev_lexicon;
    auto *ev = app.add_subcommand("evaluate", "content and style-alignment report as JSON");
    c_ev.attach(*ev, false);
    ev->add_option("--generated", ev_gen, "rewritten text")->required();
    ev->add_option("--source", ev_src, "the text that was rewritten")->required();
    ev->add_option("--target", ev_tgt, "target author corpus")->required();
    ev->add_option("--lexicon", ev_lexicon, "lexicon from build-lexicon")->check(CLI::ExistingFile);

    // aggregate
    Common c_agg;
    std::vector<std::string> agg_inputs;
    std::string agg_label = "mean ± std", agg_format = "table";
    auto *agg = app.add_subcommand("aggregate", "mean ± sample std over per-author reports");
    c_agg.attach(*agg, false);
    agg->add_option("--label", agg_label, "row label of the table");
    agg->add_option("--format", agg_format, "table or json")->check(CLI::IsMember({"table", "json"}));
    agg->add_option("reports", agg_inputs, "report JSON files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e); // --help / --version
    } catch (const CLI::ParseError &e) {
        std::cerr << "styleforge: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*learn) {
            const auto rc = c_bpe.resolve();
            const auto corpus = read_corpus(bpe_inputs);
            const auto table = learn_bpe(corpus, rc.bpe_merges, "learn-bpe");
            std::ostringstream ss;
            write_merges(ss, table, rc.hash());
            emit(c_bpe.out, ss.str());
        } else if (*pre) {
            const auto rc = c_pre.resolve();
            const auto corpus = read_corpus(pre_inputs);
            const auto table = load_merges(pre_merges);
            std::ofstream log_file;
            if (!pre_log.empty()) {
                log_file.open(pre_log);
                if (!log_file) throw Error(Errc::Io, "cannot write '" + pre_log + "'");
            }
            std::ostream &log = pre_log.empty() ? std::cerr : log_file;
            const auto r = pretrain<float>(corpus, table, rc.model, rc.mask, rc.train,
                                           [&](const LogEntry &e) { log << to_json_line(e) << '\n'; });
            save_checkpoint(c_pre.out, r.params, rc.hash());
        } else if (*ft) {
            const auto rc = c_ft.resolve();
            const auto corpus = read_corpus(ft_inputs);
            const auto table = load_merges(ft_merges);
            auto lm = load_lm_checkpoint<float>(ft_ckpt);
            lm.config.seed = rc.seed;
            lm.config.dropout = rc.model.dropout;
            Rng rng(mix_seed(rc.seed, 3));
            const auto start = cascade(lm, rng);
            std::ofstream log_file;
            if (!ft_log.empty()) {
                log_file.open(ft_log);
                if (!log_file) throw Error(Errc::Io, "cannot write '" + ft_log + "'");
            }
            std::ostream &log = ft_log.empty() ? std::cerr : log_file;
            const auto r = finetune(start, corpus, table, rc.noise, rc.train,
                                    [&](const LogEntry &e) { log << to_json_line(e) << '\n'; });
            save_checkpoint(c_ft.out, r.params, rc.hash());
        } else if (*rw) {
            const auto rc = c_rw.resolve();
            const auto params = load_encdec_checkpoint<float>(rw_ckpt);
            const auto table = load_merges(rw_merges);
            RewriteStats st;
            auto text = rewrite(params, read_text_file(rw_input), table, rc.rewrite, &st);
            if (st.truncated_inputs > 0)
                std::cerr << "styleforge: truncated " << st.truncated_inputs << " sentence(s) to stream_len\n";
            emit(c_rw.out, text + "\n");
            if (!c_rw.out.empty() && c_rw.out != "-") {
                Json meta;
                meta["config_hash"] = rc.hash();
                meta["version"] = kVersion;
                meta["checkpoint"] = rw_ckpt;
                meta["input"] = rw_input;
                meta["sentences"] = st.sentences;
                meta["truncated_inputs"] = st.truncated_inputs;
                meta["empty_decodes"] = st.empty_decodes;
                emit(c_rw.out + ".meta.json", meta.dump(2) + "\n");
            }
        } else if (*lexcmd) {
            const auto rc = c_lex.resolve();
            const auto corpus = read_corpus(lex_inputs);
            const auto seeds = load_seed_lexicon(lex_seeds);
            const auto stop = load_word_list(lex_stop);
            PropagationStats ps;
            const auto lex = build_style_lexicon(corpus, seeds, stop, rc.lexstyle, &ps);
            std::ostringstream ss;
            write_lexicon(ss, lex, rc.hash());
            emit(c_lex.out, ss.str());
        } else if (*prof) {
            const auto rc = c_prof.resolve();
            const auto corpus = read_corpus(prof_inputs);
            const auto lex = lexicon_or_empty(prof_lexicon);
            const auto p = style_profile(corpus, lex);
            Json j;
            j["profile"] = to_json(p);
            j["lexical_coverage"] = p.lexical.covered_tokens;
            j["meta"] = {{"corpus", prof_inputs}, {"config_hash", rc.hash()}, {"version", kVersion}};
            emit(c_prof.out, j.dump(2) + "\n");
        } else if (*ev) {
            const auto rc = c_ev.resolve();
            const auto gen = read_corpus(ev_gen);
            const auto src = read_corpus(ev_src);
            const auto tgt = read_corpus(ev_tgt);
            const auto lex = lexicon_or_empty(ev_lexicon);
            auto join = [](const std::vector<std::string> &xs) {
                std::string s;
                for (const auto &x : xs) s += (s.empty() ? "" : ",") + x;
                return s;
            };
            ReportMeta meta{join(ev_src), join(ev_tgt), rc.hash()};
            const auto report = style_report(gen, tgt, src, lex, kDefaultSurfaceCaps, meta);
            emit(c_ev.out, to_json(report).dump(2) + "\n");
        } else if (*agg) {
            const auto rc = c_agg.resolve();
            std::vector<Json> reports;
            for (const auto &p : agg_inputs) reports.push_back(read_json_file(p));
            const auto a = aggregate_reports(reports);
            if (agg_format == "json") {
                auto j = to_json(a);
                j["config_hash"] = rc.hash();
                emit(c_agg.out, j.dump(2) + "\n");
            } else {
                emit(c_agg.out, format_aggregate_table(a, agg_label));
            }
        }
    } catch (const Error &e) {
        std::cerr << "styleforge: " << e.what() << '\n';
        return exit_code(e.error_class());
    } catch (const std::exception &e) {
        std::cerr << "styleforge: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}

} // namespace styleforge::cli
