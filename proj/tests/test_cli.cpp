#include <gtest/gtest.h>

#include <filesystem>

#include "cli.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"
#include "support/synthetic.hpp"

using namespace styleforge;
using testing_support::run_cli;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

const std::string kFixtures = STYLEFORGE_FIXTURE_DIR;

std::vector<std::string> published_reports() {
    std::vector<std::string> out;
    for (const auto &e : std::filesystem::directory_iterator(kFixtures + "/published_row"))
        out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

// Small model and short schedules so the whole pipeline runs in seconds.
const std::vector<std::string> kTinyModel = {
    "--set", "model.n_layers=1", "model.d_model=16", "model.n_heads=2", "model.d_ffn=32", "model.stream_len=32",
    "model.batch_size=4", "train.max_steps=150", "train.eval_every=75", "bpe.n_merges=60"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST(Cli, EvaluateIdentityFixture) {
    TempDir tmp;
    const auto src = kFixtures + "/eval/source.txt";
    const auto r = run_cli({"evaluate", "--generated", src, "--source", src, "--target", src}, tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["content"]["bleu"].get<double>(), 100.0);
    for (const char *k : {"rouge1", "rouge2", "rouge3", "rougeL"}) EXPECT_DOUBLE_EQ(j["content"][k].get<double>(), 1.0);
    for (const char *k : {"lexical_mse", "syntactic_jsd", "surface_mse"}) EXPECT_EQ(j["alignment"][k].get<double>(), 0.0);
    EXPECT_EQ(j["meta"]["config_hash"].get<std::string>(), RunConfig{}.hash());
}

TEST(Cli, EvaluateAgainstDifferentTarget) {
    TempDir tmp;
    const auto src = kFixtures + "/eval/source.txt", tgt = kFixtures + "/eval/target.txt";
    const auto r = run_cli({"evaluate", "--generated", src, "--source", src, "--target", tgt}, tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_GT(j["alignment"]["syntactic_jsd"].get<double>(), 0.0);
    EXPECT_GT(j["alignment"]["surface_mse"].get<double>(), 0.0);

    const auto one_para = tmp.write("one.txt", "A single paragraph. It has two sentences.\n");
    const auto mismatch = run_cli({"evaluate", "--generated", one_para, "--source", src, "--target", tgt}, tmp.path());
    EXPECT_EQ(mismatch.exit_code, 2);
    EXPECT_NE(mismatch.err.find("AlignmentMismatch"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
    TempDir tmp;
    auto r = run_cli({"evaluate", "--no-such-flag"}, tmp.path());
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_TRUE(r.out.empty());

    EXPECT_EQ(run_cli({}, tmp.path()).exit_code, 1);
    EXPECT_EQ(run_cli({"frobnicate"}, tmp.path()).exit_code, 1);

    const auto src = kFixtures + "/eval/source.txt";
    r = run_cli({"learn-bpe", "--set", "no.such.key=1", src}, tmp.path());
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("no.such.key"), std::string::npos);
    EXPECT_EQ(run_cli({"learn-bpe", "--set", "noise.p_drop=1.5", src}, tmp.path()).exit_code, 1);
    EXPECT_EQ(run_cli({"--help"}, tmp.path()).exit_code, 0);
}

TEST(Cli, DataErrorsExitTwo) {
    TempDir tmp;
    EXPECT_EQ(run_cli({"learn-bpe", (tmp.path() / "missing.txt").string()}, tmp.path()).exit_code, 2);
    const auto bad = tmp.write("bad.json", "{ not json");
    EXPECT_EQ(run_cli({"aggregate", bad}, tmp.path()).exit_code, 2);
    const auto incomplete = tmp.write("partial.json", R"({"content": {"bleu": 1}})");
    EXPECT_EQ(run_cli({"aggregate", incomplete}, tmp.path()).exit_code, 2);
}

TEST(Cli, ExitCodeClasses) {
    EXPECT_EQ(cli::exit_code(Error(Errc::Config, "x").error_class()), 1);
    EXPECT_EQ(cli::exit_code(Error(Errc::Io, "x").error_class()), 2);
    EXPECT_EQ(cli::exit_code(Error(Errc::NonFiniteGradient, "x").error_class()), 3);
    EXPECT_EQ(cli::exit_code(Error(Errc::Shape, "x").error_class()), 3);
}

TEST(Cli, AggregateMatchesOracleAndTableLayout) {
    TempDir tmp;
    const auto reports = published_reports();
    ASSERT_EQ(reports.size(), 10u);

    auto r = run_cli(cat({"aggregate", "--format", "json"}, reports), tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j["n_reports"].get<std::size_t>(), 10u);
    for (const auto &col : kReportColumns) {
        std::vector<double> xs;
        for (const auto &p : reports)
            xs.push_back(Json::parse(slurp(p))[std::string(col.group)][std::string(col.key)].get<double>());
        const auto [mean, sd] = oracle::mean_sd(xs);
        const auto &cell = j[std::string(col.group)][std::string(col.key)];
        EXPECT_NEAR(cell["mean"].get<double>(), mean, 1e-9) << col.key;
        EXPECT_NEAR(cell["stddev"].get<double>(), sd, 1e-9) << col.key;
    }

    r = run_cli(cat({"aggregate", "--label", "StyleLM"}, reports), tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out, slurp(kFixtures + "/published_row_expected.md"));
}

TEST(Cli, PipelineIsReproducibleAndCarriesConfigHash) {
    TempDir tmp;
    const auto corpus = tmp.write("corpus/a.txt", synth::author_text(synth::Style::A, 40, 1)) ;
    tmp.write("corpus/b.txt", synth::author_text(synth::Style::B, 40, 2));
    const auto dir = (tmp.path() / "corpus").string();
    const auto input = tmp.write("input.txt", synth::author_text(synth::Style::Neutral, 6, 3));
    // One synthetic-vocabulary word per pole keeps every pole covered; the rest are padding.
    std::string seeds;
    const char *spectra[] = {"subjective-objective", "concrete-abstract", "literary-colloquial", "formal-informal"};
    const char *words[4][2] = {{"warm", "old"}, {"horse", "city"}, {"quiet", "dark"}, {"teacher", "farmer"}};
    for (int s = 0; s < 4; ++s)
        for (int pole = 0; pole < 2; ++pole) {
            seeds += std::string("#spectrum ") + spectra[s] + (pole ? " pole b\n" : " pole a\n") + words[s][pole] + "\n";
            for (char c = 'a'; c < 'j'; ++c) seeds += std::string("pad") + char('a' + 2 * s + pole) + c + "\n";
        }
    const auto seeds_file = tmp.write("seeds.txt", seeds);

    // Both runs write to the same paths so recorded paths match too.
    auto pipeline = [&] {
        const auto p = [&](const std::string &name) { return (tmp.path() / name).string(); };
        const auto seed = std::vector<std::string>{"--seed", "5"};
        auto step = [&](std::vector<std::string> args) {
            const auto r = run_cli(cat(cat(args, seed), kTinyModel), tmp.path());
            EXPECT_EQ(r.exit_code, 0) << args[0] << ": " << r.err;
        };
        step({"learn-bpe", "--out", p("merges.txt"), dir});
        step({"pretrain", "--merges", p("merges.txt"), "--out", p("lm.ckpt"), "--log", p("pre.log"), dir});
        step({"finetune", "--checkpoint", p("lm.ckpt"), "--merges", p("merges.txt"), "--out", p("a.ckpt"), "--log",
              p("ft.log"), corpus});
        step({"rewrite", "--checkpoint", p("a.ckpt"), "--merges", p("merges.txt"), "--out", p("out.txt"), input});
        step({"build-lexicon", "--seeds", seeds_file, "--set", "lexstyle.f_min=1", "--out", p("lexicon.txt"), dir});
        step({"profile", "--lexicon", p("lexicon.txt"), "--out", p("profile.json"), corpus});
        step({"evaluate", "--generated", p("out.txt"), "--source", input, "--target", corpus, "--lexicon",
              p("lexicon.txt"), "--out", p("report.json")});
        std::vector<std::string> files;
        for (const char *f : {"merges.txt", "lm.ckpt", "a.ckpt", "out.txt", "out.txt.meta.json", "lexicon.txt",
                              "profile.json", "report.json", "pre.log"})
            files.push_back(slurp(p(f)));
        return files;
    };
    const auto first = pipeline();
    const auto second = pipeline();
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        EXPECT_FALSE(first[i].empty()) << i;
        EXPECT_EQ(first[i], second[i]) << "output " << i << " differs between runs";
    }

    RunConfig rc;
    for (std::size_t i = 1; i < kTinyModel.size(); ++i) rc.set(std::string_view(kTinyModel[i]));
    rc.set("seed", "5");
    const auto hash = rc.hash();
    EXPECT_NE(first[0].find(hash), std::string::npos) << "merges";
    EXPECT_NE(first[1].find("config_hash=" + hash), std::string::npos) << "lm checkpoint";
    EXPECT_NE(first[2].find("config_hash=" + hash), std::string::npos) << "encdec checkpoint";
    EXPECT_NE(first[4].find(hash), std::string::npos) << "rewrite metadata";
    EXPECT_NE(first[7].find(hash), std::string::npos) << "report";
    EXPECT_EQ(std::count(first[8].begin(), first[8].end(), '\n'), 2) << "two evaluations logged";
}

TEST(Cli, InProcessRunMatchesBinary) {
    TempDir tmp;
    const auto src = kFixtures + "/eval/source.txt";
    const auto out = (tmp.path() / "merges.txt").string();
    const char *argv[] = {"styleforge", "learn-bpe", "--set", "bpe.n_merges=25", "--out", out.c_str(), src.c_str()};
    ASSERT_EQ(cli::run(7, argv), 0);
    const auto r = run_cli({"learn-bpe", "--set", "bpe.n_merges=25", src}, tmp.path());
    EXPECT_EQ(slurp(out), r.out);
}
