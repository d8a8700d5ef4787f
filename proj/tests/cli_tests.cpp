// End-to-end tests that drive the installed CLI binary through std::system.
// LLTK_CLI_PATH is injected by the build so the tests find the executable.

#include "lltk/ckpt_avg.hpp"

#include "fixture_tokenizer.hpp"
#include "testutil.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace lltk;
using testutil::TempDir;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_cli(const std::string &args, const std::filesystem::path &scratch) {
    const auto capture = scratch / "cli_output.txt";
    std::string cmd = std::string(LLTK_CLI_PATH) + " " + args + " > \"" +
                      capture.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    CmdResult res;
    if (raw == -1)
        res.exit_code = -1;
    else if (WIFEXITED(raw))
        res.exit_code = WEXITSTATUS(raw);
    else
        res.exit_code = -2;
    if (std::filesystem::exists(capture))
        res.output = testutil::read_text(capture);
    return res;
}

std::string q(const std::filesystem::path &p) { return "\"" + p.string() + "\""; }

const std::string kLegalBoilerplate =
    "Die Nutzung der im Rahmen des Impressums veroeffentlichten Kontaktdaten ist nicht "
    "gestattet.";

std::filesystem::path write_corpus(const TempDir &tmp,
                                   const std::vector<corpus::Document> &docs) {
    auto dir = tmp / "in";
    testutil::write_gzip(dir / "2014_52_de_head.jsonl.gz", testutil::records(docs));
    return dir;
}

std::vector<corpus::Document> sample_docs(int n, std::uint64_t seed = 11) {
    testutil::Rng rng(seed);
    std::vector<corpus::Document> docs;
    for (int i = 0; i < n; ++i)
        docs.push_back(testutil::make_doc("doc-" + std::to_string(i), rng.text(150),
                                          "https://beispiel.de/" + std::to_string(i),
                                          25.0 + i % 9));
    return docs;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors map to the documented exit codes") {
    TempDir tmp;
    CHECK(run_cli("--help", tmp.path()).exit_code == 0);

    auto help = run_cli("--help", tmp.path());
    CHECK(help.output.find("dedup") != std::string::npos);
    CHECK(help.output.find("pipeline") != std::string::npos);

    CHECK(run_cli("", tmp.path()).exit_code == 2);              // subcommand required
    CHECK(run_cli("dedup", tmp.path()).exit_code == 2);         // --input/--out missing
    CHECK(run_cli("dedup --nope", tmp.path()).exit_code == 2);  // unknown flag
    CHECK(run_cli("filter --input x --out y", tmp.path()).exit_code == 2); // vocab required

    auto missing = run_cli("dedup --input " + q(tmp / "absent*.jsonl") + " --out " +
                               q(tmp / "out"),
                           tmp.path());
    CHECK(missing.exit_code == 2);
    CHECK(missing.output.find("no input file") != std::string::npos);
}

TEST_CASE("runtime failures exit with 1") {
    TempDir tmp;
    testutil::write_gzip(tmp / "in" / "x_head.jsonl.gz",
                         testutil::record_line(testutil::make_doc("ok", "guter text")) +
                             "broken json line\n");
    auto res = run_cli("dedup --input " + q(tmp / "in" / "*.jsonl.gz") + " --out " +
                           q(tmp / "out") + " --on-error abort",
                       tmp.path());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("error:") != std::string::npos);
}

TEST_CASE("dedup removes a repeated boilerplate paragraph and audits it") {
    TempDir tmp;
    auto docs = std::vector<corpus::Document>{
        testutil::make_doc("doc-1", kLegalBoilerplate + "\nEigener inhalt eins zwei drei."),
        testutil::make_doc("doc-2", kLegalBoilerplate + "\nAnderer inhalt vier fuenf sechs."),
    };
    auto in_dir = write_corpus(tmp, docs);
    auto out_dir = tmp / "out";

    auto res = run_cli("dedup --input " + q(in_dir / "*.jsonl.gz") + " --out " + q(out_dir),
                       tmp.path());
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("removed 1") != std::string::npos);

    auto corpus_text = testutil::read_text(out_dir / "corpus.jsonl");
    auto first_break = corpus_text.find('\n');
    auto line1 = corpus_text.substr(0, first_break);
    auto line2 = corpus_text.substr(first_break + 1);
    CHECK(line1.find("Impressums") != std::string::npos);
    CHECK(line2.find("Impressums") == std::string::npos);
    CHECK(line2.find("\"dup_flag\":true") != std::string::npos);
    CHECK(line2.find("Anderer inhalt") != std::string::npos);

    auto audit = nlohmann::json::parse(testutil::read_text(out_dir / "dedup_audit.jsonl"));
    CHECK(audit["doc_id"] == "doc-2");
    CHECK(audit["paragraph_index"] == 0);
    CHECK(audit["reason"] == "duplicate");

    auto manifest = nlohmann::json::parse(testutil::read_text(out_dir / "run_manifest.json"));
    CHECK(manifest["counters"]["dedup_paragraphs_removed"] == 1);
    CHECK(manifest["counters"]["documents_out"] == 2);
}

TEST_CASE("stats over an empty shard reports zero documents") {
    TempDir tmp;
    testutil::write_text(tmp / "in" / "empty_head.jsonl", "");
    auto res = run_cli("stats --input " + q(tmp / "in" / "*.jsonl") + " --out " +
                           q(tmp / "out"),
                       tmp.path());
    REQUIRE(res.exit_code == 0);
    auto stats = nlohmann::json::parse(testutil::read_text(tmp / "out" / "stats.json"));
    CHECK(stats["documents"] == 0);
    CHECK(!std::filesystem::exists(tmp / "out" / "corpus.jsonl"));
}

TEST_CASE("deterministic pipeline runs are byte-identical") {
    TempDir tmp;
    auto in_dir = write_corpus(tmp, sample_docs(25));
    auto model_dir = tmp / "model";
    fixture::fixture_model(model_dir);
    auto out_dir = tmp / "out";

    const std::string cmd = "pipeline --input " + q(in_dir / "*.jsonl.gz") + " --out " +
                            q(out_dir) + " --vocab " + q(model_dir / "vocab.json") +
                            " --merges " + q(model_dir / "merges.txt") +
                            " --ratio-threshold 6 --bloom-n 10000 --bloom-fp 1e-9" +
                            " --deterministic";

    REQUIRE(run_cli(cmd, tmp.path()).exit_code == 0);
    auto corpus1 = testutil::read_text(out_dir / "corpus.jsonl");
    auto stats1 = testutil::read_text(out_dir / "stats.json");
    auto manifest1 = testutil::read_text(out_dir / "run_manifest.json");

    REQUIRE(run_cli(cmd, tmp.path()).exit_code == 0);
    CHECK(testutil::read_text(out_dir / "corpus.jsonl") == corpus1);
    CHECK(testutil::read_text(out_dir / "stats.json") == stats1);
    CHECK(testutil::read_text(out_dir / "run_manifest.json") == manifest1);
}

TEST_CASE("config file values load and flags override them") {
    TempDir tmp;
    auto in_dir = write_corpus(tmp, sample_docs(5));
    auto model_dir = tmp / "model";
    fixture::fixture_model(model_dir);
    testutil::write_text(tmp / "cfg.json",
                         R"({"pipeline": {"ratio-threshold": 3.5, "top-domains": 7}})");

    // --config is a global option, so it goes before the subcommand name.
    const std::string base = "--config " + q(tmp / "cfg.json") + " pipeline --input " +
                             q(in_dir / "*.jsonl.gz") + " --vocab " +
                             q(model_dir / "vocab.json") + " --merges " +
                             q(model_dir / "merges.txt");

    REQUIRE(run_cli(base + " --out " + q(tmp / "out1"), tmp.path()).exit_code == 0);
    auto m1 = nlohmann::json::parse(testutil::read_text(tmp / "out1" / "run_manifest.json"));
    CHECK(m1["config"]["ratio_threshold"] == 3.5);
    CHECK(m1["config"]["top_domains"] == 7);

    REQUIRE(run_cli(base + " --out " + q(tmp / "out2") + " --ratio-threshold 9",
                    tmp.path())
                .exit_code == 0);
    auto m2 = nlohmann::json::parse(testutil::read_text(tmp / "out2" / "run_manifest.json"));
    CHECK(m2["config"]["ratio_threshold"] == 9.0);
    CHECK(m2["config"]["top_domains"] == 7);

    testutil::write_text(tmp / "bad.json", "not json at all");
    CHECK(run_cli("--config " + q(tmp / "bad.json") + " pipeline --input " +
                      q(in_dir / "*.jsonl.gz") + " --out " + q(tmp / "out3"),
                  tmp.path())
              .exit_code == 2);
}

TEST_CASE("tokenizer training, reports, packing and replay chain together") {
    TempDir tmp;
    auto in_dir = write_corpus(tmp, sample_docs(40, 21));
    auto tok_dir = tmp / "tok";

    auto train = run_cli("train-tokenizer --input " + q(in_dir / "*.jsonl.gz") + " --out " +
                             q(tok_dir) + " --vocab-size 300",
                         tmp.path());
    REQUIRE(train.exit_code == 0);
    REQUIRE(std::filesystem::exists(tok_dir / "vocab.json"));
    REQUIRE(std::filesystem::exists(tok_dir / "merges.txt"));
    auto tok_manifest =
        nlohmann::json::parse(testutil::read_text(tok_dir / "tokenizer_manifest.json"));
    CHECK(tok_manifest["documents"] == 40);
    CHECK(tok_manifest["vocab_size"].get<std::uint32_t>() <= 300);

    const std::string tok_args = " --vocab " + q(tok_dir / "vocab.json") + " --merges " +
                                 q(tok_dir / "merges.txt");

    auto fert = run_cli("fertility --input " + q(in_dir / "*.jsonl.gz") + tok_args +
                            " --out " + q(tmp / "fertility.json") + " --sample-id demo",
                        tmp.path());
    REQUIRE(fert.exit_code == 0);
    auto fj = nlohmann::json::parse(testutil::read_text(tmp / "fertility.json"));
    CHECK(fj["sample_id"] == "demo");
    CHECK(fj["fertility"].get<double>() >= 1.0);
    CHECK(fj["word_count"].get<std::uint64_t>() > 0);

    auto freq = run_cli("token-freq --input " + q(in_dir / "*.jsonl.gz") + tok_args +
                            " --out " + q(tmp / "freq.json") + " --top 10",
                        tmp.path());
    REQUIRE(freq.exit_code == 0);
    auto qj = nlohmann::json::parse(testutil::read_text(tmp / "freq.json"));
    CHECK(qj["total_tokens"].get<std::uint64_t>() > 0);
    CHECK(qj["top"].size() <= 10);

    auto pack = run_cli("pack --input " + q(in_dir / "*.jsonl.gz") + tok_args + " --out " +
                            q(tmp / "packed") + " --seq-len 64 --seed 7 --verify-replay",
                        tmp.path());
    REQUIRE(pack.exit_code == 0);
    CHECK(pack.output.find("replay verified") != std::string::npos);
    REQUIRE(std::filesystem::exists(tmp / "packed" / "data_order.jsonl"));
    auto pm = nlohmann::json::parse(testutil::read_text(tmp / "packed" / "pack_manifest.json"));
    CHECK(pm["seq_len"] == 64);
    CHECK(pm["sequences"].get<std::uint64_t>() > 0);
    CHECK(pm["seed"] == 7);
    for (const auto &name : pm["shards"])
        CHECK(std::filesystem::exists(tmp / "packed" / name.get<std::string>()));
}

TEST_CASE("progress reports are written for a score table") {
    TempDir tmp;
    testutil::write_text(tmp / "scores.csv",
                         "task,100000,200000,300000\n"
                         "t1,0.50,0.60,0.61\n"
                         "t2,0.40,0.52,0.54\n"
                         "t3,0.45,0.55,0.56\n"
                         "t4,0.30,0.42,0.44\n");
    auto res = run_cli("progress --input " + q(tmp / "scores.csv") + " --out " +
                           q(tmp / "out"),
                       tmp.path());
    REQUIRE(res.exit_code == 0);

    auto corr = testutil::read_text(tmp / "out" / "correlations.csv");
    CHECK(corr.rfind("task,n,spearman_r,p,p_method,stars\n", 0) == 0);
    CHECK(corr.find("\nt1,") != std::string::npos);
    CHECK(corr.find("\nt4,") != std::string::npos);

    auto anova = nlohmann::json::parse(testutil::read_text(tmp / "out" / "anova.json"));
    CHECK(anova["complete_tasks"] == 4);
    CHECK(anova["df_between"] == 2);

    auto pairwise = testutil::read_text(tmp / "out" / "pairwise_ttests.csv");
    CHECK(pairwise.rfind("checkpoint_a,checkpoint_b,n,t,p,stars\n", 0) == 0);

    auto plateau = nlohmann::json::parse(testutil::read_text(tmp / "out" / "plateau.json"));
    CHECK(plateau.contains("found"));
    CHECK(plateau.contains("checkpoint"));

    CHECK(run_cli("progress --input " + q(tmp / "missing.csv") + " --out " + q(tmp / "o2"),
                  tmp.path())
              .exit_code != 0);
}

TEST_CASE("avg-ckpt averages containers and manifest directories") {
    TempDir tmp;
    ckpt::WeightContainer a;
    a.tensors.push_back({"w", {4}, {1.0f, 2.0f, 3.0f, 4.0f}});
    ckpt::WeightContainer b;
    b.tensors.push_back({"w", {4}, {3.0f, 2.0f, 1.0f, 0.0f}});
    ckpt::save_container(a, tmp / "a.llwc");
    ckpt::save_container(b, tmp / "b.llwc");

    auto res = run_cli("avg-ckpt --input " + q(tmp / "a.llwc") + " --input " +
                           q(tmp / "b.llwc") + " --out " + q(tmp / "avg.llwc"),
                       tmp.path());
    REQUIRE(res.exit_code == 0);
    auto avg = ckpt::load_container(tmp / "avg.llwc");
    REQUIRE(avg.tensors.size() == 1);
    CHECK(avg.tensors[0].data == std::vector<float>{2.0f, 2.0f, 2.0f, 2.0f});

    // a manifest directory works as an input alongside container files
    auto dir = tmp / "ckpt_dir";
    std::vector<float> vals = {5.0f, 6.0f, 7.0f, 8.0f};
    std::string raw(vals.size() * 4, '\0');
    std::memcpy(raw.data(), vals.data(), raw.size());
    testutil::write_text(dir / "w.bin", raw);
    testutil::write_text(dir / "manifest.json",
                         R"({"tensors":[{"name":"w","dims":[4],"file":"w.bin"}]})");

    res = run_cli("avg-ckpt --input " + q(tmp / "a.llwc") + " --input " + q(dir) +
                      " --out " + q(tmp / "avg2.llwc"),
                  tmp.path());
    REQUIRE(res.exit_code == 0);
    auto avg2 = ckpt::load_container(tmp / "avg2.llwc");
    CHECK(avg2.tensors[0].data == std::vector<float>{3.0f, 4.0f, 5.0f, 6.0f});

    CHECK(run_cli("avg-ckpt --input " + q(tmp / "nothing*.llwc") + " --out " +
                      q(tmp / "x.llwc"),
                  tmp.path())
              .exit_code == 2);

    // shape disagreement is a config-style error
    ckpt::WeightContainer c;
    c.tensors.push_back({"w", {2, 2}, {1.0f, 1.0f, 1.0f, 1.0f}});
    ckpt::save_container(c, tmp / "c.llwc");
    CHECK(run_cli("avg-ckpt --input " + q(tmp / "a.llwc") + " --input " + q(tmp / "c.llwc") +
                      " --out " + q(tmp / "y.llwc"),
                  tmp.path())
              .exit_code == 2);
}

} // TEST_SUITE
