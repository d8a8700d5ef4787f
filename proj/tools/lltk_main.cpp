#include "lltk/ckpt_avg.hpp"
#include "lltk/corpus_io.hpp"
#include "lltk/io_util.hpp"
#include "lltk/pipeline.hpp"
#include "lltk/progress_stats.hpp"
#include "lltk/tokenizer.hpp"
#include "lltk/train_prep.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using lltk::corpus::Document;
using lltk::corpus::ErrorPolicy;
using lltk::corpus::Partition;
using lltk::corpus::ShardRef;

// JSON config files: top-level keys are long option names without the
// leading dashes; an object nested under a subcommand name addresses that
// subcommand. Command-line flags override config values.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App *, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream &in) const override {
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception &e) {
            throw std::invalid_argument(std::string("config file is not valid JSON: ") +
                                        e.what());
        }
        if (!root.is_object())
            throw std::invalid_argument("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        walk(root, {}, items);
        return items;
    }

  private:
    static std::string scalar(const nlohmann::json &v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
    }

    static void walk(const nlohmann::json &obj, std::vector<std::string> parents,
                     std::vector<CLI::ConfigItem> &items) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (it.value().is_object()) {
                auto nested = parents;
                nested.push_back(it.key());
                walk(it.value(), std::move(nested), items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (it.value().is_array()) {
                for (const auto &v : it.value())
                    item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(it.value()));
            }
            items.push_back(std::move(item));
        }
    }
};

const std::map<std::string, Partition> kPartitionNames = {
    {"head", Partition::Head}, {"middle", Partition::Middle}, {"tail", Partition::Tail}};

const std::map<std::string, ErrorPolicy> kErrorPolicies = {{"skip", ErrorPolicy::Skip},
                                                           {"abort", ErrorPolicy::Abort}};

struct CommonState {
    std::vector<std::string> keep_partitions = {"head", "middle"};
};

void add_input_opts(CLI::App *cmd, lltk::pipeline::RunConfig &cfg) {
    cmd->add_option("--input", cfg.input_globs,
                    "input shard files or globs (.jsonl or .jsonl.gz)")
        ->required();
    cmd->add_option("--on-error", cfg.on_error, "malformed line handling")
        ->transform(CLI::CheckedTransformer(kErrorPolicies, CLI::ignore_case))
        ->default_str("skip");
    cmd->add_option("--partition", cfg.partition_override,
                    "override the partition derived from filenames")
        ->transform(CLI::CheckedTransformer(kPartitionNames, CLI::ignore_case));
    cmd->add_option("--threads", cfg.threads, "worker threads (shard-level)")
        ->check(CLI::Range(1u, 256u))
        ->capture_default_str();
    cmd->add_flag("--deterministic", cfg.deterministic,
                  "force sequential single-pass processing");
}

void add_out_dir(CLI::App *cmd, lltk::pipeline::RunConfig &cfg) {
    cmd->add_option("--out", cfg.out_dir, "output directory")->required();
}

void add_dedup_opts(CLI::App *cmd, lltk::pipeline::RunConfig &cfg) {
    cmd->add_option("--min-words", cfg.dedup.min_words,
                    "paragraphs shorter than this many words are never deduplicated")
        ->capture_default_str();
    cmd->add_option("--bloom-n", cfg.dedup.n_expected, "expected distinct paragraphs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--bloom-fp", cfg.dedup.p_target, "target false-positive rate")
        ->check(CLI::Range(1e-12, 0.5))
        ->capture_default_str();
    cmd->add_option("--seed", cfg.dedup.seed, "bloom filter hash seed")
        ->capture_default_str();
    cmd->add_flag("--normalize-lowercase", cfg.dedup.normalize_lowercase,
                  "lowercase ASCII before hashing paragraph keys");
    cmd->add_flag("--drop-emptied", cfg.dedup.drop_emptied_documents,
                  "drop documents whose every paragraph was removed");
    cmd->add_option("--save-bloom", cfg.save_bloom_path,
                    "write the filter state to this file after the run");
}

void add_tokenizer_opts(CLI::App *cmd, lltk::pipeline::RunConfig &cfg, bool required) {
    auto *vocab = cmd->add_option("--vocab", cfg.vocab_path, "tokenizer vocab JSON");
    auto *merges = cmd->add_option("--merges", cfg.merges_path, "tokenizer merges file");
    if (required) {
        vocab->required();
        merges->required();
    }
    cmd->add_option("--tokenizer-id", cfg.tokenizer_id,
                    "identifier recorded in reports (default: vocab file stem)");
}

void add_ratio_opts(CLI::App *cmd, lltk::pipeline::RunConfig &cfg, CommonState &state) {
    cmd->add_option("--ratio-threshold", cfg.ratio_threshold,
                    "drop units whose tokens-per-word ratio exceeds this")
        ->capture_default_str();
    cmd->add_flag("--document-level", cfg.ratio_document_level,
                  "apply the ratio filter to whole documents instead of paragraphs");
    cmd->add_option("--keep-partitions", state.keep_partitions,
                    "partitions kept by the partition filter")
        ->delimiter(',')
        ->capture_default_str();
}

void apply_keep_partitions(lltk::pipeline::RunConfig &cfg, const CommonState &state) {
    cfg.partition_policy.keep.clear();
    for (const auto &name : state.keep_partitions) {
        auto part = lltk::corpus::partition_from_name(name);
        if (!part.has_value())
            throw std::invalid_argument("unknown partition '" + name +
                                        "' (expected head, middle or tail)");
        cfg.partition_policy.keep.insert(*part);
    }
    if (cfg.partition_policy.keep.empty())
        throw std::invalid_argument("--keep-partitions must keep at least one partition");
}

void print_run_summary(const lltk::pipeline::RunResult &res) {
    std::cout << "documents in " << res.documents_in << ", out " << res.documents_out
              << " (partition -" << res.documents_dropped_partition << ", dedup -"
              << res.documents_dropped_dedup << ", ratio -" << res.documents_dropped_ratio
              << ")\n";
    if (res.malformed_lines)
        std::cout << "skipped " << res.malformed_lines << " malformed lines\n";
    std::cout << "manifest: " << res.manifest_path.string() << "\n";
}

// Pull-stream over every document in the given shards, in shard order.
std::function<std::optional<Document>()> doc_stream(std::vector<ShardRef> refs,
                                                    ErrorPolicy policy) {
    struct State {
        std::vector<ShardRef> refs;
        std::size_t next = 0;
        std::optional<lltk::corpus::ShardReader> reader;
        ErrorPolicy policy;
    };
    auto st = std::make_shared<State>();
    st->refs = std::move(refs);
    st->policy = policy;
    return [st]() -> std::optional<Document> {
        for (;;) {
            if (!st->reader.has_value()) {
                if (st->next >= st->refs.size())
                    return std::nullopt;
                st->reader.emplace(st->refs[st->next++], st->policy);
            }
            if (auto doc = st->reader->next())
                return doc;
            st->reader.reset();
        }
    };
}

std::vector<ShardRef> resolve_ref_list(const std::vector<std::string> &globs,
                                       const std::optional<Partition> &override_part) {
    std::vector<ShardRef> refs;
    for (const auto &pattern : globs)
        for (const auto &path : lltk::io::expand_glob(pattern))
            refs.push_back(lltk::corpus::make_shard_ref(path, override_part));
    if (refs.empty())
        throw std::invalid_argument("no input file matches the given patterns");
    return refs;
}

lltk::tok::ByteBpeModel load_tokenizer(const lltk::pipeline::RunConfig &cfg) {
    if (cfg.vocab_path.empty() || cfg.merges_path.empty())
        throw std::invalid_argument("--vocab and --merges are required here");
    auto model = lltk::tok::ByteBpeModel::load(cfg.vocab_path, cfg.merges_path);
    model.set_id(cfg.tokenizer_id.empty() ? cfg.vocab_path.stem().string()
                                          : cfg.tokenizer_id);
    return model;
}

void write_json(const std::filesystem::path &path, const nlohmann::json &j) {
    lltk::io::write_file_atomic(path, j.dump(2) + "\n");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"corpus curation and training-analysis toolkit"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    // Config files are read by the top-level parser only, so --config must
    // come before the subcommand name.
    app.set_config("--config", "",
                   "JSON config file (give before the subcommand); keys nested under a "
                   "subcommand name set that subcommand's options, flags override");

    // Subcommand state lives here so callbacks can bind references.
    auto stats_cfg = std::make_shared<lltk::pipeline::RunConfig>();
    auto dedup_cfg = std::make_shared<lltk::pipeline::RunConfig>();
    auto filter_cfg = std::make_shared<lltk::pipeline::RunConfig>();
    auto filter_state = std::make_shared<CommonState>();
    auto pipe_cfg = std::make_shared<lltk::pipeline::RunConfig>();
    auto pipe_state = std::make_shared<CommonState>();

    // stats
    {
        CLI::App *cmd = app.add_subcommand(
            "stats", "corpus statistics: partitions, token lengths, domains");
        add_input_opts(cmd, *stats_cfg);
        add_out_dir(cmd, *stats_cfg);
        add_tokenizer_opts(cmd, *stats_cfg, false);
        cmd->add_flag("--recompute-uniqueness", stats_cfg->recompute_uniqueness,
                      "re-derive duplicate flags from content hashes (sequential)");
        cmd->add_option("--top-domains", stats_cfg->top_domains, "domains to report")
            ->capture_default_str();
        cmd->callback([stats_cfg] {
            stats_cfg->stage_stats = true;
            stats_cfg->write_corpus = false;
            print_run_summary(lltk::pipeline::run(*stats_cfg));
        });
    }

    // dedup
    {
        CLI::App *cmd =
            app.add_subcommand("dedup", "remove repeated paragraphs with a bloom filter");
        add_input_opts(cmd, *dedup_cfg);
        add_out_dir(cmd, *dedup_cfg);
        add_dedup_opts(cmd, *dedup_cfg);
        cmd->callback([dedup_cfg] {
            dedup_cfg->stage_dedup = true;
            auto res = lltk::pipeline::run(*dedup_cfg);
            std::cout << "paragraphs seen " << res.dedup_paragraphs_seen << ", removed "
                      << res.dedup_paragraphs_removed << ", short-exempt "
                      << res.dedup_paragraphs_exempt_short << "\n";
            print_run_summary(res);
        });
    }

    // filter
    {
        CLI::App *cmd = app.add_subcommand(
            "filter", "partition selection plus token-to-word ratio filtering");
        add_input_opts(cmd, *filter_cfg);
        add_out_dir(cmd, *filter_cfg);
        add_tokenizer_opts(cmd, *filter_cfg, true);
        add_ratio_opts(cmd, *filter_cfg, *filter_state);
        cmd->callback([filter_cfg, filter_state] {
            apply_keep_partitions(*filter_cfg, *filter_state);
            filter_cfg->stage_partition = true;
            filter_cfg->stage_ratio = true;
            auto res = lltk::pipeline::run(*filter_cfg);
            std::cout << "ratio removed " << res.ratio.paragraphs_removed << " of "
                      << res.ratio.paragraphs_seen << " paragraphs\n";
            print_run_summary(res);
        });
    }

    // pipeline
    {
        CLI::App *cmd = app.add_subcommand(
            "pipeline", "dedup, ratio filter and stats in one pass");
        add_input_opts(cmd, *pipe_cfg);
        add_out_dir(cmd, *pipe_cfg);
        add_dedup_opts(cmd, *pipe_cfg);
        add_tokenizer_opts(cmd, *pipe_cfg, false);
        add_ratio_opts(cmd, *pipe_cfg, *pipe_state);
        cmd->add_flag("--recompute-uniqueness", pipe_cfg->recompute_uniqueness,
                      "re-derive duplicate flags from content hashes (sequential)");
        cmd->add_option("--top-domains", pipe_cfg->top_domains, "domains to report")
            ->capture_default_str();
        auto order = std::make_shared<std::string>("dedup-first");
        cmd->add_option("--order", *order, "stage order: dedup-first or ratio-first")
            ->check(CLI::IsMember({"dedup-first", "ratio-first"}))
            ->capture_default_str();
        auto skip_dedup = std::make_shared<bool>(false);
        auto skip_ratio = std::make_shared<bool>(false);
        auto skip_stats = std::make_shared<bool>(false);
        cmd->add_flag("--skip-dedup", *skip_dedup, "leave duplicates in place");
        cmd->add_flag("--skip-ratio", *skip_ratio, "skip the ratio filter");
        cmd->add_flag("--skip-stats", *skip_stats, "skip the statistics report");
        cmd->callback([pipe_cfg, pipe_state, order, skip_dedup, skip_ratio, skip_stats] {
            apply_keep_partitions(*pipe_cfg, *pipe_state);
            pipe_cfg->stage_partition = true;
            pipe_cfg->stage_dedup = !*skip_dedup;
            pipe_cfg->stage_ratio = !*skip_ratio;
            pipe_cfg->stage_stats = !*skip_stats;
            pipe_cfg->dedup_before_ratio = *order == "dedup-first";
            print_run_summary(lltk::pipeline::run(*pipe_cfg));
        });
    }

    // train-tokenizer
    {
        auto cfg = std::make_shared<lltk::pipeline::RunConfig>();
        auto vocab_size = std::make_shared<std::uint32_t>(32000);
        auto max_bytes = std::make_shared<std::uint64_t>(1ull << 30);
        auto specials = std::make_shared<std::vector<std::string>>(
            std::vector<std::string>{"<unk>", "<s>", "</s>"});
        CLI::App *cmd =
            app.add_subcommand("train-tokenizer", "train a byte-level BPE tokenizer");
        add_input_opts(cmd, *cfg);
        add_out_dir(cmd, *cfg);
        cmd->add_option("--vocab-size", *vocab_size, "total vocabulary size")
            ->check(CLI::Range(259u, 1u << 20))
            ->capture_default_str();
        cmd->add_option("--max-train-bytes", *max_bytes,
                        "stop ingesting documents once this many bytes were consumed")
            ->capture_default_str();
        cmd->add_option("--specials", *specials, "special tokens, in id order")
            ->capture_default_str();
        cmd->callback([cfg, vocab_size, max_bytes, specials] {
            auto refs = resolve_ref_list(cfg->input_globs, cfg->partition_override);
            lltk::tok::BpeTrainer trainer;
            auto stream = doc_stream(refs, cfg->on_error);
            std::uint64_t documents = 0;
            while (auto doc = stream()) {
                if (trainer.corpus_bytes() + doc->raw_content.size() > *max_bytes)
                    break;
                trainer.add_document(*doc);
                ++documents;
            }
            lltk::tok::TrainConfig tc;
            tc.vocab_size = *vocab_size;
            tc.specials = *specials;
            tc.max_corpus_bytes = *max_bytes;
            auto model = trainer.train(tc);
            std::filesystem::create_directories(cfg->out_dir);
            const auto vocab_path = cfg->out_dir / "vocab.json";
            const auto merges_path = cfg->out_dir / "merges.txt";
            model.save(vocab_path, merges_path);
            nlohmann::json manifest;
            manifest["documents"] = documents;
            manifest["corpus_bytes"] = trainer.corpus_bytes();
            manifest["vocab_size"] = model.vocab_size();
            manifest["merges"] = model.merge_count();
            manifest["specials"] = *specials;
            manifest["vocab"] = vocab_path.string();
            manifest["merges_file"] = merges_path.string();
            write_json(cfg->out_dir / "tokenizer_manifest.json", manifest);
            std::cout << "trained " << model.merge_count() << " merges over " << documents
                      << " documents (" << trainer.corpus_bytes() << " bytes)\n";
        });
    }

    // fertility
    {
        auto cfg = std::make_shared<lltk::pipeline::RunConfig>();
        auto sample_id = std::make_shared<std::string>();
        auto per_doc = std::make_shared<bool>(false);
        auto out_file = std::make_shared<std::filesystem::path>();
        CLI::App *cmd =
            app.add_subcommand("fertility", "tokens-per-word ratio of a tokenizer");
        add_input_opts(cmd, *cfg);
        add_tokenizer_opts(cmd, *cfg, true);
        cmd->add_option("--out", *out_file, "write the report JSON here");
        cmd->add_option("--sample-id", *sample_id, "label recorded in the report");
        cmd->add_flag("--per-document-mean", *per_doc,
                      "average per-document ratios instead of the corpus ratio");
        cmd->callback([cfg, sample_id, per_doc, out_file] {
            auto refs = resolve_ref_list(cfg->input_globs, cfg->partition_override);
            auto model = load_tokenizer(*cfg);
            auto rep = lltk::tok::fertility(model, doc_stream(refs, cfg->on_error),
                                            *sample_id, *per_doc);
            nlohmann::json j;
            j["tokenizer_id"] = rep.tokenizer_id;
            j["sample_id"] = rep.sample_id;
            j["word_count"] = rep.word_count;
            j["token_count"] = rep.token_count;
            j["fertility"] = rep.fertility;
            j["per_document_mean"] = rep.per_document_mean;
            if (!out_file->empty())
                write_json(*out_file, j);
            std::cout << "fertility " << rep.fertility << " (" << rep.token_count
                      << " tokens / " << rep.word_count << " words)\n";
        });
    }

    // token-freq
    {
        auto cfg = std::make_shared<lltk::pipeline::RunConfig>();
        auto top = std::make_shared<std::size_t>(50);
        auto out_file = std::make_shared<std::filesystem::path>();
        CLI::App *cmd =
            app.add_subcommand("token-freq", "most frequent tokens over a corpus");
        add_input_opts(cmd, *cfg);
        add_tokenizer_opts(cmd, *cfg, true);
        cmd->add_option("--out", *out_file, "write the report JSON here");
        cmd->add_option("--top", *top, "tokens to report")->capture_default_str();
        cmd->callback([cfg, top, out_file] {
            auto refs = resolve_ref_list(cfg->input_globs, cfg->partition_override);
            auto model = load_tokenizer(*cfg);
            auto rep = lltk::tok::token_frequency(model, doc_stream(refs, cfg->on_error), *top);
            nlohmann::json j;
            j["tokenizer_id"] = model.id();
            j["unique_token_count"] = rep.unique_token_count;
            j["total_tokens"] = rep.total_tokens;
            nlohmann::json arr = nlohmann::json::array();
            for (const auto &[token, count] : rep.top)
                arr.push_back({{"token", token}, {"count", count}});
            j["top"] = std::move(arr);
            if (!out_file->empty())
                write_json(*out_file, j);
            std::cout << rep.unique_token_count << " distinct tokens over "
                      << rep.total_tokens << " total\n";
        });
    }

    // pack
    {
        auto cfg = std::make_shared<lltk::pipeline::RunConfig>();
        auto pack_cfg = std::make_shared<lltk::pack::PackConfig>();
        auto seed = std::make_shared<std::int64_t>(-1);
        auto verify = std::make_shared<bool>(false);
        CLI::App *cmd = app.add_subcommand(
            "pack", "pack tokenized documents into fixed-length training sequences");
        add_input_opts(cmd, *cfg);
        add_out_dir(cmd, *cfg);
        add_tokenizer_opts(cmd, *cfg, true);
        cmd->add_option("--seq-len", pack_cfg->seq_len, "tokens per training sequence")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--separator-id", pack_cfg->separator_id,
                        "token id appended after every document")
            ->capture_default_str();
        cmd->add_option("--sequences-per-shard", pack_cfg->sequences_per_shard,
                        "rows per output shard file")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--seed", *seed,
                        "shuffle documents with this seed; omit to keep input order")
            ->check(CLI::NonNegativeNumber);
        cmd->add_flag("--verify-replay", *verify,
                      "replay the data-order log and compare against the shards");
        cmd->callback([cfg, pack_cfg, seed, verify] {
            auto refs = resolve_ref_list(cfg->input_globs, cfg->partition_override);
            auto model = load_tokenizer(*cfg);
            if (*seed >= 0)
                pack_cfg->shuffle_seed = static_cast<std::uint64_t>(*seed);

            std::vector<Document> docs;
            auto stream = doc_stream(refs, cfg->on_error);
            while (auto doc = stream())
                docs.push_back(std::move(*doc));

            auto res = lltk::pack::pack(docs, model, *pack_cfg);
            std::filesystem::create_directories(cfg->out_dir);
            std::vector<std::string> shard_names;
            for (std::size_t i = 0; i < res.shards.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "shard_%05zu.llpk", i);
                lltk::pack::save_shard(res.shards[i], res.seq_len, cfg->out_dir / name);
                shard_names.emplace_back(name);
            }
            lltk::pack::save_log(res.log, cfg->out_dir / "data_order.jsonl",
                                 cfg->out_dir / "data_order_header.json");

            if (*verify) {
                auto replayed =
                    lltk::pack::replay(res.log, docs, model, pack_cfg->separator_id);
                std::vector<std::uint32_t> flat;
                for (const auto &s : res.shards)
                    flat.insert(flat.end(), s.begin(), s.end());
                if (replayed != flat)
                    throw std::runtime_error("replay does not match the packed shards");
                std::cout << "replay verified: " << res.log.sequences << " sequences\n";
            }

            nlohmann::json manifest;
            manifest["sequences"] = res.log.sequences;
            manifest["seq_len"] = res.log.seq_len;
            manifest["dropped_tail_tokens"] = res.log.dropped_tail_tokens;
            manifest["tokenizer_id"] = res.log.tokenizer_id;
            manifest["corpus_manifest_hash"] = res.log.corpus_manifest_hash;
            manifest["seed"] = pack_cfg->shuffle_seed.has_value()
                                   ? nlohmann::json(*pack_cfg->shuffle_seed)
                                   : nlohmann::json();
            manifest["shards"] = shard_names;
            write_json(cfg->out_dir / "pack_manifest.json", manifest);
            std::cout << "packed " << res.log.sequences << " sequences of "
                      << res.log.seq_len << " tokens, dropped "
                      << res.log.dropped_tail_tokens << " tail tokens\n";
        });
    }

    // progress
    {
        auto scores = std::make_shared<std::filesystem::path>();
        auto out_dir = std::make_shared<std::filesystem::path>();
        CLI::App *cmd = app.add_subcommand(
            "progress", "checkpoint-progress statistics over a score table");
        cmd->add_option("--input", *scores, "score table CSV (task,<step>,<step>,...)")
            ->required();
        cmd->add_option("--out", *out_dir, "output directory")->required();
        cmd->callback([scores, out_dir] {
            const auto table = lltk::pstats::load_score_csv(*scores);
            std::filesystem::create_directories(*out_dir);

            std::string corr = "task,n,spearman_r,p,p_method,stars\n";
            for (std::size_t row = 0; row < table.tasks.size(); ++row) {
                corr += table.tasks[row];
                try {
                    auto c = lltk::pstats::task_progress_correlation(table, row);
                    char buf[128];
                    std::snprintf(buf, sizeof buf, ",%zu,%.6f,%.6g,%s,%s\n", c.n, c.r, c.p,
                                  c.exact_p ? "exact" : "t-approx",
                                  lltk::pstats::stars_for_p(c.p).c_str());
                    corr += buf;
                } catch (const std::invalid_argument &) {
                    corr += ",,,,undefined,\n";
                }
            }
            lltk::io::write_file_atomic(*out_dir / "correlations.csv", corr);

            nlohmann::json anova_json;
            std::vector<std::vector<double>> groups(table.checkpoints.size());
            std::size_t complete = 0;
            for (std::size_t row = 0; row < table.tasks.size(); ++row) {
                bool full = true;
                for (const auto &cell : table.cells[row])
                    full = full && cell.has_value();
                if (!full)
                    continue;
                ++complete;
                for (std::size_t c = 0; c < table.checkpoints.size(); ++c)
                    groups[c].push_back(*table.cells[row][c]);
            }
            if (complete >= 2 && table.checkpoints.size() >= 2) {
                auto a = lltk::pstats::anova(groups);
                anova_json["f"] = a.f;
                anova_json["p"] = a.p;
                anova_json["df_between"] = a.df_between;
                anova_json["df_within"] = a.df_within;
                anova_json["complete_tasks"] = complete;
                anova_json["stars"] = lltk::pstats::stars_for_p(a.p);
            } else {
                anova_json["skipped"] = "fewer than two complete task rows";
            }
            write_json(*out_dir / "anova.json", anova_json);

            lltk::io::write_file_atomic(
                *out_dir / "pairwise_ttests.csv",
                lltk::pstats::pairwise_csv(lltk::pstats::pairwise_ttests(table)));

            auto plateau = lltk::pstats::find_plateau(table);
            nlohmann::json pj;
            pj["checkpoint"] = plateau.checkpoint;
            pj["found"] = plateau.found;
            pj["note"] = plateau.note;
            write_json(*out_dir / "plateau.json", pj);
            std::cout << (plateau.found ? "plateau at checkpoint " : "no plateau; last checkpoint ")
                      << plateau.checkpoint << " (" << plateau.note << ")\n";
        });
    }

    // avg-ckpt
    {
        auto inputs = std::make_shared<std::vector<std::string>>();
        auto out_file = std::make_shared<std::filesystem::path>();
        CLI::App *cmd = app.add_subcommand(
            "avg-ckpt", "element-wise mean of checkpoint weight containers");
        cmd->add_option("--input", *inputs,
                        "weight containers (.llwc files or manifest directories)")
            ->required();
        cmd->add_option("--out", *out_file, "output container file")->required();
        cmd->callback([inputs, out_file] {
            std::vector<lltk::ckpt::WeightContainer> containers;
            for (const auto &pattern : *inputs) {
                for (const auto &path : lltk::io::expand_glob(pattern)) {
                    containers.push_back(std::filesystem::is_directory(path)
                                             ? lltk::ckpt::load_manifest_dir(path)
                                             : lltk::ckpt::load_container(path));
                }
            }
            if (containers.empty())
                throw std::invalid_argument("no input checkpoint matches the given patterns");
            auto avg = lltk::ckpt::average(containers);
            lltk::ckpt::save_container(avg, *out_file);
            std::cout << "averaged " << containers.size() << " checkpoints ("
                      << avg.tensors.size() << " tensors) into " << out_file->string()
                      << "\n";
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
