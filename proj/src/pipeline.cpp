#include "lltk/pipeline.hpp"

#include "lltk/bloom.hpp"
#include "lltk/hash.hpp"
#include "lltk/io_util.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace lltk::pipeline {

namespace {

std::string hash_hex(std::string_view payload) {
    const Hash128 h = hash128(payload);
    char hex[33];
    std::snprintf(hex, sizeof hex, "%016llx%016llx", static_cast<unsigned long long>(h.hi),
                  static_cast<unsigned long long>(h.lo));
    return std::string(hex, 32);
}

nlohmann::json dedup_audit_json(const dedup::RemovalAudit &a) {
    nlohmann::json j;
    j["doc_id"] = a.doc_id;
    j["paragraph_index"] = a.paragraph_index;
    j["reason"] = a.reason;
    j["snippet"] = a.snippet;
    return j;
}

nlohmann::json ratio_audit_json(const quality::FilterAudit &a) {
    nlohmann::json j;
    j["doc_id"] = a.doc_id;
    j["paragraph_index"] = a.paragraph_index;
    j["reason"] = a.reason;
    if (a.ratio.has_value())
        j["ratio"] = *a.ratio;
    return j;
}

struct ShardWork {
    std::string corpus_lines;
    std::string dedup_audit_lines;
    std::string ratio_audit_lines;
    corpus::ShardReadStats read;
    quality::RatioFilterStats ratio;
    std::uint64_t documents_in = 0;
    std::uint64_t documents_out = 0;
    std::uint64_t dropped_partition = 0;
    std::uint64_t dropped_dedup = 0;
    std::uint64_t dropped_ratio = 0;
};

} // namespace

std::vector<corpus::ShardRef> resolve_inputs(const RunConfig &cfg) {
    if (cfg.input_globs.empty())
        throw std::invalid_argument("no input given");
    if (cfg.out_dir.empty())
        throw std::invalid_argument("no output directory given");
    if (cfg.threads < 1)
        throw std::invalid_argument("thread count must be at least 1");
    if (cfg.stage_ratio && (cfg.vocab_path.empty() || cfg.merges_path.empty()))
        throw std::invalid_argument("the ratio filter needs --vocab and --merges");
    if (cfg.ratio_threshold <= 0.0)
        throw std::invalid_argument("ratio threshold must be positive");
    if (cfg.recompute_uniqueness && !cfg.deterministic && cfg.threads > 1)
        throw std::invalid_argument("uniqueness recompute is order-sensitive; run sequentially");

    std::vector<corpus::ShardRef> refs;
    for (const auto &pattern : cfg.input_globs) {
        for (const auto &path : io::expand_glob(pattern))
            refs.push_back(corpus::make_shard_ref(path, cfg.partition_override));
    }
    if (refs.empty())
        throw std::invalid_argument("no input file matches the given patterns");
    return refs;
}

std::string config_json(const RunConfig &cfg) {
    nlohmann::json j;
    j["input_globs"] = cfg.input_globs;
    j["out_dir"] = cfg.out_dir.string();
    j["on_error"] = cfg.on_error == corpus::ErrorPolicy::Skip ? "skip" : "abort";
    j["partition_override"] = cfg.partition_override.has_value()
                                  ? nlohmann::json(corpus::partition_name(*cfg.partition_override))
                                  : nlohmann::json();
    j["threads"] = cfg.threads;
    j["deterministic"] = cfg.deterministic;
    j["stage_partition"] = cfg.stage_partition;
    j["stage_dedup"] = cfg.stage_dedup;
    j["stage_ratio"] = cfg.stage_ratio;
    j["stage_stats"] = cfg.stage_stats;
    j["dedup_before_ratio"] = cfg.dedup_before_ratio;
    j["write_corpus"] = cfg.write_corpus;
    nlohmann::json keep = nlohmann::json::array();
    for (auto part : cfg.partition_policy.keep)
        keep.push_back(corpus::partition_name(part));
    j["keep_partitions"] = std::move(keep);
    j["dedup_min_words"] = cfg.dedup.min_words;
    j["dedup_normalize_lowercase"] = cfg.dedup.normalize_lowercase;
    j["dedup_drop_emptied"] = cfg.dedup.drop_emptied_documents;
    j["bloom_n"] = cfg.dedup.n_expected;
    j["bloom_fp"] = cfg.dedup.p_target;
    j["seed"] = cfg.dedup.seed;
    j["ratio_threshold"] = cfg.ratio_threshold;
    j["ratio_document_level"] = cfg.ratio_document_level;
    j["vocab"] = cfg.vocab_path.string();
    j["merges"] = cfg.merges_path.string();
    j["tokenizer_id"] = cfg.tokenizer_id;
    j["recompute_uniqueness"] = cfg.recompute_uniqueness;
    j["top_domains"] = cfg.top_domains;
    j["save_bloom"] = cfg.save_bloom_path.string();
    return j.dump();
}

std::string config_hash(const RunConfig &cfg) { return hash_hex(config_json(cfg)); }

RunResult run(const RunConfig &cfg) {
    const std::vector<corpus::ShardRef> refs = resolve_inputs(cfg);

    std::optional<tok::ByteBpeModel> tokenizer;
    if (!cfg.vocab_path.empty() && !cfg.merges_path.empty()) {
        tokenizer = tok::ByteBpeModel::load(cfg.vocab_path, cfg.merges_path);
        tokenizer->set_id(cfg.tokenizer_id.empty() ? cfg.vocab_path.stem().string()
                                                   : cfg.tokenizer_id);
    }

    std::optional<dedup::BloomFilter> filter;
    dedup::DedupReport dedup_report;
    if (cfg.stage_dedup)
        filter.emplace(cfg.dedup.n_expected, cfg.dedup.p_target, cfg.dedup.seed);

    const unsigned threads =
        cfg.deterministic
            ? 1u
            : std::max<unsigned>(
                  1u, static_cast<unsigned>(std::min<std::size_t>(cfg.threads, refs.size())));

    std::vector<ShardWork> work(refs.size());
    std::vector<stats::StatsCollector> collectors(
        refs.size(), stats::StatsCollector(tokenizer ? &*tokenizer : nullptr));
    stats::UniquenessTracker uniqueness; // only touched when sequential

    auto process_shard = [&](std::size_t si) {
        const corpus::ShardRef &ref = refs[si];
        ShardWork &w = work[si];
        stats::StatsCollector &collector = collectors[si];

        std::optional<dedup::ParagraphDeduper> deduper;
        if (cfg.stage_dedup)
            deduper.emplace(cfg.dedup, *filter, dedup_report,
                            [&](const dedup::RemovalAudit &a) {
                                w.dedup_audit_lines += dedup_audit_json(a).dump();
                                w.dedup_audit_lines += '\n';
                            });

        quality::AuditSink ratio_audit = [&](const quality::FilterAudit &a) {
            w.ratio_audit_lines += ratio_audit_json(a).dump();
            w.ratio_audit_lines += '\n';
        };
        quality::RatioFilterConfig ratio_cfg;
        ratio_cfg.threshold = cfg.ratio_threshold;
        ratio_cfg.document_level = cfg.ratio_document_level;

        corpus::ShardReader reader(ref, cfg.on_error);
        while (auto doc = reader.next()) {
            ++w.documents_in;

            if (cfg.stage_partition &&
                !quality::partition_filter(*doc, cfg.partition_policy, ratio_audit)) {
                ++w.dropped_partition;
                continue;
            }

            bool alive = true;
            for (int round = 0; round < 2 && alive; ++round) {
                const bool do_dedup = cfg.dedup_before_ratio ? round == 0 : round == 1;
                if (do_dedup) {
                    if (deduper && !deduper->process(*doc)) {
                        ++w.dropped_dedup;
                        alive = false;
                    }
                } else if (cfg.stage_ratio &&
                           !quality::apply_ratio_filter(*doc, *tokenizer, ratio_cfg, w.ratio,
                                                        ratio_audit)) {
                    ++w.dropped_ratio;
                    alive = false;
                }
            }
            if (!alive)
                continue;

            if (cfg.stage_stats) {
                const stats::Uniqueness u = cfg.recompute_uniqueness
                                                ? uniqueness.classify(*doc)
                                                : stats::uniqueness_from_flag(*doc);
                collector.add(*doc, u);
            }
            if (cfg.write_corpus) {
                w.corpus_lines += corpus::document_to_jsonl(*doc);
                w.corpus_lines += '\n';
            }
            ++w.documents_out;
        }
        w.read = reader.stats();
    };

    if (threads == 1) {
        for (std::size_t si = 0; si < refs.size(); ++si)
            process_shard(si);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::mutex error_mutex;
        std::string first_error;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t si = next.fetch_add(1);
                    if (si >= refs.size())
                        return;
                    try {
                        process_shard(si);
                    } catch (const std::exception &e) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (first_error.empty())
                            first_error = e.what();
                    }
                }
            });
        }
        for (auto &t : pool)
            t.join();
        if (!first_error.empty())
            throw std::runtime_error(first_error);
    }

    RunResult res;
    res.config_hash = config_hash(cfg);
    stats::StatsCollector merged(tokenizer ? &*tokenizer : nullptr);
    for (std::size_t si = 0; si < refs.size(); ++si) {
        const ShardWork &w = work[si];
        res.documents_in += w.documents_in;
        res.documents_out += w.documents_out;
        res.documents_dropped_partition += w.dropped_partition;
        res.documents_dropped_dedup += w.dropped_dedup;
        res.documents_dropped_ratio += w.dropped_ratio;
        res.malformed_lines += w.read.malformed_lines;
        res.utf8_repairs += w.read.utf8_repairs;
        res.missing_quality += w.read.missing_quality;
        res.ratio.paragraphs_seen += w.ratio.paragraphs_seen;
        res.ratio.paragraphs_removed += w.ratio.paragraphs_removed;
        res.ratio.paragraphs_undefined += w.ratio.paragraphs_undefined;
        res.ratio.documents_removed += w.ratio.documents_removed;
        res.ratio.documents_emptied += w.ratio.documents_emptied;
        merged.merge(collectors[si]);
    }
    res.dedup_paragraphs_seen = dedup_report.paragraphs_seen.load();
    res.dedup_paragraphs_removed = dedup_report.paragraphs_removed.load();
    res.dedup_paragraphs_exempt_short = dedup_report.paragraphs_exempt_short.load();
    res.dedup_documents_emptied = dedup_report.documents_emptied.load();

    std::filesystem::create_directories(cfg.out_dir);

    if (cfg.write_corpus) {
        io::AtomicFileWriter w(cfg.out_dir / "corpus.jsonl");
        for (const auto &shard : work)
            w.write(shard.corpus_lines);
        w.commit();
        res.corpus_path = cfg.out_dir / "corpus.jsonl";
    }
    if (cfg.stage_dedup) {
        io::AtomicFileWriter w(cfg.out_dir / "dedup_audit.jsonl");
        for (const auto &shard : work)
            w.write(shard.dedup_audit_lines);
        w.commit();
        res.dedup_audit_path = cfg.out_dir / "dedup_audit.jsonl";
    }
    if (cfg.stage_ratio || cfg.stage_partition) {
        io::AtomicFileWriter w(cfg.out_dir / "filter_audit.jsonl");
        for (const auto &shard : work)
            w.write(shard.ratio_audit_lines);
        w.commit();
        res.ratio_audit_path = cfg.out_dir / "filter_audit.jsonl";
    }
    if (filter && !cfg.save_bloom_path.empty())
        filter->save(cfg.save_bloom_path);
    if (cfg.stage_stats) {
        res.stats_path = cfg.out_dir / "stats.json";
        io::write_file_atomic(res.stats_path,
                              stats::stats_json(merged.result(), merged.top_domains(cfg.top_domains)));
    }

    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config_json(cfg));
    manifest["config_hash"] = res.config_hash;
    nlohmann::json inputs = nlohmann::json::array();
    for (std::size_t si = 0; si < refs.size(); ++si) {
        nlohmann::json in;
        in["path"] = refs[si].path.string();
        in["snapshot_id"] = refs[si].snapshot_id;
        in["partition"] = corpus::partition_name(refs[si].partition);
        in["documents"] = work[si].read.documents;
        in["malformed_lines"] = work[si].read.malformed_lines;
        in["utf8_repairs"] = work[si].read.utf8_repairs;
        inputs.push_back(std::move(in));
    }
    manifest["inputs"] = std::move(inputs);
    nlohmann::json counters;
    counters["documents_in"] = res.documents_in;
    counters["documents_out"] = res.documents_out;
    counters["documents_dropped_partition"] = res.documents_dropped_partition;
    counters["documents_dropped_dedup"] = res.documents_dropped_dedup;
    counters["documents_dropped_ratio"] = res.documents_dropped_ratio;
    counters["malformed_lines"] = res.malformed_lines;
    counters["utf8_repairs"] = res.utf8_repairs;
    counters["missing_quality"] = res.missing_quality;
    counters["dedup_paragraphs_seen"] = res.dedup_paragraphs_seen;
    counters["dedup_paragraphs_removed"] = res.dedup_paragraphs_removed;
    counters["dedup_paragraphs_exempt_short"] = res.dedup_paragraphs_exempt_short;
    counters["dedup_documents_emptied"] = res.dedup_documents_emptied;
    counters["ratio_paragraphs_seen"] = res.ratio.paragraphs_seen;
    counters["ratio_paragraphs_removed"] = res.ratio.paragraphs_removed;
    counters["ratio_paragraphs_undefined"] = res.ratio.paragraphs_undefined;
    counters["ratio_documents_removed"] = res.ratio.documents_removed;
    counters["ratio_documents_emptied"] = res.ratio.documents_emptied;
    manifest["counters"] = std::move(counters);
    res.manifest_path = cfg.out_dir / "run_manifest.json";
    io::write_file_atomic(res.manifest_path, manifest.dump(2) + "\n");
    return res;
}

} // namespace lltk::pipeline
