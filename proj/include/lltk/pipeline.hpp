#pragma once

#include "lltk/corpus_io.hpp"
#include "lltk/corpus_stats.hpp"
#include "lltk/dedup.hpp"
#include "lltk/quality.hpp"
#include "lltk/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lltk::pipeline {

// One shared configuration drives the dedup, filter, stats and pipeline
// commands; each command just toggles the stages it owns.
struct RunConfig {
    std::vector<std::string> input_globs;
    std::filesystem::path out_dir;
    corpus::ErrorPolicy on_error = corpus::ErrorPolicy::Skip;
    std::optional<corpus::Partition> partition_override;

    unsigned threads = 1;
    bool deterministic = true; // forces sequential shard processing

    bool stage_partition = false;
    bool stage_dedup = false;
    bool stage_ratio = false;
    bool stage_stats = false;
    bool dedup_before_ratio = true;
    bool write_corpus = true;

    quality::PartitionPolicy partition_policy;
    dedup::DedupConfig dedup;
    double ratio_threshold = 8.0;
    bool ratio_document_level = false;

    std::filesystem::path vocab_path;  // with merges_path enables the
    std::filesystem::path merges_path; // tokenizer-backed stages
    std::string tokenizer_id;          // defaults to the vocab file stem
    bool recompute_uniqueness = false;
    std::size_t top_domains = 20;
    std::filesystem::path save_bloom_path; // dedup filter state, when set
};

struct RunResult {
    std::uint64_t documents_in = 0;
    std::uint64_t documents_out = 0;
    std::uint64_t documents_dropped_partition = 0;
    std::uint64_t documents_dropped_dedup = 0;
    std::uint64_t documents_dropped_ratio = 0;

    std::uint64_t malformed_lines = 0;
    std::uint64_t utf8_repairs = 0;
    std::uint64_t missing_quality = 0;

    std::uint64_t dedup_paragraphs_seen = 0;
    std::uint64_t dedup_paragraphs_removed = 0;
    std::uint64_t dedup_paragraphs_exempt_short = 0;
    std::uint64_t dedup_documents_emptied = 0;

    quality::RatioFilterStats ratio;

    std::string config_hash;
    std::filesystem::path corpus_path;
    std::filesystem::path stats_path;
    std::filesystem::path manifest_path;
    std::filesystem::path dedup_audit_path;
    std::filesystem::path ratio_audit_path;
};

// Resolved, validated inputs. Throws std::invalid_argument when a setting is
// unusable (maps to the config-error exit code in the CLI).
std::vector<corpus::ShardRef> resolve_inputs(const RunConfig &cfg);

std::string config_json(const RunConfig &cfg);
std::string config_hash(const RunConfig &cfg);

RunResult run(const RunConfig &cfg);

} // namespace lltk::pipeline
