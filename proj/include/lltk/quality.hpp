#pragma once

#include "lltk/corpus_io.hpp"
#include "lltk/tokenizer.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lltk::quality {

// tokens per word; empty when the text has no words (ratio undefined).
std::optional<double> token_word_ratio(const tok::Tokenizer &tok, std::string_view text);

struct FilterAudit {
    std::string doc_id;
    std::size_t paragraph_index = 0; // 0 for document-level removals
    std::string reason;              // "ratio", "ratio_undefined" or "partition"
    std::optional<double> ratio;     // present iff reason == "ratio"
};

using AuditSink = std::function<void(const FilterAudit &)>;

struct RatioFilterConfig {
    double threshold = 8.0;
    bool document_level = false; // paragraph granularity unless set
};

struct RatioFilterStats {
    std::uint64_t paragraphs_seen = 0;
    std::uint64_t paragraphs_removed = 0;
    std::uint64_t paragraphs_undefined = 0;
    std::uint64_t documents_removed = 0;
    std::uint64_t documents_emptied = 0;
};

// Drops units whose token-to-word ratio exceeds the threshold. An undefined
// ratio (no words) keeps the unit and flags it in the audit. Returns false
// when a document-level filter removes the document or a paragraph-level
// filter empties it.
bool apply_ratio_filter(corpus::Document &doc, const tok::Tokenizer &tok,
                        const RatioFilterConfig &cfg, RatioFilterStats &stats,
                        const AuditSink &audit = nullptr);

struct PartitionPolicy {
    std::set<corpus::Partition> keep = {corpus::Partition::Head, corpus::Partition::Middle};
};

// True when the document's partition is kept; otherwise audits the removal.
bool partition_filter(const corpus::Document &doc, const PartitionPolicy &policy,
                      const AuditSink &audit = nullptr);

struct PerplexitySummary {
    std::uint64_t count = 0;         // documents carrying a perplexity value
    std::uint64_t count_missing = 0; // documents without one
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::array<double, 9> deciles{}; // p10..p90, linear interpolation
};

class PerplexityAccumulator {
  public:
    void add(const corpus::Document &doc);
    void merge(const PerplexityAccumulator &other);
    // Throws when no document carried a value.
    PerplexitySummary summarize() const;

  private:
    std::vector<double> values_;
    std::uint64_t missing_ = 0;
};

} // namespace lltk::quality
