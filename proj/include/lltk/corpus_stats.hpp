#pragma once

#include "lltk/corpus_io.hpp"
#include "lltk/hash.hpp"
#include "lltk/tokenizer.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace lltk::stats {

enum class Uniqueness { Unique, Duplicate };

// Re-derives uniqueness from content when the incoming dup_flag is not
// trusted: the first document carrying a given 128-bit content hash is
// unique, every later one a duplicate. Sequential by design.
class UniquenessTracker {
  public:
    Uniqueness classify(const corpus::Document &doc);

  private:
    std::unordered_set<Hash128, Hash128Hasher> seen_;
};

inline Uniqueness uniqueness_from_flag(const corpus::Document &doc) {
    return doc.dup_flag ? Uniqueness::Duplicate : Uniqueness::Unique;
}

// Registered host of the document's url, lowercased, with scheme, userinfo,
// port, path and fragment stripped. "(unknown)" when the url is absent or
// carries no host.
std::string host_from_url(const corpus::Document &doc);

struct DomainCount {
    std::string domain;
    std::uint64_t documents = 0;
};

struct PartitionBucket {
    std::uint64_t documents = 0;
    std::uint64_t duplicate_documents = 0;
    std::uint64_t total_tokens = 0;
    std::uint64_t max_doc_tokens = 0;
    // token-count histogram keyed by exact document length, split by
    // uniqueness; sparse so unseen lengths cost nothing
    std::map<std::uint64_t, std::uint64_t> unique_length_bins;
    std::map<std::uint64_t, std::uint64_t> duplicate_length_bins;
};

struct CorpusStats {
    std::map<corpus::Partition, PartitionBucket> partitions;
    std::map<std::string, std::uint64_t> domains;
    std::uint64_t documents = 0;
    std::uint64_t documents_without_url = 0;
    bool has_token_counts = false;
};

// Accumulates per-partition counts, token-length histograms and domain
// tallies. Token counts come from the tokenizer and are skipped when none is
// supplied. merge() is associative, so shard-level collectors combine in any
// grouping to the same totals.
class StatsCollector {
  public:
    explicit StatsCollector(const tok::Tokenizer *tokenizer = nullptr)
        : tokenizer_(tokenizer) {}

    void add(const corpus::Document &doc, Uniqueness uniqueness);
    void merge(const StatsCollector &other);
    const CorpusStats &result() const { return stats_; }

    // Top k domains by document count, ties broken by domain ascending.
    std::vector<DomainCount> top_domains(std::size_t k) const;

  private:
    const tok::Tokenizer *tokenizer_;
    CorpusStats stats_;
};

std::string stats_json(const CorpusStats &stats, const std::vector<DomainCount> &top);

} // namespace lltk::stats
