#pragma once

#include "lltk/bloom.hpp"
#include "lltk/corpus_io.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>

namespace lltk::dedup {

struct DedupConfig {
    std::size_t min_words = 3; // shorter paragraphs are exempt from dedup
    bool normalize_lowercase = false;
    bool drop_emptied_documents = false; // default: emit with empty raw_content
    std::uint64_t n_expected = 1'000'000;
    double p_target = 1e-6;
    std::uint64_t seed = 0;
};

struct DedupReport {
    std::atomic<std::uint64_t> paragraphs_seen{0};
    std::atomic<std::uint64_t> paragraphs_removed{0};
    std::atomic<std::uint64_t> paragraphs_exempt_short{0};
    std::atomic<std::uint64_t> documents_emptied{0};
};

struct RemovalAudit {
    std::string doc_id;
    std::size_t paragraph_index = 0;
    std::string reason; // "duplicate"
    std::string snippet; // first 80 bytes of the paragraph (UTF-8 safe cut)
};

using AuditSink = std::function<void(const RemovalAudit &)>;

// Paragraph-level exact dedup against a shared Bloom filter. Paragraphs with
// fewer than min_words words are kept unconditionally and never inserted.
// Sequential single-pass use is deterministic and first-occurrence-wins;
// concurrent use keeps the no-false-negative guarantee but which of two
// racing first occurrences survives is unspecified (at least one does).
class ParagraphDeduper {
  public:
    ParagraphDeduper(DedupConfig cfg, BloomFilter &filter, DedupReport &report,
                     AuditSink audit = nullptr);

    // Rewrites doc.raw_content to its retained paragraphs joined with "\n".
    // Returns false when the document lost all paragraphs and the config says
    // to drop it; the emptied counter is bumped either way.
    bool process(corpus::Document &doc);

    // Normalization applied before hashing: whitespace trim, optional
    // ASCII lowercasing.
    std::string normalize_key(std::string_view paragraph_text) const;

  private:
    DedupConfig cfg_;
    BloomFilter &filter_;
    DedupReport &report_;
    AuditSink audit_;
};

std::string snippet_utf8(std::string_view text, std::size_t max_bytes = 80);

} // namespace lltk::dedup
