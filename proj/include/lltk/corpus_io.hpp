#pragma once

#include "lltk/io_util.hpp"
#include "lltk/text.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lltk::corpus {

enum class Partition { Head, Middle, Tail };

const char *partition_name(Partition p);
std::optional<Partition> partition_from_name(std::string_view name);

struct QualitySignals {
    // CCNet-style language-model perplexity; lower reads closer to the
    // reference corpus. Absent when the crawl record carries no signals.
    std::optional<double> ccnet_perplexity;
};

struct Document {
    std::string doc_id;
    std::string raw_content;
    std::optional<std::string> url;
    QualitySignals quality;
    Partition partition = Partition::Head;
    bool dup_flag = false; // dataset-provided duplicate marker
};

struct Paragraph {
    std::string_view text; // view into the owning document's raw_content
    std::size_t index = 0; // 0-based ordinal within the document
};

struct ShardRef {
    std::filesystem::path path;
    std::string snapshot_id; // e.g. "2014_52" when parseable from the path
    Partition partition = Partition::Head;
};

enum class ErrorPolicy { Skip, Abort };

struct ShardReadStats {
    std::uint64_t documents = 0;
    std::uint64_t malformed_lines = 0;
    std::uint64_t utf8_repairs = 0;
    std::uint64_t missing_quality = 0;
};

struct MalformedLine {
    std::uint64_t line_number = 0;
    std::string reason;
};

// Streams one shard of gzip (or plain) JSON Lines in file order. Single
// consumer; shard-level parallelism runs one reader per shard.
class ShardReader {
  public:
    ShardReader(ShardRef ref, ErrorPolicy on_error);

    // Next document, or nullopt at end of file. Under Abort a malformed line
    // throws std::runtime_error naming the line number; under Skip it is
    // recorded and skipped.
    std::optional<Document> next();

    const ShardReadStats &stats() const { return stats_; }
    const std::vector<MalformedLine> &errors() const { return errors_; }

  private:
    ShardRef ref_;
    ErrorPolicy on_error_;
    io::LineReader lines_;
    ShardReadStats stats_;
    std::vector<MalformedLine> errors_;
    std::string linebuf_;
    std::string repaired_;
};

// Builds a ShardRef from a path: partition from a head/middle/tail filename
// substring (fallback wins if none matches), snapshot id from a YYYY_WW or
// YYYY-WW component when present.
ShardRef make_shard_ref(const std::filesystem::path &path,
                        std::optional<Partition> partition_override = std::nullopt,
                        Partition fallback = Partition::Head);

// Paragraphs are newline-separated segments of raw_content; empty segments
// (blank lines) are dropped and indices count the surviving paragraphs.
std::vector<Paragraph> split_paragraphs(const Document &doc);

inline std::size_t word_count(std::string_view s) { return text::word_count(s); }

// One crawl record as a JSONL line, matching the input schema. Keys are
// emitted in sorted order so output is byte-stable.
std::string document_to_jsonl(const Document &doc);

} // namespace lltk::corpus
