#pragma once

#include "lltk/corpus_io.hpp"
#include "lltk/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lltk::pack {

struct PackConfig {
    std::uint32_t seq_len = 2048;
    std::uint32_t separator_id = 2; // appended after every document
    std::optional<std::uint64_t> shuffle_seed; // document-order shuffle; input order when unset
    std::uint32_t sequences_per_shard = 1u << 14;
};

// One contiguous slice of a document's token stream inside a packed sequence.
struct SpanEntry {
    std::uint64_t global_sequence_index = 0;
    std::string doc_id;
    std::uint64_t token_offset_in_doc = 0;
    std::uint64_t token_span_length = 0;
};

struct DataOrderLog {
    std::optional<std::uint64_t> seed;
    std::uint32_t seq_len = 0;
    std::string tokenizer_id;
    std::string corpus_manifest_hash;
    std::uint64_t sequences = 0;
    std::uint64_t dropped_tail_tokens = 0;
    std::vector<SpanEntry> entries;
};

struct PackResult {
    std::vector<std::vector<std::uint32_t>> shards; // flat rows, seq_len each
    std::uint32_t seq_len = 0;
    DataOrderLog log;
};

// 128-bit hex digest over doc ids and content hashes in input order; replay
// refuses a corpus whose digest differs.
std::string corpus_manifest_hash(const std::vector<corpus::Document> &docs);

// Tokenizes every document, appends the separator, concatenates in input or
// shuffled order, and cuts fixed-length rows. The final partial row is
// dropped and its token count reported. Every kept row is fully described by
// the log entries.
PackResult pack(const std::vector<corpus::Document> &docs, const tok::Tokenizer &tok,
                const PackConfig &cfg);

// Rebuilds the exact packed token stream from the log and the original
// corpus. Throws when the manifest hash, tokenizer id or any span
// disagrees with the corpus.
std::vector<std::uint32_t> replay(const DataOrderLog &log,
                                  const std::vector<corpus::Document> &docs,
                                  const tok::Tokenizer &tok, std::uint32_t separator_id);

// Documents (and their spans) consumed between optimizer steps [step_a,
// step_b): sequence indices [step_a, step_b) * batch_size * seqs_per_step.
std::map<std::string, std::vector<SpanEntry>>
checkpoint_window(const DataOrderLog &log, std::uint64_t step_a, std::uint64_t step_b,
                  std::uint64_t batch_size, std::uint64_t seqs_per_step = 1);

// Deterministic across platforms; used for the document-order shuffle.
class FisherYates {
  public:
    explicit FisherYates(std::uint64_t seed) : state_(seed) {}
    // permutation of 0..n-1
    std::vector<std::uint64_t> permutation(std::uint64_t n);

  private:
    std::uint64_t next();
    std::uint64_t state_;
};

void save_shard(const std::vector<std::uint32_t> &rows, std::uint32_t seq_len,
                const std::filesystem::path &path);
std::pair<std::vector<std::uint32_t>, std::uint32_t>
load_shard(const std::filesystem::path &path);

void save_log(const DataOrderLog &log, const std::filesystem::path &entries_path,
              const std::filesystem::path &header_path);
DataOrderLog load_log(const std::filesystem::path &entries_path,
                      const std::filesystem::path &header_path);

} // namespace lltk::pack
