#pragma once

#include "lltk/corpus_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lltk::tok {

// Anything that can turn text into token ids. Filters and reports only need
// counts, so test tokenizers (whitespace, per-character) plug in here too.
class Tokenizer {
  public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::uint32_t> encode(std::string_view text) const = 0;
    virtual std::size_t token_count(std::string_view text) const { return encode(text).size(); }
    virtual std::size_t vocab_size() const = 0;
    virtual std::string id() const = 0;
};

// Bijective byte-to-marker alphabet: printable bytes map to themselves, the
// rest to code points 256..322 in byte order (space -> U+0120, newline ->
// U+010A). Token strings are UTF-8 over these markers.
struct ByteAlphabet {
    std::array<std::uint32_t, 256> byte_to_cp{};
    std::unordered_map<std::uint32_t, std::uint8_t> cp_to_byte;

    static const ByteAlphabet &instance();
    std::string marker_string(std::string_view bytes) const;
    // Inverse of marker_string; throws on a code point outside the alphabet.
    std::string bytes_from_markers(std::string_view markers) const;

  private:
    ByteAlphabet();
};

// Pre-token boundaries for BPE: a maximal non-whitespace run forms a word,
// taking one immediately preceding ASCII space with it; any remaining
// whitespace run is its own pre-token. Merges never cross these boundaries.
std::vector<std::string_view> pretokenize(std::string_view text);

struct TrainConfig {
    std::uint32_t vocab_size = 32000;
    std::vector<std::string> specials = {"<unk>", "<s>", "</s>"};
    std::uint64_t max_corpus_bytes = 1ull << 30;
};

class ByteBpeModel final : public Tokenizer {
  public:
    // Token id layout: specials 0..s-1, byte tokens s..s+255 (by byte
    // value), then one id per merge in training order.
    std::vector<std::uint32_t> encode(std::string_view text) const override;
    std::size_t vocab_size() const override { return token_strings_.size(); }
    std::string id() const override { return model_id_; }
    void set_id(std::string id) { model_id_ = std::move(id); }

    // Inverse of encode; special ids decode to nothing. Throws on an id
    // outside the vocabulary.
    std::string decode(std::span<const std::uint32_t> ids) const;

    std::size_t special_count() const { return special_count_; }
    std::size_t merge_count() const { return merges_.size(); }
    const std::vector<std::string> &token_strings() const { return token_strings_; }
    std::optional<std::uint32_t> token_id(std::string_view token) const;

    // Merges file: one "left right" line per merge, marker form, training
    // order. Vocab file: JSON object token -> id.
    std::string merges_text() const;
    std::string vocab_json() const;
    void save(const std::filesystem::path &vocab_path,
              const std::filesystem::path &merges_path) const;
    static ByteBpeModel load(const std::filesystem::path &vocab_path,
                             const std::filesystem::path &merges_path);

    // Model with zero merges: every byte encodes to its base token.
    static ByteBpeModel base(std::vector<std::string> specials = {"<unk>", "<s>", "</s>"});

  private:
    friend class BpeTrainer;
    void index_merges();
    void encode_pretoken(std::string_view bytes, std::vector<std::uint32_t> &out) const;

    std::size_t special_count_ = 0;
    std::vector<std::string> token_strings_; // marker form; specials literal
    std::vector<bool> is_special_;
    std::array<std::uint32_t, 256> byte_ids_{};
    std::vector<std::pair<std::uint32_t, std::uint32_t>> merges_;
    std::unordered_map<std::string, std::uint32_t> vocab_;
    struct MergeRule {
        std::uint32_t rank;
        std::uint32_t merged_id;
    };
    std::unordered_map<std::uint64_t, MergeRule> merge_rules_;
    std::string model_id_ = "bpe";
};

// Greedy BPE trainer. Word-frequency collection is chunk-parallel (counts
// merge associatively); merge selection and application are sequential and
// deterministic: most frequent pair wins, ties broken by the
// lexicographically smallest (left, right) marker-string pair, and a pair
// whose concatenation already names a token is skipped.
class BpeTrainer {
  public:
    void add_text(std::string_view text);
    void add_document(const corpus::Document &doc) { add_text(doc.raw_content); }
    void merge_from(BpeTrainer &&other);

    std::uint64_t corpus_bytes() const { return corpus_bytes_; }

    // Runs vocab_size - 256 - |specials| merge rounds, stopping early when no
    // pair occurs twice. Throws if the corpus is empty or the budget is
    // negative.
    ByteBpeModel train(const TrainConfig &cfg) const;

  private:
    std::unordered_map<std::string, std::uint64_t> word_counts_;
    std::uint64_t corpus_bytes_ = 0;
};

struct FertilityReport {
    std::string tokenizer_id;
    std::string sample_id;
    std::uint64_t word_count = 0;
    std::uint64_t token_count = 0;
    double fertility = 0.0;
    bool per_document_mean = false; // corpus ratio unless flagged
};

// Corpus-level fertility: sum of token counts over sum of word counts.
// per_document_mean averages the per-document ratios instead (documents with
// zero words are skipped). Throws when no words are seen.
FertilityReport fertility(const Tokenizer &tok,
                          const std::function<std::optional<corpus::Document>()> &docs,
                          std::string sample_id = {},
                          bool per_document_mean = false);

struct TokenFrequencyReport {
    std::vector<std::pair<std::string, std::uint64_t>> top; // count desc, id asc
    std::uint64_t unique_token_count = 0;
    std::uint64_t total_tokens = 0;
};

TokenFrequencyReport token_frequency(const ByteBpeModel &tok,
                                     const std::function<std::optional<corpus::Document>()> &docs,
                                     std::size_t k);

} // namespace lltk::tok
