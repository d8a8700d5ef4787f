#pragma once

#include "lltk/hash.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>

namespace lltk::dedup {

// Bit-array membership filter with k double-hashed probes. No false
// negatives; false-positive rate is tuned by (n_expected, p_target).
// test_and_insert is atomic, so one filter can be shared across shard
// threads; sequential single-pass use stays bit-reproducible.
class BloomFilter {
  public:
    // m = ceil(-n ln p / (ln 2)^2), k = max(1, round((m/n) ln 2)).
    BloomFilter(std::uint64_t n_expected, double p_target, std::uint64_t seed = 0);

    BloomFilter(BloomFilter &&other) noexcept
        : m_(other.m_), k_(other.k_), seed_(other.seed_), n_expected_(other.n_expected_),
          p_target_(other.p_target_),
          inserted_(other.inserted_.load(std::memory_order_relaxed)),
          words_(std::move(other.words_)), word_count_(other.word_count_) {}
    BloomFilter &operator=(BloomFilter &&) = delete;
    BloomFilter(const BloomFilter &) = delete;

    // Inserts key and reports whether all probed bits were already set.
    bool test_and_insert(std::string_view key);

    // Membership probe without insertion.
    bool contains(std::string_view key) const;

    std::uint64_t bit_count() const { return m_; }
    std::uint32_t probe_count() const { return k_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t inserted() const { return inserted_.load(std::memory_order_relaxed); }

    // "LLBF" v1: magic, version u32, m u64, k u32, seed u64, then
    // ceil(m/64) x u64 words, all little-endian.
    void save(const std::filesystem::path &path) const;
    static BloomFilter load(const std::filesystem::path &path);

  private:
    BloomFilter() = default;
    void allocate();
    std::uint64_t probe_index(const Hash128 &h, std::uint32_t i) const {
        return (h.lo + i * h.hi) % m_;
    }

    std::uint64_t m_ = 0;
    std::uint32_t k_ = 0;
    std::uint64_t seed_ = 0;
    std::uint64_t n_expected_ = 0;
    double p_target_ = 0.0;
    std::atomic<std::uint64_t> inserted_{0};
    std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
    std::uint64_t word_count_ = 0;
};

} // namespace lltk::dedup
