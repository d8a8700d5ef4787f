#include "lltk/bloom.hpp"

#include "lltk/io_util.hpp"

#include <cmath>
#include <stdexcept>

namespace lltk::dedup {

BloomFilter::BloomFilter(std::uint64_t n_expected, double p_target, std::uint64_t seed) {
    if (n_expected < 1)
        throw std::invalid_argument("bloom: n_expected must be >= 1");
    if (!(p_target > 0.0 && p_target < 1.0))
        throw std::invalid_argument("bloom: p_target must be in (0,1)");
    const double ln2 = std::log(2.0);
    const double m = std::ceil(-static_cast<double>(n_expected) * std::log(p_target) / (ln2 * ln2));
    m_ = static_cast<std::uint64_t>(m);
    const double k = std::round(m / static_cast<double>(n_expected) * ln2);
    k_ = static_cast<std::uint32_t>(std::max(1.0, k));
    seed_ = seed;
    n_expected_ = n_expected;
    p_target_ = p_target;
    allocate();
}

void BloomFilter::allocate() {
    word_count_ = (m_ + 63) / 64;
    words_ = std::make_unique<std::atomic<std::uint64_t>[]>(word_count_);
    for (std::uint64_t i = 0; i < word_count_; ++i)
        words_[i].store(0, std::memory_order_relaxed);
}

bool BloomFilter::test_and_insert(std::string_view key) {
    const Hash128 h = hash128(key, seed_);
    bool all_set = true;
    for (std::uint32_t i = 0; i < k_; ++i) {
        const std::uint64_t idx = probe_index(h, i);
        const std::uint64_t mask = 1ull << (idx & 63);
        const std::uint64_t prev =
            words_[idx >> 6].fetch_or(mask, std::memory_order_relaxed);
        if ((prev & mask) == 0)
            all_set = false;
    }
    inserted_.fetch_add(1, std::memory_order_relaxed);
    return all_set;
}

bool BloomFilter::contains(std::string_view key) const {
    const Hash128 h = hash128(key, seed_);
    for (std::uint32_t i = 0; i < k_; ++i) {
        const std::uint64_t idx = probe_index(h, i);
        const std::uint64_t mask = 1ull << (idx & 63);
        if ((words_[idx >> 6].load(std::memory_order_relaxed) & mask) == 0)
            return false;
    }
    return true;
}

void BloomFilter::save(const std::filesystem::path &path) const {
    std::string buf;
    buf.reserve(28 + word_count_ * 8);
    buf.append("LLBF", 4);
    io::put_u32(buf, 1);
    io::put_u64(buf, m_);
    io::put_u32(buf, k_);
    io::put_u64(buf, seed_);
    for (std::uint64_t i = 0; i < word_count_; ++i)
        io::put_u64(buf, words_[i].load(std::memory_order_relaxed));
    io::write_file_atomic(path, buf);
}

BloomFilter BloomFilter::load(const std::filesystem::path &path) {
    io::BinReader in(path);
    in.expect_magic("LLBF", "bloom filter");
    const std::uint32_t version = in.u32();
    if (version != 1)
        throw std::runtime_error("unsupported bloom filter version " + std::to_string(version));
    BloomFilter f;
    f.m_ = in.u64();
    f.k_ = in.u32();
    f.seed_ = in.u64();
    if (f.m_ < 1 || f.k_ < 1)
        throw std::runtime_error("corrupt bloom filter header in " + path.string());
    f.allocate();
    for (std::uint64_t i = 0; i < f.word_count_; ++i)
        f.words_[i].store(in.u64(), std::memory_order_relaxed);
    return f;
}

} // namespace lltk::dedup
