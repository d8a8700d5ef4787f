#pragma once

#include "lltk/corpus_io.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace testutil {

// Self-deleting scratch directory; every test writes under its own root so
// parallel ctest jobs never collide.
class TempDir {
  public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::string tmpl = (base / "lltk-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data()))
            throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path &p, std::string_view content) {
    if (!p.parent_path().empty())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw std::runtime_error("write failed: " + p.string());
}

inline void write_gzip(const std::filesystem::path &p, std::string_view content) {
    if (!p.parent_path().empty())
        std::filesystem::create_directories(p.parent_path());
    gzFile gz = gzopen(p.string().c_str(), "wb");
    if (!gz)
        throw std::runtime_error("gzopen failed: " + p.string());
    if (!content.empty() &&
        gzwrite(gz, content.data(), static_cast<unsigned>(content.size())) <= 0) {
        gzclose(gz);
        throw std::runtime_error("gzwrite failed: " + p.string());
    }
    gzclose(gz);
}

inline std::string read_text(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("open failed: " + p.string());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

inline lltk::corpus::Document make_doc(std::string id, std::string content,
                                       std::string url = {}, double ppl = -1.0,
                                       lltk::corpus::Partition part = lltk::corpus::Partition::Head,
                                       bool dup = false) {
    lltk::corpus::Document d;
    d.doc_id = std::move(id);
    d.raw_content = std::move(content);
    if (!url.empty())
        d.url = std::move(url);
    if (ppl >= 0.0)
        d.quality.ccnet_perplexity = ppl;
    d.partition = part;
    d.dup_flag = dup;
    return d;
}

// One crawl record in the input schema the shard reader parses.
inline std::string record_line(const lltk::corpus::Document &d) {
    nlohmann::json rec;
    rec["doc_id"] = d.doc_id;
    rec["raw_content"] = d.raw_content;
    if (d.url)
        rec["url"] = *d.url;
    if (d.dup_flag)
        rec["dup_flag"] = true;
    if (d.quality.ccnet_perplexity)
        rec["quality_signals"] = {{"ccnet_perplexity", *d.quality.ccnet_perplexity}};
    return rec.dump() + "\n";
}

inline std::string records(const std::vector<lltk::corpus::Document> &docs) {
    std::string out;
    for (const auto &d : docs)
        out += record_line(d);
    return out;
}

// Deterministic cross-platform generator for fuzz corpora.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : s_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Arbitrary bytes, including NUL and invalid UTF-8.
    std::string bytes(std::size_t len) {
        std::string s(len, '\0');
        for (auto &c : s)
            c = static_cast<char>(below(256));
        return s;
    }

    // Mixed text: words over a small alphabet plus whitespace and the odd
    // multibyte character, shaped like natural tokenizer input.
    std::string text(std::size_t approx_len) {
        static const char *pieces[] = {"der",  "die",  "und", "ein", "zu",  "haus",
                                       "blau", "gr\xc3\xbcn", "a",   "ab",  "abc", "x1"};
        std::string s;
        while (s.size() < approx_len) {
            if (!s.empty()) {
                std::uint64_t w = below(8);
                if (w < 6)
                    s += ' ';
                else if (w == 6)
                    s += '\n';
                else
                    s += "  ";
            }
            s += pieces[below(sizeof(pieces) / sizeof(pieces[0]))];
        }
        return s;
    }

  private:
    std::uint64_t s_;
};

} // namespace testutil
