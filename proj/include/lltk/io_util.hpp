#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lltk::io {

// Line reader over a gzip or plain text file (zlib reads both transparently).
// Lines are returned without the trailing '\n'; a trailing '\r' is kept.
class LineReader {
  public:
    explicit LineReader(const std::filesystem::path &path);
    ~LineReader();
    LineReader(LineReader &&other) noexcept;
    LineReader &operator=(LineReader &&) = delete;
    LineReader(const LineReader &) = delete;

    // False at end of input. Throws std::runtime_error on a read error.
    bool next_line(std::string &line);

    std::uint64_t line_number() const { return line_no_; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint64_t line_no_ = 0;
};

// Writes to "<path>.tmp" and renames into place on commit. Destruction
// without commit removes the temp file, so fatal errors leave no partial
// output behind.
class AtomicFileWriter {
  public:
    explicit AtomicFileWriter(const std::filesystem::path &path);
    ~AtomicFileWriter();
    AtomicFileWriter(const AtomicFileWriter &) = delete;
    AtomicFileWriter &operator=(const AtomicFileWriter &) = delete;

    std::ostream &stream() { return out_; }
    void write(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }
    void commit();

  private:
    std::filesystem::path final_path_;
    std::filesystem::path tmp_path_;
    std::ofstream out_;
    bool committed_ = false;
};

// Little-endian scalar serialization. The on-disk formats ("LLBF", "LLPK",
// "LLWC") are defined little-endian regardless of host order.
void put_u32(std::string &buf, std::uint32_t v);
void put_u64(std::string &buf, std::uint64_t v);
void put_f32(std::string &buf, float v);

class BinReader {
  public:
    explicit BinReader(const std::filesystem::path &path);

    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::string bytes(std::size_t n);
    void expect_magic(const char magic[4], const std::string &what);
    bool at_end();

  private:
    void fill(std::size_t n);
    std::ifstream in_;
    std::filesystem::path path_;
    std::vector<char> buf_;
};

std::string read_file(const std::filesystem::path &path);
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

// Expands a glob pattern ('*' and '?', non-recursive per path component)
// against the filesystem; a plain path returns itself if it exists. Results
// are sorted for deterministic processing order.
std::vector<std::filesystem::path> expand_glob(const std::string &pattern);

} // namespace lltk::io
