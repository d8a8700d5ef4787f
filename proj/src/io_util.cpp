#include "lltk/io_util.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

namespace lltk::io {

struct LineReader::Impl {
    gzFile file = nullptr;
    std::filesystem::path path;
    std::string pending;
    bool eof = false;
};

LineReader::LineReader(const std::filesystem::path &path) : impl_(new Impl) {
    impl_->path = path;
    impl_->file = gzopen(path.string().c_str(), "rb");
    if (!impl_->file)
        throw std::runtime_error("cannot open " + path.string());
    gzbuffer(impl_->file, 1 << 17);
}

LineReader::~LineReader() {
    if (impl_ && impl_->file)
        gzclose(impl_->file);
}

LineReader::LineReader(LineReader &&other) noexcept
    : impl_(std::move(other.impl_)), line_no_(other.line_no_) {}

bool LineReader::next_line(std::string &line) {
    auto &st = *impl_;
    line.clear();
    while (true) {
        const std::size_t nl = st.pending.find('\n');
        if (nl != std::string::npos) {
            line.assign(st.pending, 0, nl);
            st.pending.erase(0, nl + 1);
            ++line_no_;
            return true;
        }
        if (st.eof) {
            if (st.pending.empty())
                return false;
            line.swap(st.pending);
            st.pending.clear();
            ++line_no_;
            return true;
        }
        char chunk[1 << 16];
        const int got = gzread(st.file, chunk, sizeof(chunk));
        if (got < 0) {
            int errnum = 0;
            const char *msg = gzerror(st.file, &errnum);
            throw std::runtime_error("read error in " + st.path.string() + ": " +
                                     (msg ? msg : "unknown"));
        }
        if (got == 0)
            st.eof = true;
        else
            st.pending.append(chunk, static_cast<std::size_t>(got));
    }
}

AtomicFileWriter::AtomicFileWriter(const std::filesystem::path &path)
    : final_path_(path), tmp_path_(path.string() + ".tmp") {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
    if (!out_)
        throw std::runtime_error("cannot open " + tmp_path_.string() + " for writing");
}

AtomicFileWriter::~AtomicFileWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_path_, ec);
    }
}

void AtomicFileWriter::commit() {
    out_.flush();
    if (!out_)
        throw std::runtime_error("write error on " + tmp_path_.string());
    out_.close();
    std::filesystem::rename(tmp_path_, final_path_);
    committed_ = true;
}

void put_u32(std::string &buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

void put_u64(std::string &buf, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    buf.append(b, 8);
}

void put_f32(std::string &buf, float v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

BinReader::BinReader(const std::filesystem::path &path)
    : in_(path, std::ios::binary), path_(path) {
    if (!in_)
        throw std::runtime_error("cannot open " + path.string());
}

void BinReader::fill(std::size_t n) {
    buf_.resize(n);
    in_.read(buf_.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
        throw std::runtime_error("truncated file: " + path_.string());
}

std::uint32_t BinReader::u32() {
    fill(4);
    std::uint32_t v;
    std::memcpy(&v, buf_.data(), 4);
    return v;
}

std::uint64_t BinReader::u64() {
    fill(8);
    std::uint64_t v;
    std::memcpy(&v, buf_.data(), 8);
    return v;
}

float BinReader::f32() {
    fill(4);
    float v;
    std::memcpy(&v, buf_.data(), 4);
    return v;
}

std::string BinReader::bytes(std::size_t n) {
    fill(n);
    return std::string(buf_.data(), n);
}

void BinReader::expect_magic(const char magic[4], const std::string &what) {
    const std::string got = bytes(4);
    if (std::memcmp(got.data(), magic, 4) != 0)
        throw std::runtime_error(path_.string() + " is not a " + what + " file");
}

bool BinReader::at_end() {
    return in_.peek() == std::char_traits<char>::eof();
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string out;
    out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return out;
}

void write_file_atomic(const std::filesystem::path &path, std::string_view content) {
    AtomicFileWriter w(path);
    w.write(content);
    w.commit();
}

namespace {

bool glob_match(std::string_view pattern, std::string_view name) {
    std::size_t p = 0, n = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*')
        ++p;
    return p == pattern.size();
}

} // namespace

std::vector<std::filesystem::path> expand_glob(const std::string &pattern) {
    namespace fs = std::filesystem;
    if (pattern.find('*') == std::string::npos && pattern.find('?') == std::string::npos) {
        if (fs::exists(pattern))
            return {fs::path(pattern)};
        return {};
    }
    const fs::path pat(pattern);
    fs::path dir = pat.parent_path();
    if (dir.empty())
        dir = ".";
    const std::string leaf = pat.filename().string();
    std::vector<fs::path> out;
    std::error_code ec;
    // Wildcards in directory components expand one level at a time.
    if (dir.string().find('*') != std::string::npos || dir.string().find('?') != std::string::npos) {
        for (const auto &sub : expand_glob(dir.string())) {
            if (!fs::is_directory(sub))
                continue;
            for (const auto &p : expand_glob((sub / leaf).string()))
                out.push_back(p);
        }
    } else {
        for (fs::directory_iterator it(dir, ec); !ec && it != fs::directory_iterator(); it.increment(ec)) {
            if (glob_match(leaf, it->path().filename().string()))
                out.push_back(it->path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace lltk::io
