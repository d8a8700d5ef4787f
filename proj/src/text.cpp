#include "lltk/text.hpp"

namespace lltk::text {

bool is_whitespace_cp(std::uint32_t cp) {
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20:
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
    case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
    case 0x200A:
    case 0x2028: case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
        return true;
    default:
        return false;
    }
}

bool next_codepoint(std::string_view s, std::size_t &i, std::uint32_t &cp) {
    if (i >= s.size())
        return false;
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) {
        return i + k < s.size() &&
               (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    if (b0 < 0x80) {
        cp = b0;
        i += 1;
        return true;
    }
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        cp = (std::uint32_t(b0 & 0x1F) << 6) |
             (static_cast<unsigned char>(s[i + 1]) & 0x3F);
        if (cp >= 0x80) {
            i += 2;
            return true;
        }
    } else if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        cp = (std::uint32_t(b0 & 0x0F) << 12) |
             (std::uint32_t(static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
             (static_cast<unsigned char>(s[i + 2]) & 0x3F);
        if (cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF)) {
            i += 3;
            return true;
        }
    } else if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        cp = (std::uint32_t(b0 & 0x07) << 18) |
             (std::uint32_t(static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
             (std::uint32_t(static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
             (static_cast<unsigned char>(s[i + 3]) & 0x3F);
        if (cp >= 0x10000 && cp <= 0x10FFFF) {
            i += 4;
            return true;
        }
    }
    // Ill-formed lead or truncated sequence: consume one byte.
    cp = b0;
    i += 1;
    return true;
}

std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    std::size_t i = 0;
    bool in_word = false;
    std::uint32_t cp = 0;
    while (next_codepoint(s, i, cp)) {
        const bool ws = cp < 0x80 ? (cp == 0x20 || (cp >= 0x09 && cp <= 0x0D))
                                  : is_whitespace_cp(cp);
        if (ws) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

namespace {

// Length of the well-formed UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_seq_len(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80)
        return 1;
    std::size_t before = i;
    std::uint32_t cp = 0;
    std::size_t j = i;
    next_codepoint(s, j, cp);
    const std::size_t len = j - before;
    if (len == 1 && b0 >= 0x80)
        return 0; // decoded as fallback, not a valid sequence
    return len;
}

} // namespace

std::size_t repair_utf8(std::string_view in, std::string &out) {
    out.clear();
    out.reserve(in.size());
    std::size_t replaced = 0;
    std::size_t i = 0;
    while (i < in.size()) {
        const std::size_t len = utf8_seq_len(in, i);
        if (len == 0) {
            out.append("\xEF\xBF\xBD");
            ++replaced;
            ++i;
        } else {
            out.append(in.substr(i, len));
            i += len;
        }
    }
    return replaced;
}

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const std::size_t len = utf8_seq_len(s, i);
        if (len == 0)
            return false;
        i += len;
    }
    return true;
}

std::vector<std::string_view> split_lines_nonempty(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t nl = s.find('\n', start);
        const std::size_t end = nl == std::string_view::npos ? s.size() : nl;
        if (end > start)
            out.push_back(s.substr(start, end - start));
        if (nl == std::string_view::npos)
            break;
        start = nl + 1;
    }
    return out;
}

std::string_view trim_whitespace(std::string_view s) {
    // Trims Unicode whitespace from both ends.
    std::size_t begin = 0;
    std::size_t last_word_end = 0;
    std::size_t i = 0;
    std::uint32_t cp = 0;
    bool seen_nonws = false;
    while (i < s.size()) {
        const std::size_t at = i;
        if (!next_codepoint(s, i, cp))
            break;
        if (!is_whitespace_cp(cp)) {
            if (!seen_nonws) {
                begin = at;
                seen_nonws = true;
            }
            last_word_end = i;
        }
    }
    if (!seen_nonws)
        return {};
    return s.substr(begin, last_word_end - begin);
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char &c : out)
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
    return out;
}

} // namespace lltk::text
