#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lltk::text {

// Unicode White_Space code points.
bool is_whitespace_cp(std::uint32_t cp);

// Decodes one UTF-8 code point at s[i], advancing i. Returns false at end of
// input; an invalid byte decodes as itself (i advances by one).
bool next_codepoint(std::string_view s, std::size_t &i, std::uint32_t &cp);

// Number of maximal runs of non-whitespace code points.
std::size_t word_count(std::string_view s);

// Replaces ill-formed UTF-8 sequences with U+FFFD. Returns the number of
// replacements made; 0 means the input came back unchanged.
std::size_t repair_utf8(std::string_view in, std::string &out);

bool is_valid_utf8(std::string_view s);

// Splits on '\n', dropping empty segments. Segment text keeps all other bytes.
std::vector<std::string_view> split_lines_nonempty(std::string_view s);

std::string_view trim_whitespace(std::string_view s);

// ASCII lowercase; non-ASCII bytes pass through.
std::string ascii_lower(std::string_view s);

} // namespace lltk::text
