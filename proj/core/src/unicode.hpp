#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ditto::unicode {

using CodePoints = std::vector<char32_t>;

/// Malformed sequences decode to U+FFFD.
CodePoints decode_utf8(std::string_view text);
std::string encode_utf8(const CodePoints& cps);
std::string encode_utf8(const CodePoints& cps, std::size_t begin, std::size_t end);

bool is_whitespace(char32_t c);
bool is_control(char32_t c);
bool is_punctuation(char32_t c);
bool is_cjk(char32_t c);

/// Canonical decomposition with nonspacing marks (Mn) removed.
CodePoints strip_accents(const CodePoints& cps);
CodePoints to_lower(const CodePoints& cps);

}  // namespace ditto::unicode
