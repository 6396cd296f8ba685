#pragma once

#include <algorithm>
#include <iterator>
#include <string>
#include <string_view>

#include "emofed/detail/unicode_tables.hpp"

namespace emofed {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes UTF-8, mapping ill-formed byte sequences to U+FFFD.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t j) { return static_cast<unsigned char>(s[j]); };
  while (i < s.size()) {
    const unsigned char b0 = byte(i);
    char32_t cp = kReplacementChar;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      if (i + 1 < s.size() && (byte(i + 1) & 0xC0) == 0x80) {
        cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
        if (cp < 0x80) cp = kReplacementChar;
      } else {
        len = 1;
      }
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      if (i + 2 < s.size() && (byte(i + 1) & 0xC0) == 0x80 && (byte(i + 2) & 0xC0) == 0x80) {
        cp = (static_cast<char32_t>(b0 & 0x0F) << 12) |
             (static_cast<char32_t>(byte(i + 1) & 0x3F) << 6) | (byte(i + 2) & 0x3F);
        if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = kReplacementChar;
      } else {
        len = 1;
      }
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      if (i + 3 < s.size() && (byte(i + 1) & 0xC0) == 0x80 && (byte(i + 2) & 0xC0) == 0x80 &&
          (byte(i + 3) & 0xC0) == 0x80) {
        cp = (static_cast<char32_t>(b0 & 0x07) << 18) |
             (static_cast<char32_t>(byte(i + 1) & 0x3F) << 12) |
             (static_cast<char32_t>(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
        if (cp < 0x10000 || cp > 0x10FFFF) cp = kReplacementChar;
      } else {
        len = 1;
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

// True for categories Nd, P* and S* (the characters normalize() deletes).
inline bool is_digit_punct_symbol(char32_t cp) {
  const auto* begin = std::begin(detail::kStripRanges);
  const auto* end = std::end(detail::kStripRanges);
  auto it = std::upper_bound(begin, end, cp,
                             [](char32_t v, const detail::CpRange& r) { return v < r.lo; });
  return it != begin && cp <= (it - 1)->hi;
}

inline char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= U'A' && cp <= U'Z') ? cp + 0x20 : cp;
  const auto* begin = std::begin(detail::kLowercaseMap);
  const auto* end = std::end(detail::kLowercaseMap);
  auto it = std::lower_bound(begin, end, cp,
                             [](const detail::CpPair& p, char32_t v) { return p.from < v; });
  return (it != end && it->from == cp) ? it->to : cp;
}

// Unicode White_Space property.
inline bool is_whitespace(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_ascii_word_char(char32_t cp) {
  return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
         (cp >= U'0' && cp <= U'9') || cp == U'_';
}

}  // namespace emofed
