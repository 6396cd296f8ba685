#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emofed/unicode.hpp"

namespace emofed {

// The ten coarse emoji groups, in the canonical Unicode ordering. The
// integer values double as the class labels of the prediction task.
enum class EmojiCategory : int {
  SmileysEmotion = 0,
  PeopleBody = 1,
  Component = 2,
  AnimalsNature = 3,
  FoodDrink = 4,
  TravelPlaces = 5,
  Activities = 6,
  Objects = 7,
  Symbols = 8,
  Flags = 9,
};

inline constexpr int kNumCategories = 10;

inline constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "SmileysEmotion", "PeopleBody",   "Component", "AnimalsNature", "FoodDrink",
    "TravelPlaces",   "Activities",   "Objects",   "Symbols",       "Flags",
};

inline std::string_view category_name(EmojiCategory c) {
  return kCategoryNames[static_cast<int>(c)];
}

inline std::optional<EmojiCategory> category_from_name(std::string_view name) {
  for (int i = 0; i < kNumCategories; ++i) {
    if (kCategoryNames[i] == name) return static_cast<EmojiCategory>(i);
  }
  return std::nullopt;
}

namespace detail {

// Pictographic base ranges used by the structural cluster scanner. Anything
// here can start an emoji cluster; 1F000-1FAFF is taken wholesale since the
// non-emoji codepoints in it are symbols the normalizer removes anyway.
inline constexpr CpRange kEmojiBaseRanges[] = {
    {0x00A9, 0x00A9},   {0x00AE, 0x00AE},   {0x203C, 0x203C},   {0x2049, 0x2049},
    {0x2122, 0x2122},   {0x2139, 0x2139},   {0x2194, 0x2199},   {0x21A9, 0x21AA},
    {0x231A, 0x231B},   {0x2328, 0x2328},   {0x23CF, 0x23CF},   {0x23E9, 0x23FA},
    {0x24C2, 0x24C2},   {0x25AA, 0x25AB},   {0x25B6, 0x25B6},   {0x25C0, 0x25C0},
    {0x25FB, 0x25FE},   {0x2600, 0x27BF},   {0x2934, 0x2935},   {0x2B05, 0x2B07},
    {0x2B1B, 0x2B1C},   {0x2B50, 0x2B50},   {0x2B55, 0x2B55},   {0x3030, 0x3030},
    {0x303D, 0x303D},   {0x3297, 0x3297},   {0x3299, 0x3299},   {0x1F000, 0x1FAFF},
};

inline bool in_ranges(char32_t cp, const CpRange* begin, const CpRange* end) {
  auto it = std::upper_bound(begin, end, cp,
                             [](char32_t v, const CpRange& r) { return v < r.lo; });
  return it != begin && cp <= (it - 1)->hi;
}

}  // namespace detail

inline constexpr char32_t kZwj = 0x200D;
inline constexpr char32_t kVariationSelector16 = 0xFE0F;
inline constexpr char32_t kCombiningKeycap = 0x20E3;

inline bool is_emoji_base(char32_t cp) {
  return detail::in_ranges(cp, std::begin(detail::kEmojiBaseRanges),
                           std::end(detail::kEmojiBaseRanges));
}

inline bool is_regional_indicator(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }

inline bool is_skin_tone_modifier(char32_t cp) { return cp >= 0x1F3FB && cp <= 0x1F3FF; }

inline bool is_tag_char(char32_t cp) { return cp >= 0xE0020 && cp <= 0xE007F; }

inline bool is_keycap_base(char32_t cp) {
  return cp == U'#' || cp == U'*' || (cp >= U'0' && cp <= U'9');
}

namespace detail {

inline std::size_t eat_components(std::u32string_view s, std::size_t j) {
  while (j < s.size() && (s[j] == kVariationSelector16 || s[j] == kCombiningKeycap ||
                          is_skin_tone_modifier(s[j]) || is_tag_char(s[j]))) {
    ++j;
  }
  return j;
}

}  // namespace detail

// Length in codepoints of the maximal emoji cluster starting at position i,
// or 0 if none starts there. Handles keycaps, flags (regional-indicator
// pairs), variation selectors, skin tones, tag sequences and ZWJ joins.
inline std::size_t emoji_cluster_length(std::u32string_view s, std::size_t i) {
  const char32_t c = s[i];
  if (is_keycap_base(c)) {
    std::size_t j = i + 1;
    if (j < s.size() && s[j] == kVariationSelector16) ++j;
    if (j < s.size() && s[j] == kCombiningKeycap) return j + 1 - i;
    // a bare digit or '#' is ordinary text, not an emoji
    return 0;
  }
  if (is_regional_indicator(c)) {
    return (i + 1 < s.size() && is_regional_indicator(s[i + 1])) ? 2 : 1;
  }
  if (!is_emoji_base(c)) return 0;
  std::size_t j = detail::eat_components(s, i + 1);
  while (j + 1 < s.size() && s[j] == kZwj &&
         (is_emoji_base(s[j + 1]) || is_regional_indicator(s[j + 1]))) {
    j = detail::eat_components(s, j + 2);
  }
  return j - i;
}

// Emoji sequence -> category mapping loaded from the bundled CSV asset
// ("sequence,category" with dash-separated uppercase hex sequences).
class CategoryTable {
 public:
  static CategoryTable from_csv(std::string_view contents) {
    CategoryTable table;
    table.checksum_ = fnv1a64(contents);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= contents.size()) {
      const std::size_t eol = contents.find('\n', pos);
      std::string_view line = contents.substr(
          pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
      pos = eol == std::string_view::npos ? contents.size() + 1 : eol + 1;
      ++line_no;
      if (line.empty()) continue;
      if (line_no == 1) {
        if (line != "sequence,category")
          throw std::runtime_error("category table: bad header: " + std::string(line));
        continue;
      }
      const std::size_t comma = line.find(',');
      if (comma == std::string_view::npos)
        throw std::runtime_error("category table: missing comma on line " +
                                 std::to_string(line_no));
      const std::u32string seq = parse_hex_sequence(line.substr(0, comma), line_no);
      const auto cat = category_from_name(line.substr(comma + 1));
      if (!cat)
        throw std::runtime_error("category table: unknown category on line " +
                                 std::to_string(line_no));
      table.insert(seq, *cat, /*alias=*/false, line_no);
    }
    // Register variation-selector-stripped aliases so unqualified text
    // (e.g. a bare U+00A9) still resolves.
    std::vector<std::pair<std::u32string, EmojiCategory>> aliases;
    for (const auto& [seq, cat] : table.map_) {
      std::u32string stripped;
      for (char32_t cp : seq)
        if (cp != kVariationSelector16) stripped.push_back(cp);
      if (stripped != seq && !stripped.empty()) aliases.emplace_back(stripped, cat);
    }
    std::sort(aliases.begin(), aliases.end());
    for (const auto& [seq, cat] : aliases) table.insert(seq, cat, /*alias=*/true, 0);
    return table;
  }

  static CategoryTable load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open category table: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_csv(buf.str());
  }

  std::optional<EmojiCategory> find(std::u32string_view seq) const {
    auto it = map_.find(std::u32string(seq));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t checksum() const { return checksum_; }
  std::size_t size() const { return size_; }

  static std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : std::string_view(bytes)) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  void insert(const std::u32string& seq, EmojiCategory cat, bool alias, std::size_t line_no) {
    auto [it, fresh] = map_.emplace(seq, cat);
    if (!fresh && it->second != cat && !alias)
      throw std::runtime_error("category table: conflicting entry on line " +
                               std::to_string(line_no));
    if (fresh && !alias) ++size_;
  }

  static std::u32string parse_hex_sequence(std::string_view field, std::size_t line_no) {
    std::u32string seq;
    char32_t cur = 0;
    bool any = false;
    for (char ch : field) {
      if (ch == '-') {
        if (!any)
          throw std::runtime_error("category table: bad sequence on line " +
                                   std::to_string(line_no));
        seq.push_back(cur);
        cur = 0;
        any = false;
        continue;
      }
      int digit;
      if (ch >= '0' && ch <= '9') digit = ch - '0';
      else if (ch >= 'A' && ch <= 'F') digit = ch - 'A' + 10;
      else if (ch >= 'a' && ch <= 'f') digit = ch - 'a' + 10;
      else
        throw std::runtime_error("category table: bad hex digit on line " +
                                 std::to_string(line_no));
      cur = cur * 16 + static_cast<char32_t>(digit);
      any = true;
    }
    if (!any)
      throw std::runtime_error("category table: empty sequence on line " +
                               std::to_string(line_no));
    seq.push_back(cur);
    return seq;
  }

  std::unordered_map<std::u32string, EmojiCategory> map_;
  std::uint64_t checksum_ = 0;
  std::size_t size_ = 0;  // non-alias entries
};

// Every maximal emoji cluster in the text, in order, duplicates preserved.
inline std::vector<std::string> extract_emojis(std::string_view text) {
  std::vector<std::string> out;
  const std::u32string cps = decode_utf8(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    const std::size_t len = emoji_cluster_length(cps, i);
    if (len == 0) {
      ++i;
      continue;
    }
    out.push_back(encode_utf8(std::u32string_view(cps).substr(i, len)));
    i += len;
  }
  return out;
}

// Exact lookup, then a retry with variation selectors stripped. Sequences
// missing from the table are not an error; callers count and skip them.
inline std::optional<EmojiCategory> categorize(std::string_view emoji_seq,
                                               const CategoryTable& table) {
  const std::u32string cps = decode_utf8(emoji_seq);
  if (auto hit = table.find(cps)) return hit;
  std::u32string stripped;
  stripped.reserve(cps.size());
  for (char32_t cp : cps)
    if (cp != kVariationSelector16) stripped.push_back(cp);
  if (stripped.size() != cps.size()) {
    if (auto hit = table.find(stripped)) return hit;
  }
  return std::nullopt;
}

}  // namespace emofed
