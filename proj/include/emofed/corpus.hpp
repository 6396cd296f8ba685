#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emofed/emoji.hpp"
#include "emofed/unicode.hpp"

namespace emofed {

struct RawTweet {
  std::string id;
  std::string text;
};

// One single-label training instance, traceable to its source tweet.
struct Example {
  std::string id;
  std::string source_id;
  std::vector<std::string> tokens;
  int label = 0;
};

enum class NormalizeMode { Tokens, Plain };

namespace detail {

// Internal placeholders for the marker tokens. Noncharacters: they survive
// the punctuation pass and cannot collide with interchange text (any
// pre-existing occurrence is dropped up front).
inline constexpr char32_t kMentionMark = 0xFDD0;
inline constexpr char32_t kUrlMark = 0xFDD1;
inline constexpr char32_t kHashtagMark = 0xFDD2;

inline bool is_internal_mark(char32_t cp) {
  return cp == kMentionMark || cp == kUrlMark || cp == kHashtagMark;
}

inline bool is_hashtag_char(char32_t cp) {
  if (cp == U'_' || (cp >= U'0' && cp <= U'9')) return true;
  return !is_whitespace(cp) && !is_digit_punct_symbol(cp) && !is_internal_mark(cp) &&
         emoji_cluster_length(std::u32string_view(&cp, 1), 0) == 0;
}

// Length of a mention at i ('@' + ASCII word chars), or 0.
inline std::size_t mention_length(std::u32string_view s, std::size_t i) {
  if (s[i] != U'@') return 0;
  std::size_t j = i + 1;
  while (j < s.size() && is_ascii_word_char(s[j])) ++j;
  return j - i > 1 ? j - i : 0;
}

// Length of a URL at i: a scheme followed by "://", or a "www." prefix,
// then everything up to whitespace.
inline std::size_t url_length(std::u32string_view s, std::size_t i) {
  std::size_t head = 0;
  if (s.substr(i).starts_with(U"www.")) {
    head = 4;
  } else if (s[i] >= U'a' && s[i] <= U'z') {
    std::size_t j = i;
    while (j < s.size() &&
           ((s[j] >= U'a' && s[j] <= U'z') || (s[j] >= U'0' && s[j] <= U'9') ||
            s[j] == U'+' || s[j] == U'.' || s[j] == U'-')) {
      ++j;
    }
    if (j + 2 < s.size() && s[j] == U':' && s[j + 1] == U'/' && s[j + 2] == U'/')
      head = j + 3 - i;
    else
      return 0;
  } else {
    return 0;
  }
  std::size_t j = i + head;
  while (j < s.size() && !is_whitespace(s[j])) ++j;
  return j - i;
}

inline std::size_t hashtag_length(std::u32string_view s, std::size_t i) {
  if (s[i] != U'#') return 0;
  std::size_t j = i + 1;
  while (j < s.size() && is_hashtag_char(s[j])) ++j;
  return j - i > 1 ? j - i : 0;
}

}  // namespace detail

// Normalization pipeline, in fixed order: strip emoji; lowercase; drop a
// leading retweet marker ("rt" followed by a mention); replace or delete
// mentions/URLs/hashtags; remove digits, punctuation and symbols; split on
// whitespace.
inline std::vector<std::string> normalize(std::string_view text, NormalizeMode mode) {
  using namespace detail;
  std::u32string cps;
  {
    const std::u32string raw = decode_utf8(text);
    cps.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
      const std::size_t len = emoji_cluster_length(raw, i);
      if (len > 0) {
        i += len;
        continue;
      }
      if (!is_internal_mark(raw[i])) cps.push_back(to_lower(raw[i]));
      ++i;
    }
  }

  // Leading "rt" token immediately followed by a mention.
  {
    std::size_t i = 0;
    while (i < cps.size() && is_whitespace(cps[i])) ++i;
    if (i + 1 < cps.size() && cps[i] == U'r' && cps[i + 1] == U't') {
      std::size_t j = i + 2;
      std::size_t ws = j;
      while (ws < cps.size() && is_whitespace(cps[ws])) ++ws;
      if (ws > j && ws < cps.size() && mention_length(cps, ws) > 0) cps.erase(i, 2);
    }
  }

  // Mentions, URLs and hashtags. Boundary = start of text or a preceding
  // non-word character, so "abc@def" is left alone.
  std::u32string replaced;
  replaced.reserve(cps.size());
  {
    std::size_t i = 0;
    bool boundary = true;
    while (i < cps.size()) {
      std::size_t len = 0;
      char32_t mark = 0;
      if (boundary) {
        if ((len = url_length(cps, i)) > 0) mark = kUrlMark;
        else if ((len = mention_length(cps, i)) > 0) mark = kMentionMark;
        else if ((len = hashtag_length(cps, i)) > 0) mark = kHashtagMark;
      }
      if (len > 0) {
        if (mode == NormalizeMode::Tokens) replaced.push_back(mark);
        i += len;
        boundary = true;
        continue;
      }
      boundary = !is_ascii_word_char(cps[i]);
      replaced.push_back(cps[i]);
      ++i;
    }
  }

  // Remove digits/punctuation/symbols, then split. The internal marks act
  // as token boundaries of their own.
  std::vector<std::string> tokens;
  std::string cur;
  const auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (char32_t cp : replaced) {
    if (is_whitespace(cp)) {
      flush();
    } else if (is_internal_mark(cp)) {
      flush();
      if (cp == kMentionMark) tokens.emplace_back("<mention>");
      else if (cp == kUrlMark) tokens.emplace_back("<url>");
      else tokens.emplace_back("<hashtag>");
    } else if (!is_digit_punct_symbol(cp)) {
      append_utf8(cur, cp);
    }
  }
  flush();
  return tokens;
}

// One Example per categorizable emoji occurrence; a tweet with none yields
// an empty list. Sequences the table cannot categorize are skipped and
// tallied into *unknown_count when provided.
inline std::vector<Example> explode(const RawTweet& tweet, const CategoryTable& table,
                                    NormalizeMode mode = NormalizeMode::Tokens,
                                    std::uint64_t* unknown_count = nullptr) {
  std::vector<EmojiCategory> labels;
  for (const std::string& seq : extract_emojis(tweet.text)) {
    if (auto cat = categorize(seq, table)) {
      labels.push_back(*cat);
    } else if (unknown_count) {
      ++*unknown_count;
    }
  }
  if (labels.empty()) return {};
  const std::vector<std::string> tokens = normalize(tweet.text, mode);
  std::vector<Example> out;
  out.reserve(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    out.push_back(Example{tweet.id + "#" + std::to_string(j), tweet.id, tokens,
                          static_cast<int>(labels[j])});
  }
  return out;
}

}  // namespace emofed
