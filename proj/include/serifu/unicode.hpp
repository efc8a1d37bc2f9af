#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>

#include "serifu/error.hpp"

namespace serifu::unicode {

// Byte length of the UTF-8 sequence starting at s[pos]. Invalid or truncated
// sequences count as a single byte so that every byte string splits totally.
inline std::size_t char_length(std::string_view s, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  std::size_t len = 1;
  if (lead >= 0xF0 && lead < 0xF8) {
    len = 4;
  } else if (lead >= 0xE0) {
    len = lead < 0xF0 ? 3 : 1;
  } else if (lead >= 0xC2) {
    len = 2;
  }
  if (pos + len > s.size()) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[pos + k]) & 0xC0) != 0x80) return 1;
  }
  return len;
}

// Byte offsets of each character start, plus s.size() as a sentinel.
inline std::vector<std::uint32_t> char_offsets(std::string_view s) {
  std::vector<std::uint32_t> offsets;
  offsets.reserve(s.size() + 1);
  for (std::size_t pos = 0; pos < s.size(); pos += char_length(s, pos)) {
    offsets.push_back(static_cast<std::uint32_t>(pos));
  }
  offsets.push_back(static_cast<std::uint32_t>(s.size()));
  return offsets;
}

inline std::vector<std::string_view> split_chars(std::string_view s) {
  std::vector<std::string_view> chars;
  for (std::size_t pos = 0; pos < s.size();) {
    std::size_t len = char_length(s, pos);
    chars.push_back(s.substr(pos, len));
    pos += len;
  }
  return chars;
}

inline std::size_t char_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); pos += char_length(s, pos)) ++n;
  return n;
}

// Decodes one character; invalid bytes map to U+FFFD.
inline char32_t decode(std::string_view ch) {
  const auto b = [&](std::size_t i) { return static_cast<char32_t>(static_cast<unsigned char>(ch[i])); };
  switch (ch.size()) {
    case 1:
      return b(0) < 0x80 ? b(0) : 0xFFFD;
    case 2:
      return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
    case 3:
      return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
    case 4:
      return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) | ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
    default:
      return 0xFFFD;
  }
}

inline bool is_whitespace(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

inline bool contains_whitespace(std::string_view s) {
  for (auto ch : split_chars(s)) {
    if (is_whitespace(decode(ch))) return true;
  }
  return false;
}

inline bool is_han(char32_t cp) {
  UErrorCode status = U_ZERO_ERROR;
  return uscript_getScript(static_cast<UChar32>(cp), &status) == USCRIPT_HAN && U_SUCCESS(status);
}

// True when s is exactly one character of Han script.
inline bool is_single_han(std::string_view s) {
  return !s.empty() && char_length(s, 0) == s.size() && is_han(decode(s));
}

// NFKC followed by removal of every whitespace character, repeated to a fixed
// point (NFKC can emit spaces, and dropping spaces can expose new compositions).
inline std::string normalize_line(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFKC normalizer unavailable");

  icu::UnicodeString current = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  for (int round = 0; round < 8; ++round) {
    icu::UnicodeString composed = nfkc->normalize(current, status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
    icu::UnicodeString stripped;
    for (int32_t i = 0; i < composed.length();) {
      UChar32 cp = composed.char32At(i);
      if (!u_isUWhiteSpace(cp)) stripped.append(cp);
      i += U16_LENGTH(cp);
    }
    if (stripped == current) break;
    current = std::move(stripped);
  }
  std::string out;
  current.toUTF8String(out);
  return out;
}

}  // namespace serifu::unicode
