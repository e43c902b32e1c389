#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace agora::utf8 {

// Length of the sequence introduced by lead byte `c`; 1 for stray
// continuation or invalid bytes so that every byte is consumed exactly once.
inline std::size_t sequence_length(unsigned char c) noexcept {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 1;
}

inline bool is_continuation(unsigned char c) noexcept { return (c & 0xC0) == 0x80; }

// Byte offset just past `n` scalars starting at `from`, or text.size() if the
// text is shorter. Truncated sequences at the end count as one scalar each.
inline std::size_t advance(std::string_view text, std::size_t from, std::size_t n) noexcept {
  std::size_t pos = from;
  while (n > 0 && pos < text.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(text[pos]));
    std::size_t k = 1;
    while (k < len && pos + k < text.size() &&
           is_continuation(static_cast<unsigned char>(text[pos + k]))) {
      ++k;
    }
    pos += k;
    --n;
  }
  return pos;
}

// Number of Unicode scalar values. Invalid bytes each count as one scalar.
inline std::size_t length(std::string_view text) noexcept {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    pos = advance(text, pos, 1);
    ++count;
  }
  return count;
}

// First `n` scalars of `text`.
inline std::string_view prefix(std::string_view text, std::size_t n) noexcept {
  return text.substr(0, advance(text, 0, n));
}

inline void append(std::string& out, char32_t cp) {
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

}  // namespace agora::utf8
