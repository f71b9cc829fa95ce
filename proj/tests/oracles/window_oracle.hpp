// SPDX-License-Identifier: Apache-2.0
#pragma once

// Feature windows rebuilt by plain string slicing over decoded code points.

#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

inline std::u32string decode(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 6 ? 2 : (c >> 4) == 14 ? 3 : (c >> 3) == 30 ? 4 : 0;
    if (len == 0 || i + static_cast<std::size_t>(len) > s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    bool ok = true;
    for (int j = 1; j < len; ++j) {
      unsigned char cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(j)]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

inline std::uint16_t code(char32_t c) { return (c == 0 || c > 0x7F) ? 256 : static_cast<std::uint16_t>(c); }

/// 3k codes for token `pos` of `sentence` (the written forms in order).
inline std::vector<std::uint16_t> window(const std::vector<std::string>& sentence, std::size_t pos, std::size_t k) {
  std::string before, after;
  for (std::size_t i = 0; i < pos; ++i) before += (i ? " " : "") + sentence[i];
  for (std::size_t i = pos + 1; i < sentence.size(); ++i) after += (i > pos + 1 ? " " : "") + sentence[i];
  std::u32string l = decode(before), m = decode(sentence[pos]), r = decode(after);
  std::vector<std::uint16_t> out(3 * k, 0);
  std::u32string lk = l.size() > k ? l.substr(l.size() - k) : l;
  for (std::size_t i = 0; i < lk.size(); ++i) out[k - lk.size() + i] = code(lk[i]);
  for (std::size_t i = 0; i < k && i < m.size(); ++i) out[k + i] = code(m[i]);
  for (std::size_t i = 0; i < k && i < r.size(); ++i) out[2 * k + i] = code(r[i]);
  return out;
}

}  // namespace oracle
