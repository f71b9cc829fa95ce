// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deepnorm/error.hpp"

// English number names in the corpus reading style.
//
// Cardinals are grouped by thousands (thousand, million, billion, trillion).
// Below one million the final sub-hundred remainder is joined with "and"
// whenever anything precedes it ("one hundred and five", "two thousand and
// sixteen", "one thousand two hundred and thirty four"); from one million up
// no "and" is written ("one million three hundred forty one thousand eight
// hundred thirty three").

namespace deepnorm::numbers {

inline constexpr std::uint64_t kCardinalLimit = 1'000'000'000'000'000ULL;  // 10^15

inline constexpr std::array<std::string_view, 20> kUnits = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};

inline constexpr std::array<std::string_view, 10> kTens = {
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

inline constexpr std::array<std::string_view, 5> kScales = {"", "thousand", "million", "billion", "trillion"};

namespace detail {

inline void append_word(std::string& out, std::string_view w) {
  if (!out.empty()) out += ' ';
  out += w;
}

// 1..99
inline void append_below_hundred(std::string& out, unsigned n) {
  if (n < 20) {
    append_word(out, kUnits[n]);
    return;
  }
  append_word(out, kTens[n / 10]);
  if (n % 10) append_word(out, kUnits[n % 10]);
}

}  // namespace detail

/// "0" -> "zero", 2016 -> "two thousand and sixteen".
inline std::string cardinal(std::uint64_t n) {
  if (n >= kCardinalLimit) throw UsageError("cardinal out of range: " + std::to_string(n));
  if (n == 0) return "zero";
  const bool use_and = n < 1'000'000;
  std::array<unsigned, 5> groups{};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g] = static_cast<unsigned>(n % 1000);
    n /= 1000;
  }
  std::string out;
  for (std::size_t g = groups.size(); g-- > 0;) {
    unsigned v = groups[g];
    if (!v) continue;
    if (v >= 100) {
      detail::append_word(out, kUnits[v / 100]);
      detail::append_word(out, "hundred");
    }
    if (v % 100) {
      if (g == 0 && use_and && !out.empty()) detail::append_word(out, "and");
      detail::append_below_hundred(out, v % 100);
    }
    if (g) detail::append_word(out, kScales[g]);
  }
  return out;
}

/// Converts one cardinal word to its ordinal form ("one" -> "first").
inline std::string ordinal_word(std::string_view w) {
  if (w == "one") return "first";
  if (w == "two") return "second";
  if (w == "three") return "third";
  if (w == "five") return "fifth";
  if (w == "eight") return "eighth";
  if (w == "nine") return "ninth";
  if (w == "twelve") return "twelfth";
  if (!w.empty() && w.back() == 'y') return std::string(w.substr(0, w.size() - 1)) + "ieth";
  return std::string(w) + "th";
}

/// Cardinal words with the final word made ordinal: 21 -> "twenty first".
inline std::string ordinal(std::uint64_t n) {
  std::string c = cardinal(n);
  auto pos = c.rfind(' ');
  std::size_t start = pos == std::string::npos ? 0 : pos + 1;
  return c.substr(0, start) + ordinal_word(std::string_view(c).substr(start));
}

/// Reading of a single digit; zero reads as "o".
inline std::string_view digit_word(char d) {
  if (d == '0') return "o";
  return kUnits[static_cast<std::size_t>(d - '0')];
}

/// Digit-by-digit reading: "2016" -> "two o one six".
inline std::string digits(std::string_view s) {
  if (s.empty()) throw VerbalizeError("empty digit string");
  std::string out;
  for (char c : s) {
    if (c < '0' || c > '9') throw VerbalizeError("not a digit string: '" + std::string(s) + "'");
    detail::append_word(out, digit_word(c));
  }
  return out;
}

/// Plural of a number word or ordinal as used in fractions and decades:
/// "quarter" -> "quarters", "twentieth" -> "twentieths", "ninety" -> "nineties".
inline std::string plural_word(std::string_view w) {
  if (w == "half") return "halves";
  if (!w.empty() && w.back() == 'y') return std::string(w.substr(0, w.size() - 1)) + "ies";
  return std::string(w) + "s";
}

/// Parses a run of ASCII digits (optionally with thousands commas when
/// `allow_commas`), returning nullopt-like failure via exception.
inline std::uint64_t parse_integer(std::string_view s, bool allow_commas = false) {
  if (s.empty()) throw VerbalizeError("empty number");
  std::string digits_only;
  if (allow_commas && s.find(',') != std::string_view::npos) {
    // groups after the first must be exactly three digits
    std::size_t first = s.find(',');
    if (first == 0 || first > 3) throw VerbalizeError("bad digit grouping: '" + std::string(s) + "'");
    std::size_t i = 0;
    std::size_t group_len = 0;
    bool in_first = true;
    for (; i < s.size(); ++i) {
      char c = s[i];
      if (c == ',') {
        if (!in_first && group_len != 3) throw VerbalizeError("bad digit grouping: '" + std::string(s) + "'");
        in_first = false;
        group_len = 0;
        continue;
      }
      if (c < '0' || c > '9') throw VerbalizeError("not a number: '" + std::string(s) + "'");
      digits_only += c;
      ++group_len;
    }
    if (group_len != 3) throw VerbalizeError("bad digit grouping: '" + std::string(s) + "'");
  } else {
    for (char c : s) {
      if (c < '0' || c > '9') throw VerbalizeError("not a number: '" + std::string(s) + "'");
      digits_only += c;
    }
  }
  if (digits_only.size() > 15) throw VerbalizeError("number too large: '" + std::string(s) + "'");
  return std::stoull(digits_only);
}

}  // namespace deepnorm::numbers
