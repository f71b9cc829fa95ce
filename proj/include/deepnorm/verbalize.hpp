// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepnorm/error.hpp"
#include "deepnorm/number_names.hpp"
#include "deepnorm/semiotic_class.hpp"
#include "deepnorm/utf8.hpp"

// Rule-based verbalizers, one per semiotic class. All output is lowercase and
// space separated. A verbalizer that does not recognise its input throws
// VerbalizeError; VerbalizerRegistry::try_apply turns that into nullopt and
// callers echo the written form.
//
// Rule tables:
//
//   PLAIN, PUNCT  identity.
//   CARDINAL      [-]digits with optional thousands commas. "-5" -> "minus five".
//   ORDINAL       digits + optional st|nd|rd|th or ".". "21st" -> "twenty first".
//   DIGIT         digits read one by one, 0 as "o".
//   DECIMAL       [-][int].frac [scale]. "3.05" -> "three point o five",
//                 ".5" -> "point five", "1.2 million" -> "one point two million".
//   DATE          YYYY                 -> paired year ("twenty sixteen", "two thousand",
//                                         "nineteen hundred", "eighteen o five")
//                 YYYYs, 'YYs, YYs     -> decade ("nineteen nineties")
//                 D/M/Y, D.M.Y, D-M-Y  -> "the <ordinal day> of <month> <year>"
//                 YYYY-MM-DD           -> "<month> <ordinal day> <year>"
//                 Month D[,] [Y]       -> "<month> <ordinal day> [<year>]"
//                 D Month [Y]          -> "the <ordinal day> of <month> [<year>]"
//                 Month Y              -> "<month> <year>"
//   TELEPHONE     digits and separators (- space ( ) .); each separator run between
//                 digits reads "sil", leading and trailing separators are silent.
//   MONEY         currency symbol or code before/after an amount, optional scale word.
//                 "$5" -> "five dollars", "$5.50" -> "five dollars and fifty cents",
//                 "$3.5 billion" -> "three point five billion dollars".
//   MEASURE       amount + unit from the unit table; singular only for exactly 1.
//   FRACTION      N/D, W N/D, vulgar-fraction glyphs. Denominator 2 and 4 read
//                 half/quarter, otherwise the ordinal; plural unless N == 1.
//                 Mixed numbers read "<whole> and a half" / "<whole> and three quarters".
//   TIME          H:MM[:SS] [am|pm], H am|pm. ":00" reads "o'clock" for hours 1-12,
//                 "hundred" for 0 and 13-24, nothing when am/pm follows.
//   ADDRESS       letter runs spelled, digit runs of 1-2 digits as cardinals, 3-4 digits
//                 as digit pairs ("one o one", "sixteen hundred"), longer runs digit by digit.
//   ELECTRONIC    character by character; "." -> "dot", "/" -> "slash", ":" -> "colon",
//                 "-" -> "dash", digits by name.
//   LETTERS       letters spelled lowercase, "." "-" and spaces silent, "&" -> "and",
//                 trailing "'s" attaches to the last letter.
//   VERBATIM      per-character name table (ASCII letters, digits, punctuation, Greek
//                 letters, common symbols) extended by a symbol<TAB>name config file.

namespace deepnorm {

namespace verbal_detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_digit(c)) return false;
  return true;
}

inline void add(std::string& out, std::string_view w) {
  if (w.empty()) return;
  if (!out.empty()) out += ' ';
  out += w;
}

[[noreturn]] inline void fail(std::string_view what, std::string_view s) {
  throw VerbalizeError(std::string(what) + ": '" + std::string(s) + "'");
}

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (lower(s[i]) != lower(prefix[i])) return false;
  return true;
}

/// Splits on runs of spaces.
inline std::vector<std::string_view> fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

struct NumberText {
  bool negative = false;
  std::string integer;                 // digits only, may be empty when a fraction is present
  std::optional<std::string> fraction;  // digits after the point
};

/// [-]digits[,ddd...][.digits] or [-].digits
inline std::optional<NumberText> parse_number(std::string_view s) {
  NumberText n;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    n.negative = s.front() == '-';
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  std::string_view ip = s.substr(0, dot);
  if (dot != std::string_view::npos) {
    std::string_view fp = s.substr(dot + 1);
    if (!all_digits(fp)) return std::nullopt;
    n.fraction = std::string(fp);
  }
  if (ip.empty()) {
    if (!n.fraction) return std::nullopt;
  } else {
    try {
      n.integer = std::to_string(numbers::parse_integer(ip, true));
    } catch (const VerbalizeError&) {
      return std::nullopt;
    }
  }
  return n;
}

inline std::string number_words(const NumberText& n) {
  std::string out;
  if (n.negative) add(out, "minus");
  if (!n.integer.empty()) add(out, numbers::cardinal(std::stoull(n.integer)));
  if (n.fraction) {
    add(out, "point");
    if (!n.fraction->empty()) add(out, numbers::digits(*n.fraction));
  }
  return out;
}

inline bool is_exactly_one(const NumberText& n) { return !n.negative && !n.fraction && n.integer == "1"; }

inline std::optional<std::string_view> scale_word(std::string_view w) {
  static const std::map<std::string, std::string_view> scales = {
      {"thousand", "thousand"}, {"million", "million"},   {"billion", "billion"}, {"trillion", "trillion"},
      {"m", "million"},         {"mn", "million"},        {"bn", "billion"},      {"b", "billion"},
      {"k", "thousand"},        {"tn", "trillion"}};
  auto it = scales.find(lower(w));
  if (it == scales.end()) return std::nullopt;
  return it->second;
}

inline constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

/// Full names, three-letter abbreviations (with optional '.') and "sept".
inline std::optional<unsigned> parse_month(std::string_view w) {
  std::string l = lower(w);
  if (!l.empty() && l.back() == '.') l.pop_back();
  if (l == "sept") return 9;
  for (unsigned i = 0; i < kMonths.size(); ++i) {
    if (l == kMonths[i]) return i + 1;
    if (l.size() == 3 && kMonths[i].substr(0, 3) == l) return i + 1;
  }
  return std::nullopt;
}

inline std::string pair_words(unsigned v) {
  std::string out;
  if (v == 0) return "hundred";
  if (v < 10) {
    add(out, "o");
    add(out, numbers::kUnits[v]);
    return out;
  }
  numbers::detail::append_below_hundred(out, v);
  return out;
}

/// 1-4 digit year reading.
inline std::string year_words(std::string_view digits) {
  unsigned y = static_cast<unsigned>(std::stoul(std::string(digits)));
  if (digits.size() == 2) return y == 0 ? "o o" : pair_words(y);
  if (digits.size() != 4) return numbers::cardinal(y);
  unsigned hi = y / 100, lo = y % 100;
  if (hi % 10 == 0 && lo < 10) {
    std::string out = numbers::cardinal(y / 1000);
    add(out, "thousand");
    if (lo) add(out, numbers::kUnits[lo]);
    return out;
  }
  std::string out;
  numbers::detail::append_below_hundred(out, hi);
  add(out, pair_words(lo));
  return out;
}

inline std::optional<unsigned> parse_day(std::string_view w) {
  if (!w.empty() && (w.back() == ',' || w.back() == '.')) w.remove_suffix(1);
  if (w.size() > 2) {
    std::string suf = lower(w.substr(w.size() - 2));
    if (suf == "st" || suf == "nd" || suf == "rd" || suf == "th") w.remove_suffix(2);
  }
  if (!all_digits(w) || w.size() > 2) return std::nullopt;
  unsigned d = static_cast<unsigned>(std::stoul(std::string(w)));
  if (d < 1 || d > 31) return std::nullopt;
  return d;
}

inline bool is_year_field(std::string_view w) { return all_digits(w) && w.size() >= 1 && w.size() <= 4; }

inline std::string date_numeric_day_first(unsigned d, unsigned m, std::string_view year) {
  std::string out = "the";
  add(out, numbers::ordinal(d));
  add(out, "of");
  add(out, kMonths[m - 1]);
  if (!year.empty()) add(out, year_words(year));
  return out;
}

inline std::string date_month_first(unsigned m, std::optional<unsigned> d, std::string_view year) {
  std::string out(kMonths[m - 1]);
  if (d) add(out, numbers::ordinal(*d));
  if (!year.empty()) add(out, year_words(year));
  return out;
}

}  // namespace verbal_detail

namespace verbalizers {

using namespace verbal_detail;

inline std::string plain(std::string_view s) { return std::string(s); }

inline std::string cardinal(std::string_view s) {
  s = strip(s);
  bool neg = false;
  if (!s.empty() && s.front() == '-') {
    neg = true;
    s.remove_prefix(1);
  }
  std::uint64_t v = numbers::parse_integer(s, true);
  std::string out = neg ? "minus" : "";
  add(out, numbers::cardinal(v));
  return out;
}

inline std::string ordinal(std::string_view s) {
  s = strip(s);
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  if (s.size() > 2) {
    std::string suf = lower(s.substr(s.size() - 2));
    if (suf == "st" || suf == "nd" || suf == "rd" || suf == "th") s.remove_suffix(2);
  }
  return numbers::ordinal(numbers::parse_integer(s, true));
}

inline std::string digit(std::string_view s) { return numbers::digits(strip(s)); }

inline std::string decimal(std::string_view s) {
  auto parts = fields(s);
  if (parts.empty() || parts.size() > 2) fail("not a decimal", s);
  auto n = parse_number(parts[0]);
  if (!n) fail("not a decimal", s);
  std::string out = number_words(*n);
  if (parts.size() == 2) {
    auto sc = scale_word(parts[1]);
    if (!sc) fail("not a decimal", s);
    add(out, *sc);
  } else if (!n->fraction) {
    fail("not a decimal", s);
  }
  return out;
}

inline std::string date(std::string_view s) {
  s = strip(s);
  // bare year
  if (s.size() == 4 && all_digits(s) && s.front() != '0') return year_words(s);
  // decades: 1990s, 1990's, '90s, 90s
  {
    std::string_view d = s;
    if (!d.empty() && (d.front() == '\'' )) d.remove_prefix(1);
    if (d.size() >= 3 && lower(d.back()) == 's') {
      d.remove_suffix(1);
      if (!d.empty() && d.back() == '\'') d.remove_suffix(1);
      if ((d.size() == 4 || d.size() == 2) && all_digits(d) && d.back() == '0') {
        std::string read = d.size() == 4 ? year_words(d) : pair_words(static_cast<unsigned>(std::stoul(std::string(d))));
        auto pos = read.rfind(' ');
        std::size_t start = pos == std::string::npos ? 0 : pos + 1;
        return read.substr(0, start) + numbers::plural_word(read.substr(start));
      }
    }
  }
  // numeric forms
  for (char sep : {'/', '.', '-'}) {
    if (s.find(sep) == std::string_view::npos) continue;
    std::vector<std::string_view> p;
    std::size_t i = 0;
    while (true) {
      auto j = s.find(sep, i);
      p.push_back(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
      if (j == std::string_view::npos) break;
      i = j + 1;
    }
    if (p.size() != 3) continue;
    for (auto& f : p)
      if (!all_digits(f)) fail("not a date", s);
    if (sep == '-' && p[0].size() == 4) {
      unsigned m = static_cast<unsigned>(std::stoul(std::string(p[1])));
      unsigned d = static_cast<unsigned>(std::stoul(std::string(p[2])));
      if (m < 1 || m > 12 || d < 1 || d > 31 || p[1].size() > 2 || p[2].size() > 2) fail("not a date", s);
      return date_month_first(m, d, p[0]);
    }
    if (p[0].size() > 2 || p[1].size() > 2 || (p[2].size() != 2 && p[2].size() != 4)) fail("not a date", s);
    unsigned d = static_cast<unsigned>(std::stoul(std::string(p[0])));
    unsigned m = static_cast<unsigned>(std::stoul(std::string(p[1])));
    if (m < 1 || m > 12 || d < 1 || d > 31) fail("not a date", s);
    return date_numeric_day_first(d, m, p[2]);
  }
  // worded forms
  auto w = fields(s);
  if (w.size() < 2 || w.size() > 3) fail("not a date", s);
  if (auto m = parse_month(w[0])) {
    if (w.size() == 2 && w[1].size() == 4 && all_digits(w[1])) return date_month_first(*m, std::nullopt, w[1]);
    auto d = parse_day(w[1]);
    if (!d) fail("not a date", s);
    if (w.size() == 3 && !is_year_field(w[2])) fail("not a date", s);
    return date_month_first(*m, d, w.size() == 3 ? w[2] : std::string_view{});
  }
  auto d = parse_day(w[0]);
  auto m = parse_month(w[1]);
  if (!d || !m) fail("not a date", s);
  std::string_view year;
  if (w.size() == 3) {
    year = w[2];
    if (!is_year_field(year)) fail("not a date", s);
  }
  return date_numeric_day_first(*d, *m, year);
}

inline std::string telephone(std::string_view s) {
  std::string out;
  bool pending_sep = false;
  bool any_digit = false;
  for (char c : s) {
    if (is_digit(c)) {
      if (pending_sep && any_digit) add(out, "sil");
      pending_sep = false;
      any_digit = true;
      add(out, numbers::digit_word(c));
    } else if (c == '-' || c == ' ' || c == '(' || c == ')' || c == '.') {
      pending_sep = true;
    } else {
      fail("not a telephone number", s);
    }
  }
  if (!any_digit) fail("no digits in telephone number", s);
  return out;
}

namespace money_detail {

struct Currency {
  std::string_view singular;
  std::string_view plural;
  std::string_view minor_singular;
  std::string_view minor_plural;
};

inline const Currency* currency_for(std::string_view key) {
  static const std::map<std::string, Currency> table = {
      {"$", {"dollar", "dollars", "cent", "cents"}},
      {"us$", {"dollar", "dollars", "cent", "cents"}},
      {"usd", {"dollar", "dollars", "cent", "cents"}},
      {"dollar", {"dollar", "dollars", "cent", "cents"}},
      {"dollars", {"dollar", "dollars", "cent", "cents"}},
      {"\xC2\xA3", {"pound", "pounds", "penny", "pence"}},
      {"gbp", {"pound", "pounds", "penny", "pence"}},
      {"pounds", {"pound", "pounds", "penny", "pence"}},
      {"\xE2\x82\xAC", {"euro", "euros", "cent", "cents"}},
      {"eur", {"euro", "euros", "cent", "cents"}},
      {"euros", {"euro", "euros", "cent", "cents"}},
      {"\xC2\xA5", {"yen", "yen", "sen", "sen"}},
      {"jpy", {"yen", "yen", "sen", "sen"}},
      {"yen", {"yen", "yen", "sen", "sen"}},
      {"\xE2\x82\xB9", {"rupee", "rupees", "paisa", "paise"}},
      {"inr", {"rupee", "rupees", "paisa", "paise"}},
      {"rupees", {"rupee", "rupees", "paisa", "paise"}},
      {"won", {"won", "won", "jeon", "jeon"}},
      {"krw", {"won", "won", "jeon", "jeon"}},
      {"yuan", {"yuan", "yuan", "fen", "fen"}},
      {"cny", {"yuan", "yuan", "fen", "fen"}},
  };
  auto it = table.find(lower(key));
  return it == table.end() ? nullptr : &it->second;
}

inline std::string read(const Currency& cur, std::string_view amount, std::optional<std::string_view> scale,
                        std::string_view whole) {
  auto n = parse_number(amount);
  if (!n || n->negative) fail("not a money amount", whole);
  std::string out;
  if (scale) {
    out = number_words(*n);
    add(out, *scale);
    add(out, cur.plural);
    return out;
  }
  if (n->fraction && n->fraction->size() == 2) {
    unsigned minor = static_cast<unsigned>(std::stoul(*n->fraction));
    bool has_major = !n->integer.empty() && n->integer != "0";
    if (has_major) {
      add(out, numbers::cardinal(std::stoull(n->integer)));
      add(out, n->integer == "1" ? cur.singular : cur.plural);
    }
    if (minor) {
      if (has_major) add(out, "and");
      add(out, numbers::cardinal(minor));
      add(out, minor == 1 ? cur.minor_singular : cur.minor_plural);
    }
    if (out.empty()) {
      add(out, "zero");
      add(out, cur.plural);
    }
    return out;
  }
  out = number_words(*n);
  add(out, is_exactly_one(*n) ? cur.singular : cur.plural);
  return out;
}

}  // namespace money_detail

inline std::string money(std::string_view s) {
  using namespace money_detail;
  auto w = fields(s);
  if (w.empty()) fail("not a money amount", s);
  // split a leading symbol glued to the amount: "$5", "US$5", "£3.50"
  std::vector<std::string> parts;
  {
    std::string first(w[0]);
    std::size_t k = 0;
    while (k < first.size() && !is_digit(first[k]) && first[k] != '.') ++k;
    if (k > 0 && k < first.size()) {
      parts.push_back(first.substr(0, k));
      parts.push_back(first.substr(k));
    } else {
      parts.push_back(first);
    }
    for (std::size_t i = 1; i < w.size(); ++i) parts.emplace_back(w[i]);
  }
  // a currency code glued after the amount: "5USD"
  if (parts.size() == 1) fail("not a money amount", s);
  const Currency* cur = currency_for(parts.front());
  std::vector<std::string> rest;
  if (cur) {
    rest.assign(parts.begin() + 1, parts.end());
  } else {
    cur = currency_for(parts.back());
    if (!cur) fail("no currency in money amount", s);
    rest.assign(parts.begin(), parts.end() - 1);
  }
  if (rest.empty() || rest.size() > 2) fail("not a money amount", s);
  std::optional<std::string_view> scale;
  if (rest.size() == 2) {
    scale = scale_word(rest[1]);
    if (!scale) fail("not a money amount", s);
  }
  return read(*cur, rest[0], scale, s);
}

namespace measure_detail {

struct Unit {
  std::string_view singular;
  std::string_view plural;
};

inline const std::map<std::string, Unit>& units() {
  static const std::map<std::string, Unit> table = {
      {"km", {"kilometer", "kilometers"}},
      {"m", {"meter", "meters"}},
      {"cm", {"centimeter", "centimeters"}},
      {"mm", {"millimeter", "millimeters"}},
      {"mi", {"mile", "miles"}},
      {"ft", {"foot", "feet"}},
      {"in", {"inch", "inches"}},
      {"yd", {"yard", "yards"}},
      {"kg", {"kilogram", "kilograms"}},
      {"g", {"gram", "grams"}},
      {"mg", {"milligram", "milligrams"}},
      {"lb", {"pound", "pounds"}},
      {"lbs", {"pound", "pounds"}},
      {"oz", {"ounce", "ounces"}},
      {"t", {"ton", "tons"}},
      {"l", {"liter", "liters"}},
      {"L", {"liter", "liters"}},
      {"ml", {"milliliter", "milliliters"}},
      {"mL", {"milliliter", "milliliters"}},
      {"ha", {"hectare", "hectares"}},
      {"km2", {"square kilometer", "square kilometers"}},
      {"km\xC2\xB2", {"square kilometer", "square kilometers"}},
      {"m2", {"square meter", "square meters"}},
      {"m\xC2\xB2", {"square meter", "square meters"}},
      {"sq mi", {"square mile", "square miles"}},
      {"km/h", {"kilometer per hour", "kilometers per hour"}},
      {"mph", {"mile per hour", "miles per hour"}},
      {"m/s", {"meter per second", "meters per second"}},
      {"%", {"percent", "percent"}},
      {"s", {"second", "seconds"}},
      {"ms", {"millisecond", "milliseconds"}},
      {"min", {"minute", "minutes"}},
      {"h", {"hour", "hours"}},
      {"hr", {"hour", "hours"}},
      {"Hz", {"hertz", "hertz"}},
      {"kHz", {"kilohertz", "kilohertz"}},
      {"MHz", {"megahertz", "megahertz"}},
      {"GHz", {"gigahertz", "gigahertz"}},
      {"W", {"watt", "watts"}},
      {"kW", {"kilowatt", "kilowatts"}},
      {"MW", {"megawatt", "megawatts"}},
      {"V", {"volt", "volts"}},
      {"kB", {"kilobyte", "kilobytes"}},
      {"KB", {"kilobyte", "kilobytes"}},
      {"MB", {"megabyte", "megabytes"}},
      {"GB", {"gigabyte", "gigabytes"}},
      {"TB", {"terabyte", "terabytes"}},
      {"\xC2\xB0" "C", {"degree celsius", "degrees celsius"}},
      {"\xC2\xB0" "F", {"degree fahrenheit", "degrees fahrenheit"}},
  };
  return table;
}

}  // namespace measure_detail

inline std::string measure(std::string_view s) {
  s = strip(s);
  // amount is the longest numeric prefix
  std::size_t k = 0;
  if (k < s.size() && (s[k] == '-' || s[k] == '+')) ++k;
  while (k < s.size() && (is_digit(s[k]) || s[k] == '.' || s[k] == ',')) ++k;
  std::string_view amount = s.substr(0, k);
  std::string_view unit = strip(s.substr(k));
  if (amount.empty() || unit.empty()) fail("not a measure", s);
  auto n = parse_number(amount);
  if (!n) fail("not a measure", s);
  const auto& table = measure_detail::units();
  auto it = table.find(std::string(unit));
  if (it == table.end()) {
    // collapse internal runs of spaces ("sq  mi")
    std::string joined;
    for (auto f : fields(unit)) {
      if (!joined.empty()) joined += ' ';
      joined += f;
    }
    it = table.find(joined);
    if (it == table.end()) fail("unknown unit", s);
  }
  std::string out = number_words(*n);
  add(out, is_exactly_one(*n) ? it->second.singular : it->second.plural);
  return out;
}

namespace fraction_detail {

inline std::string denominator_words(std::uint64_t den, bool plural) {
  std::string w;
  if (den == 2) w = "half";
  else if (den == 4) w = "quarter";
  else w = numbers::ordinal(den);
  if (!plural) return w;
  auto pos = w.rfind(' ');
  std::size_t start = pos == std::string::npos ? 0 : pos + 1;
  return w.substr(0, start) + numbers::plural_word(std::string_view(w).substr(start));
}

inline std::string simple(std::uint64_t num, std::uint64_t den, bool mixed) {
  if (den == 0) throw VerbalizeError("zero denominator");
  std::string out;
  if (den == 1) {
    add(out, numbers::cardinal(num));
    add(out, "over one");
    return out;
  }
  if (mixed && num == 1)
    add(out, "a");
  else
    add(out, numbers::cardinal(num));
  add(out, denominator_words(den, num != 1));
  return out;
}

inline std::optional<std::pair<unsigned, unsigned>> vulgar(char32_t c) {
  static const std::map<char32_t, std::pair<unsigned, unsigned>> table = {
      {U'½', {1, 2}}, {U'⅓', {1, 3}}, {U'⅔', {2, 3}}, {U'¼', {1, 4}}, {U'¾', {3, 4}},
      {U'⅕', {1, 5}}, {U'⅖', {2, 5}}, {U'⅗', {3, 5}}, {U'⅘', {4, 5}}, {U'⅙', {1, 6}},
      {U'⅚', {5, 6}}, {U'⅛', {1, 8}}, {U'⅜', {3, 8}}, {U'⅝', {5, 8}}, {U'⅞', {7, 8}}};
  auto it = table.find(c);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

}  // namespace fraction_detail

inline std::string fraction(std::string_view s) {
  using namespace fraction_detail;
  s = strip(s);
  std::string out;
  if (!s.empty() && s.front() == '-') {
    out = "minus";
    s.remove_prefix(1);
  }
  // vulgar glyph, optionally after a whole number
  auto cps = utf8::decode(s);
  if (!cps.empty()) {
    if (auto v = vulgar(cps.back())) {
      std::string whole;
      for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
        if (cps[i] == U' ') continue;
        if (cps[i] > 0x7F || !is_digit(static_cast<char>(cps[i]))) fail("not a fraction", s);
        whole += static_cast<char>(cps[i]);
      }
      if (!whole.empty()) {
        add(out, numbers::cardinal(numbers::parse_integer(whole)));
        add(out, "and");
      }
      add(out, simple(v->first, v->second, !whole.empty()));
      return out;
    }
  }
  auto w = fields(s);
  if (w.empty() || w.size() > 2) fail("not a fraction", s);
  std::string_view frac = w.back();
  auto slash = frac.find('/');
  if (slash == std::string_view::npos) fail("not a fraction", s);
  std::uint64_t num = numbers::parse_integer(frac.substr(0, slash), true);
  std::uint64_t den = numbers::parse_integer(frac.substr(slash + 1), true);
  if (w.size() == 2) {
    add(out, numbers::cardinal(numbers::parse_integer(w[0], true)));
    add(out, "and");
  }
  add(out, simple(num, den, w.size() == 2));
  return out;
}

inline std::string time(std::string_view s) {
  s = strip(s);
  // trailing am/pm marker, with or without space and dots
  std::optional<std::string_view> marker;
  {
    std::string l = lower(s);
    for (auto [form, read] : std::initializer_list<std::pair<std::string_view, std::string_view>>{
             {"a.m.", "a m"}, {"p.m.", "p m"}, {"a.m", "a m"}, {"p.m", "p m"}, {"am", "a m"}, {"pm", "p m"}}) {
      if (l.size() > form.size() && l.substr(l.size() - form.size()) == form) {
        marker = read;
        s = strip(s.substr(0, s.size() - form.size()));
        break;
      }
    }
  }
  std::vector<std::string_view> p;
  std::size_t i = 0;
  while (true) {
    auto j = s.find(':', i);
    p.push_back(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  if (p.size() > 3 || (p.size() == 1 && !marker)) fail("not a time", s);
  for (auto f : p)
    if (!all_digits(f) || f.size() > 2) fail("not a time", s);
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k].size() != 2) fail("not a time", s);
  unsigned h = static_cast<unsigned>(std::stoul(std::string(p[0])));
  unsigned m = p.size() > 1 ? static_cast<unsigned>(std::stoul(std::string(p[1]))) : 0;
  if (h > 24 || m > 59 || (marker && (h == 0 || h > 12))) fail("not a time", s);
  std::string out = numbers::cardinal(h);
  if (m == 0) {
    if (!marker) add(out, (h == 0 || h > 12) ? "hundred" : "o'clock");
  } else {
    add(out, verbal_detail::pair_words(m));
  }
  if (p.size() == 3) {
    unsigned sec = static_cast<unsigned>(std::stoul(std::string(p[2])));
    if (sec > 59) fail("not a time", s);
    add(out, "and");
    add(out, numbers::cardinal(sec));
    add(out, sec == 1 ? "second" : "seconds");
  }
  if (marker) add(out, *marker);
  return out;
}

inline std::string address(std::string_view s) {
  std::string out;
  bool any_digit = false;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '-' || c == '.') {
      ++i;
      continue;
    }
    if (is_alpha(c)) {
      add(out, std::string(1, lower(c)));
      ++i;
      continue;
    }
    if (!is_digit(c)) fail("not an address", s);
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    std::string_view run = s.substr(i, j - i);
    any_digit = true;
    unsigned v = run.size() <= 4 ? static_cast<unsigned>(std::stoul(std::string(run))) : 0;
    if (run.size() <= 2 && run.front() != '0') {
      add(out, numbers::cardinal(v));
    } else if (run.size() == 3 && run.front() != '0') {
      add(out, numbers::kUnits[v / 100]);
      add(out, pair_words(v % 100));
    } else if (run.size() == 4 && run.front() != '0') {
      add(out, year_words(run));
    } else {
      add(out, numbers::digits(run));
    }
    i = j;
  }
  if (!any_digit) fail("address without a number", s);
  return out;
}

}  // namespace verbalizers

/// Names for individual characters used by VERBATIM and ELECTRONIC.
class SymbolNames {
 public:
  SymbolNames() {
    static const std::pair<const char*, const char*> defaults[] = {
        {"&", "and"}, {"#", "hash"}, {"@", "at"}, {"*", "asterisk"}, {"+", "plus"}, {"=", "equals"},
        {"%", "percent"}, {"/", "slash"}, {"\\", "backslash"}, {"~", "tilde"}, {"_", "underscore"},
        {"|", "vertical bar"}, {"^", "caret"}, {"<", "less than"}, {">", "greater than"},
        {"!", "exclamation mark"}, {"?", "question mark"}, {":", "colon"}, {";", "semicolon"},
        {".", "dot"}, {",", "comma"}, {"(", "left parenthesis"}, {")", "right parenthesis"},
        {"[", "left bracket"}, {"]", "right bracket"}, {"{", "left brace"}, {"}", "right brace"},
        {"\"", "quote"}, {"'", "apostrophe"}, {"$", "dollar"}, {"`", "backtick"}, {"-", "dash"},
        // Greek, lowercase then uppercase
        {"\xCE\xB1", "alpha"}, {"\xCE\xB2", "beta"}, {"\xCE\xB3", "gamma"}, {"\xCE\xB4", "delta"},
        {"\xCE\xB5", "epsilon"}, {"\xCE\xB6", "zeta"}, {"\xCE\xB7", "eta"}, {"\xCE\xB8", "theta"},
        {"\xCE\xB9", "iota"}, {"\xCE\xBA", "kappa"}, {"\xCE\xBB", "lambda"}, {"\xCE\xBC", "mu"},
        {"\xCE\xBD", "nu"}, {"\xCE\xBE", "xi"}, {"\xCE\xBF", "omicron"}, {"\xCF\x80", "pi"},
        {"\xCF\x81", "rho"}, {"\xCF\x82", "sigma"}, {"\xCF\x83", "sigma"}, {"\xCF\x84", "tau"},
        {"\xCF\x85", "upsilon"}, {"\xCF\x86", "phi"}, {"\xCF\x87", "chi"}, {"\xCF\x88", "psi"},
        {"\xCF\x89", "omega"}, {"\xCE\x91", "alpha"}, {"\xCE\x92", "beta"}, {"\xCE\x93", "gamma"},
        {"\xCE\x94", "delta"}, {"\xCE\x98", "theta"}, {"\xCE\x9B", "lambda"}, {"\xCE\xA0", "pi"},
        {"\xCE\xA3", "sigma"}, {"\xCE\xA6", "phi"}, {"\xCE\xA8", "psi"}, {"\xCE\xA9", "omega"},
        // common symbols
        {"\xE2\x80\x94", "dash"}, {"\xE2\x80\x93", "dash"}, {"\xC3\x97", "times"}, {"\xC2\xB0", "degree"},
        {"\xC2\xA7", "section"}, {"\xC2\xA9", "copyright"}, {"\xC2\xAE", "registered"},
        {"\xE2\x84\xA2", "trademark"}, {"\xE2\x82\xAC", "euro"}, {"\xC2\xA3", "pound"},
        {"\xC2\xA5", "yen"}, {"\xC2\xB1", "plus minus"}, {"\xC2\xB7", "dot"}, {"\xE2\x86\x92", "arrow"},
        {"\xE2\x88\x9E", "infinity"}, {"\xE2\x89\x88", "approximately"}, {"\xE2\x80\xA2", "bullet"},
    };
    for (auto& [sym, name] : defaults) names_[sym] = name;
  }

  /// Adds or overrides entries from a file of `symbol<TAB>name` lines.
  void load(std::istream& in, const std::string& source = "symbol map") {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
        throw DataError(source + ": line " + std::to_string(n) + ": expected symbol<TAB>name");
      names_[line.substr(0, tab)] = line.substr(tab + 1);
    }
  }

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open symbol map: " + path);
    load(in, path);
  }

  void set(std::string symbol, std::string name) { names_[std::move(symbol)] = std::move(name); }

  const std::string* find(const std::string& symbol) const {
    auto it = names_.find(symbol);
    return it == names_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, std::string> names_;
};

namespace verbalizers {

inline std::string electronic(std::string_view s, const SymbolNames& names) {
  std::string out;
  for (char32_t cp : utf8::decode(s)) {
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (is_alpha(c)) {
        add(out, std::string(1, lower(c)));
        continue;
      }
      if (is_digit(c)) {
        add(out, numbers::digit_word(c));
        continue;
      }
    }
    std::string sym = utf8::encode(cp);
    const std::string* name = names.find(sym);
    if (!name) fail("unnamed character in electronic token", s);
    add(out, *name);
  }
  if (out.empty()) fail("empty electronic token", s);
  return out;
}

inline std::string letters(std::string_view s) {
  std::string out;
  bool any = false;
  std::string_view body = s;
  bool possessive = false;
  if (body.size() > 2 && (body.substr(body.size() - 2) == "'s" || body.substr(body.size() - 2) == "'S")) {
    possessive = true;
    body.remove_suffix(2);
  }
  for (char32_t cp : utf8::decode(body)) {
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (is_alpha(c)) {
        add(out, std::string(1, lower(c)));
        any = true;
      } else if (is_digit(c)) {
        add(out, numbers::kUnits[static_cast<std::size_t>(c - '0')]);
      } else if (c == '&') {
        add(out, "and");
      } else if (c == '.' || c == '-' || c == ' ') {
      } else {
        fail("not a letter sequence", s);
      }
    } else {
      // non-ASCII letters are spoken as themselves
      add(out, utf8::encode(cp));
      any = true;
    }
  }
  if (!any) fail("no letters", s);
  if (possessive) out += "'s";
  return out;
}

inline std::string verbatim(std::string_view s, const SymbolNames& names) {
  std::string out;
  for (char32_t cp : utf8::decode(s)) {
    if (cp == U' ') continue;
    std::string sym = utf8::encode(cp);
    if (const std::string* name = names.find(sym)) {
      add(out, *name);
      continue;
    }
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (is_alpha(c)) {
        add(out, std::string(1, lower(c)));
        continue;
      }
      if (is_digit(c)) {
        add(out, numbers::kUnits[static_cast<std::size_t>(c - '0')]);
        continue;
      }
    }
    fail("unnamed character", s);
  }
  if (out.empty()) fail("empty verbatim token", s);
  return out;
}

}  // namespace verbalizers

/// Exactly one verbalizer per semiotic class.
class VerbalizerRegistry {
 public:
  using Fn = std::function<std::string(std::string_view)>;

  explicit VerbalizerRegistry(std::shared_ptr<const SymbolNames> names = std::make_shared<SymbolNames>())
      : names_(std::move(names)) {
    namespace v = verbalizers;
    set(SemioticClass::Plain, v::plain);
    set(SemioticClass::Punct, v::plain);
    set(SemioticClass::Date, v::date);
    set(SemioticClass::Letters, v::letters);
    set(SemioticClass::Cardinal, v::cardinal);
    set(SemioticClass::Verbatim, [n = names_](std::string_view s) { return v::verbatim(s, *n); });
    set(SemioticClass::Measure, v::measure);
    set(SemioticClass::Ordinal, v::ordinal);
    set(SemioticClass::Decimal, v::decimal);
    set(SemioticClass::Electronic, [n = names_](std::string_view s) { return v::electronic(s, *n); });
    set(SemioticClass::Digit, v::digit);
    set(SemioticClass::Money, v::money);
    set(SemioticClass::Fraction, v::fraction);
    set(SemioticClass::Time, v::time);
    set(SemioticClass::Address, v::address);
    set(SemioticClass::Telephone, v::telephone);
  }

  void set(SemioticClass c, Fn fn) { fns_[class_id(c)] = std::move(fn); }

  bool has(SemioticClass c) const { return static_cast<bool>(fns_[class_id(c)]); }

  /// Throws VerbalizeError when the input does not fit the class rules.
  std::string apply(SemioticClass c, std::string_view before) const {
    if (before.empty()) throw VerbalizeError("empty token");
    return fns_[class_id(c)](before);
  }

  std::optional<std::string> try_apply(SemioticClass c, std::string_view before) const {
    try {
      return apply(c, before);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  /// Class verbalization, or the written form when the rules do not apply.
  std::string apply_or_echo(SemioticClass c, std::string_view before) const {
    if (auto s = try_apply(c, before)) return *s;
    return std::string(before);
  }

  const SymbolNames& symbol_names() const { return *names_; }

 private:
  std::shared_ptr<const SymbolNames> names_;
  std::array<Fn, kClassCount> fns_;
};

}  // namespace deepnorm
