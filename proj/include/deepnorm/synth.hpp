// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepnorm/corpus.hpp"
#include "deepnorm/rng.hpp"
#include "deepnorm/verbalize.hpp"

// Synthetic labeled corpora. Each transforming token gets its own sentence:
//
//   [0-3 filler words] <class cue word> TOKEN [0-3 filler words] <punct>
//
// The cue word makes the class inferable from left context (a bare "2016" is
// a DATE after "in" and a CARDINAL after "about"). Spoken forms are produced
// by the verbalizer registry, so every row satisfies
// registry.apply(class, before) == after. PLAIN/PUNCT counts in the spec
// request extra filler-only sentences holding that many tokens of the class;
// filler around transforming tokens comes on top. An all-zero spec yields a
// small filler-only corpus (40 PLAIN and 10 PUNCT tokens).

namespace deepnorm {

using SynthSpec = std::array<std::size_t, kClassCount>;

/// Parses "DATE=100,CARDINAL=50".
inline SynthSpec parse_synth_spec(std::string_view text) {
  SynthSpec spec{};
  std::size_t i = 0;
  while (i < text.size()) {
    auto j = text.find(',', i);
    std::string_view item = text.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i);
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw UsageError("synth spec item needs CLASS=COUNT: '" + std::string(item) + "'");
    SemioticClass c;
    try {
      c = parse_class(item.substr(0, eq));
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
    std::string count(item.substr(eq + 1));
    if (count.empty() || count.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError("synth spec count must be a non-negative integer: '" + std::string(item) + "'");
    spec[class_id(c)] = std::stoull(count);
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return spec;
}

namespace synth_detail {

inline constexpr std::array<std::string_view, 48> kFiller = {
    "the",   "a",      "of",     "and",    "was",   "it",     "he",    "she",   "they",  "this",
    "that",  "city",   "team",   "river",  "album", "season", "town",  "group", "house", "school",
    "first", "new",    "after",  "which",  "is",    "had",    "were",  "as",    "also",  "later",
    "won",   "played", "built",  "opened", "moved", "became", "known", "local", "film",  "song",
    "road",  "their",  "church", "near",   "north", "south",  "small", "large"};

inline constexpr std::array<std::string_view, 3> kPunct = {".", ",", ";"};

inline std::span<const std::string_view> cues(SemioticClass c) {
  static const std::array<std::vector<std::string_view>, kClassCount> table = [] {
    std::array<std::vector<std::string_view>, kClassCount> t;
    t[class_id(SemioticClass::Plain)] = {"the"};
    t[class_id(SemioticClass::Punct)] = {"the"};
    t[class_id(SemioticClass::Date)] = {"in", "since", "until", "during", "on"};
    t[class_id(SemioticClass::Letters)] = {"from", "by", "called", "named"};
    t[class_id(SemioticClass::Cardinal)] = {"about", "over", "nearly", "with", "exactly"};
    t[class_id(SemioticClass::Verbatim)] = {"symbol", "sign"};
    t[class_id(SemioticClass::Measure)] = {"measuring", "weighing", "spanning"};
    t[class_id(SemioticClass::Ordinal)] = {"finished", "ranked", "placed"};
    t[class_id(SemioticClass::Decimal)] = {"averaging", "rated", "scored"};
    t[class_id(SemioticClass::Electronic)] = {"visit", "see", "at"};
    t[class_id(SemioticClass::Digit)] = {"code", "pin", "serial", "ref"};
    t[class_id(SemioticClass::Money)] = {"costing", "paid", "earned", "raised"};
    t[class_id(SemioticClass::Fraction)] = {"roughly", "almost", "only"};
    t[class_id(SemioticClass::Time)] = {"at", "around", "before", "after"};
    t[class_id(SemioticClass::Address)] = {"via", "along", "off"};
    t[class_id(SemioticClass::Telephone)] = {"call", "phone", "tel", "fax"};
    return t;
  }();
  return table[class_id(c)];
}

inline std::string digits(Rng& rng, std::size_t n, bool leading_zero_ok = true) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t lo = (i == 0 && !leading_zero_ok) ? 1 : 0;
    s += static_cast<char>('0' + rng.between(lo, 9));
  }
  return s;
}

inline std::string integer_of_length(Rng& rng, std::size_t len) { return digits(rng, len, len == 1); }

inline std::string upper_letters(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<char>('A' + rng.below(26));
  return s;
}

inline std::string lower_word(Rng& rng) { return std::string(rng.pick(std::span<const std::string_view>(kFiller))); }

inline std::string month_name(Rng& rng) {
  static constexpr std::array<std::string_view, 12> months = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  return std::string(months[rng.below(12)]);
}

inline std::string ordinal_suffix(std::uint64_t n) {
  if (n % 100 >= 11 && n % 100 <= 13) return "th";
  switch (n % 10) {
    case 1: return "st";
    case 2: return "nd";
    case 3: return "rd";
    default: return "th";
  }
}

/// Random written form of class `c`.
inline std::string sample_before(SemioticClass c, Rng& rng) {
  switch (c) {
    case SemioticClass::Plain: return lower_word(rng);
    case SemioticClass::Punct: return std::string(rng.pick(std::span<const std::string_view>(kPunct)));
    case SemioticClass::Date: {
      auto year = std::to_string(rng.between(1900, 2030));
      double u = rng.unit();
      if (u < 0.7) return year;
      if (u < 0.85) return std::to_string(rng.between(1, 28)) + " " + month_name(rng) + " " + year;
      return month_name(rng) + " " + std::to_string(rng.between(1, 28)) + ", " + year;
    }
    case SemioticClass::Letters: return upper_letters(rng, static_cast<std::size_t>(rng.between(2, 5)));
    case SemioticClass::Cardinal: return integer_of_length(rng, static_cast<std::size_t>(rng.between(1, 4)));
    case SemioticClass::Verbatim: {
      static constexpr std::array<std::string_view, 10> syms = {
          "\xCE\xB1", "\xCE\xB2", "\xCE\xB3", "\xCE\xBB", "\xCF\x80", "\xCF\x89", "&", "#", "\xC2\xB0", "\xC3\x97"};
      return std::string(rng.pick(std::span<const std::string_view>(syms)));
    }
    case SemioticClass::Measure: {
      static constexpr std::array<std::string_view, 8> units = {"kg", "km", "cm", "mi", "%", "lb", "ft", "m"};
      return std::to_string(rng.between(1, 999)) + " " + std::string(rng.pick(std::span<const std::string_view>(units)));
    }
    case SemioticClass::Ordinal: {
      auto n = static_cast<std::uint64_t>(rng.between(1, 100));
      return std::to_string(n) + ordinal_suffix(n);
    }
    case SemioticClass::Decimal:
      return std::to_string(rng.between(0, 999)) + "." + digits(rng, static_cast<std::size_t>(rng.between(1, 2)));
    case SemioticClass::Electronic: {
      static constexpr std::array<std::string_view, 3> tlds = {".com", ".org", ".net"};
      std::string host = lower_word(rng) + lower_word(rng);
      std::string tld(rng.pick(std::span<const std::string_view>(tlds)));
      return rng.chance(0.5) ? "www." + host + tld : host + tld;
    }
    case SemioticClass::Digit: return digits(rng, static_cast<std::size_t>(rng.between(2, 6)));
    case SemioticClass::Money: {
      std::string sym = rng.chance(0.7) ? "$" : "\xC2\xA3";
      std::string amount = std::to_string(rng.between(1, 999));
      if (rng.chance(0.3)) amount += "." + digits(rng, 2);
      return sym + amount;
    }
    case SemioticClass::Fraction: {
      auto d = rng.between(2, 10);
      auto n = rng.between(1, d - 1);
      return std::to_string(n) + "/" + std::to_string(d);
    }
    case SemioticClass::Time: {
      std::string mm = std::to_string(rng.between(0, 5)) + digits(rng, 1);
      if (rng.chance(0.5)) return std::to_string(rng.between(1, 12)) + ":" + mm + (rng.chance(0.5) ? " pm" : " am");
      return std::to_string(rng.between(0, 23)) + ":" + mm;
    }
    case SemioticClass::Address: {
      double u = rng.unit();
      if (u < 0.4) return "I-" + std::to_string(rng.between(1, 99));
      if (u < 0.7) return "US " + std::to_string(rng.between(1, 999));
      return upper_letters(rng, 1) + std::to_string(rng.between(1, 99));
    }
    case SemioticClass::Telephone: {
      if (rng.chance(0.5)) return digits(rng, 3) + "-" + digits(rng, 3) + "-" + digits(rng, 4);
      return "(" + digits(rng, 3) + ") " + digits(rng, 3) + "-" + digits(rng, 4);
    }
  }
  return "x";
}

}  // namespace synth_detail

inline Corpus synth_corpus(const SynthSpec& spec, std::uint64_t seed,
                           const VerbalizerRegistry& registry = VerbalizerRegistry()) {
  using namespace synth_detail;
  Rng rng(seed);
  std::vector<Token> tokens;
  std::uint64_t sid = 0;
  std::uint32_t tid = 0;

  auto push = [&](SemioticClass c, std::string before) {
    Token t;
    t.sentence_id = sid;
    t.token_id = tid++;
    t.cls = c;
    t.after = registry.apply(c, before);
    t.before = std::move(before);
    tokens.push_back(std::move(t));
  };
  auto end_sentence = [&] {
    ++sid;
    tid = 0;
  };
  auto filler = [&](std::size_t lo, std::size_t hi) {
    auto n = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
    for (std::size_t i = 0; i < n; ++i) push(SemioticClass::Plain, lower_word(rng));
  };

  // interleave classes so every prefix of the corpus mixes all requested classes
  std::vector<SemioticClass> order;
  for (auto c : kAllClasses)
    if (is_transforming(c))
      for (std::size_t i = 0; i < spec[class_id(c)]; ++i) order.push_back(c);
  rng.shuffle(std::span<SemioticClass>(order));

  for (SemioticClass c : order) {
    filler(0, 3);
    push(SemioticClass::Plain, std::string(rng.pick(cues(c))));
    push(c, sample_before(c, rng));
    filler(0, 3);
    push(SemioticClass::Punct, sample_before(SemioticClass::Punct, rng));
    end_sentence();
  }

  std::size_t extra_plain = spec[class_id(SemioticClass::Plain)];
  std::size_t extra_punct = spec[class_id(SemioticClass::Punct)];
  if (order.empty() && extra_plain == 0 && extra_punct == 0) extra_plain = 40, extra_punct = 10;
  while (extra_plain || extra_punct) {
    std::size_t words = std::min<std::size_t>(extra_plain, static_cast<std::size_t>(rng.between(3, 8)));
    for (std::size_t i = 0; i < words; ++i) push(SemioticClass::Plain, lower_word(rng));
    extra_plain -= words;
    if (extra_punct) {
      push(SemioticClass::Punct, sample_before(SemioticClass::Punct, rng));
      --extra_punct;
    }
    end_sentence();
  }
  return Corpus(std::move(tokens), "synth:" + std::to_string(seed));
}

}  // namespace deepnorm
