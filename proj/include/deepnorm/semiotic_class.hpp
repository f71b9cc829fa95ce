// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "deepnorm/error.hpp"

namespace deepnorm {

/// The closed set of token categories. Ids follow the row order of the
/// classwise accuracy report, with TELEPHONE last.
enum class SemioticClass : std::uint8_t {
  Plain,
  Punct,
  Date,
  Letters,
  Cardinal,
  Verbatim,
  Measure,
  Ordinal,
  Decimal,
  Electronic,
  Digit,
  Money,
  Fraction,
  Time,
  Address,
  Telephone,
};

inline constexpr std::size_t kClassCount = 16;

inline constexpr std::array<std::string_view, kClassCount> kClassNames = {
    "PLAIN",   "PUNCT",  "DATE",       "LETTERS", "CARDINAL", "VERBATIM",
    "MEASURE", "ORDINAL", "DECIMAL",   "ELECTRONIC", "DIGIT", "MONEY",
    "FRACTION", "TIME",  "ADDRESS",    "TELEPHONE"};

inline constexpr std::array<SemioticClass, kClassCount> kAllClasses = {
    SemioticClass::Plain,    SemioticClass::Punct,      SemioticClass::Date,
    SemioticClass::Letters,  SemioticClass::Cardinal,   SemioticClass::Verbatim,
    SemioticClass::Measure,  SemioticClass::Ordinal,    SemioticClass::Decimal,
    SemioticClass::Electronic, SemioticClass::Digit,    SemioticClass::Money,
    SemioticClass::Fraction, SemioticClass::Time,       SemioticClass::Address,
    SemioticClass::Telephone};

constexpr std::size_t class_id(SemioticClass c) { return static_cast<std::size_t>(c); }

constexpr std::string_view class_name(SemioticClass c) { return kClassNames[class_id(c)]; }

inline SemioticClass class_from_id(std::size_t id) {
  if (id >= kClassCount) throw DataError("class id out of range: " + std::to_string(id));
  return static_cast<SemioticClass>(id);
}

inline std::optional<SemioticClass> try_parse_class(std::string_view s) {
  for (std::size_t i = 0; i < kClassCount; ++i)
    if (kClassNames[i] == s) return static_cast<SemioticClass>(i);
  return std::nullopt;
}

inline SemioticClass parse_class(std::string_view s) {
  if (auto c = try_parse_class(s)) return *c;
  throw DataError("unknown semiotic class: '" + std::string(s) + "'");
}

/// PLAIN and PUNCT pass through unchanged; every other class is rewritten.
constexpr bool is_transforming(SemioticClass c) {
  return c != SemioticClass::Plain && c != SemioticClass::Punct;
}

}  // namespace deepnorm
