// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "deepnorm/corpus.hpp"
#include "deepnorm/error.hpp"
#include "deepnorm/utf8.hpp"

namespace deepnorm {

/// Padding code.
inline constexpr std::uint16_t kPadCode = 0;
/// Code shared by every non-ASCII character.
inline constexpr std::uint16_t kNonAsciiCode = 256;

inline std::uint16_t char_code(char32_t cp) {
  return (cp == 0 || cp > 0x7F) ? kNonAsciiCode : static_cast<std::uint16_t>(cp);
}

/// [k left-context codes | k focus-token codes | k right-context codes]
struct FeatureVector {
  std::size_t k = 0;
  std::vector<std::uint16_t> values;

  std::span<const std::uint16_t> left() const { return std::span(values).subspan(0, k); }
  std::span<const std::uint16_t> middle() const { return std::span(values).subspan(k, k); }
  std::span<const std::uint16_t> right() const { return std::span(values).subspan(2 * k, k); }
};

namespace features_detail {

// Writes the feature codes for token `pos` of `sentence` into out[0, 3k).
inline void encode_into(std::span<const Token> sentence, std::size_t pos, std::size_t k, std::uint16_t* out) {
  std::fill(out, out + 3 * k, kPadCode);

  auto focus = utf8::decode(sentence[pos].before);
  for (std::size_t i = 0; i < k && i < focus.size(); ++i) out[k + i] = char_code(focus[i]);

  // left: the last k characters of "t0 t1 ... t(pos-1)", right-aligned
  std::vector<char32_t> left;
  for (std::size_t j = pos; j-- > 0 && left.size() < k;) {
    auto cps = utf8::decode(sentence[j].before);
    if (j + 1 < pos) cps.push_back(U' ');
    left.insert(left.begin(), cps.begin(), cps.end());
  }
  std::size_t take = std::min(k, left.size());
  for (std::size_t i = 0; i < take; ++i) out[k - take + i] = char_code(left[left.size() - take + i]);

  // right: the first k characters of "t(pos+1) ... tn"
  std::vector<char32_t> right;
  for (std::size_t j = pos + 1; j < sentence.size() && right.size() < k; ++j) {
    if (j > pos + 1) right.push_back(U' ');
    auto cps = utf8::decode(sentence[j].before);
    right.insert(right.end(), cps.begin(), cps.end());
  }
  for (std::size_t i = 0; i < k && i < right.size(); ++i) out[2 * k + i] = char_code(right[i]);
}

}  // namespace features_detail

/// Context stops at sentence boundaries.
inline FeatureVector encode_window(const Corpus& c, std::size_t sentence_index, std::size_t token_index, std::size_t k) {
  if (k < 1) throw UsageError("window size must be at least 1");
  if (sentence_index >= c.sentence_count()) throw UsageError("sentence index out of bounds");
  auto sentence = c.sentence(sentence_index);
  if (token_index >= sentence.size()) throw UsageError("token index out of bounds");
  FeatureVector v{k, std::vector<std::uint16_t>(3 * k)};
  features_detail::encode_into(sentence, token_index, k, v.values.data());
  return v;
}

/// Row-major matrix of feature codes, one row per token.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint16_t> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}

  std::span<const std::uint16_t> row(std::size_t i) const { return std::span(data).subspan(i * cols, cols); }
  std::span<std::uint16_t> row(std::size_t i) { return std::span(data).subspan(i * cols, cols); }
  std::uint16_t operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::uint16_t& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }

  bool operator==(const FeatureMatrix&) const = default;
};

struct EncodedCorpus {
  FeatureMatrix x;
  std::vector<std::uint8_t> labels;  // class ids; empty for unlabeled corpora
};

inline EncodedCorpus encode_corpus(const Corpus& c, std::size_t k) {
  if (k < 1) throw UsageError("window size must be at least 1");
  EncodedCorpus e{FeatureMatrix(c.size(), 3 * k), {}};
  for (std::size_t s = 0; s < c.sentence_count(); ++s) {
    auto sentence = c.sentence(s);
    std::size_t base = c.sentence_begin(s);
    for (std::size_t i = 0; i < sentence.size(); ++i)
      features_detail::encode_into(sentence, i, k, e.x.row(base + i).data());
  }
  if (c.labeled()) {
    e.labels.reserve(c.size());
    for (const Token& t : c.tokens()) e.labels.push_back(static_cast<std::uint8_t>(class_id(*t.cls)));
  }
  return e;
}

/// Header "label,f0,...,f(3k-1)"; label column empty for unlabeled rows.
inline void write_feature_csv(std::ostream& out, const EncodedCorpus& e) {
  out << "label";
  for (std::size_t j = 0; j < e.x.cols; ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < e.x.rows; ++i) {
    if (!e.labels.empty()) out << class_name(class_from_id(e.labels[i]));
    for (std::size_t j = 0; j < e.x.cols; ++j) out << ',' << e.x(i, j);
    out << '\n';
  }
}

}  // namespace deepnorm
