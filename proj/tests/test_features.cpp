// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "deepnorm/features.hpp"
#include "deepnorm/rng.hpp"
#include "deepnorm/synth.hpp"
#include "oracles/window_oracle.hpp"

using namespace deepnorm;

namespace {

Corpus sentence_of(const std::vector<std::string>& words) {
  std::vector<Token> toks;
  for (std::uint32_t i = 0; i < words.size(); ++i) toks.push_back({0, i, SemioticClass::Plain, words[i], words[i]});
  return Corpus(std::move(toks));
}

std::vector<std::uint16_t> codes(std::span<const std::uint16_t> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(EncodeWindow, LoneYear) {
  FeatureVector f = encode_window(sentence_of({"2016"}), 0, 0, 4);
  EXPECT_EQ(codes(f.left()), (std::vector<std::uint16_t>{0, 0, 0, 0}));
  EXPECT_EQ(codes(f.middle()), (std::vector<std::uint16_t>{50, 48, 49, 54}));
  EXPECT_EQ(codes(f.right()), (std::vector<std::uint16_t>{0, 0, 0, 0}));
}

TEST(EncodeWindow, LeftContextEndsAtPrecedingToken) {
  FeatureVector f = encode_window(sentence_of({"went", "on", "a"}), 0, 2, 2);
  EXPECT_EQ(codes(f.left()), (std::vector<std::uint16_t>{'o', 'n'}));
}

TEST(EncodeWindow, LongTokenTruncated) {
  FeatureVector f = encode_window(sentence_of({"abcdefghijkl"}), 0, 0, 10);
  auto oracle_codes = oracle::window({"abcdefghijkl"}, 0, 10);
  EXPECT_EQ(f.values, oracle_codes);
  EXPECT_EQ(f.middle().back(), 'j');
}

TEST(EncodeWindow, NonAsciiBucket) {
  FeatureVector f = encode_window(sentence_of({"é"}), 0, 0, 2);
  EXPECT_EQ(f.middle()[0], 256);
  EXPECT_EQ(f.middle()[1], 0);
}

TEST(EncodeWindow, OutOfBounds) {
  Corpus c = sentence_of({"a", "b"});
  EXPECT_THROW(encode_window(c, 1, 0, 3), UsageError);
  EXPECT_THROW(encode_window(c, 0, 2, 3), UsageError);
}

TEST(EncodeWindow, MatchesSlicingOracle) {
  Rng rng(9);
  const std::vector<std::string> words = {"a", "to", "the", "2016", "é!", "x y", "3.5", "Mr.", "ünï", "longerword"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> s(1 + rng.below(8));
    for (auto& w : s) w = words[rng.below(words.size())];
    std::size_t k = 1 + rng.below(12);
    Corpus c = sentence_of(s);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_EQ(encode_window(c, 0, i, k).values, oracle::window(s, i, k)) << trial;
  }
}

TEST(EncodeCorpus, ShapeAndDeterminism) {
  std::vector<Token> toks;
  for (std::uint32_t i = 0; i < 10; ++i) toks.push_back({i / 5, i % 5, SemioticClass::Plain, "w" + std::to_string(i), "w"});
  Corpus c(toks);
  EncodedCorpus e = encode_corpus(c, 10);
  EXPECT_EQ(e.x.rows, 10u);
  EXPECT_EQ(e.x.cols, 30u);
  EXPECT_EQ(e.labels.size(), 10u);
  EXPECT_EQ(encode_corpus(c, 40).x.cols, 120u);
  EXPECT_EQ(encode_corpus(c, 10).x.data, e.x.data);
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::size_t s = i / 5;
    FeatureVector f = encode_window(c, s, i % 5, 10);
    EXPECT_EQ(codes(e.x.row(i)), f.values);
  }
  EXPECT_THROW(encode_corpus(c, 0), UsageError);
}

TEST(EncodeCorpus, UnlabeledHasNoLabels) {
  Corpus c({{0, 0, std::nullopt, "a", std::nullopt}});
  EXPECT_TRUE(encode_corpus(c, 3).labels.empty());
}
