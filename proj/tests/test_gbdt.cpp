// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "deepnorm/gbdt.hpp"
#include "deepnorm/rng.hpp"
#include "deepnorm/synth.hpp"
#include "oracles/split_oracle.hpp"

using namespace deepnorm;

namespace {

struct Tiny {
  std::size_t rows, cols;
  std::vector<std::uint16_t> x;
  std::vector<double> g, h;
};

// Gradients and hessians are multiples of 1/16, so every partial sum is
// exact and both searches see bit-identical gains.
Tiny random_tiny(Rng& rng) {
  Tiny t;
  t.rows = 2 + rng.below(49);
  t.cols = 1 + rng.below(4);
  std::uint64_t range = 2 + rng.below(10);
  t.x.resize(t.rows * t.cols);
  for (auto& v : t.x) v = static_cast<std::uint16_t>(rng.below(range) * (1 + rng.below(20)));
  t.g.resize(t.rows);
  t.h.resize(t.rows);
  for (std::size_t i = 0; i < t.rows; ++i) {
    t.g[i] = (static_cast<double>(rng.below(33)) - 16.0) / 16.0;
    t.h[i] = static_cast<double>(1 + rng.below(16)) / 16.0;
  }
  return t;
}

FeatureMatrix to_matrix(const Tiny& t) {
  FeatureMatrix m(t.rows, t.cols);
  m.data = t.x;
  return m;
}

EncodedCorpus separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  EncodedCorpus e{FeatureMatrix(n, 2), {}};
  for (std::size_t i = 0; i < n; ++i) {
    auto a = static_cast<std::uint16_t>(rng.below(100));
    auto b = static_cast<std::uint16_t>(rng.below(100));
    e.x(i, 0) = a;
    e.x(i, 1) = b;
    e.labels.push_back(static_cast<std::uint8_t>((a < 50) != (b < 30) ? class_id(SemioticClass::Date) : class_id(SemioticClass::Cardinal)));
  }
  return e;
}

std::string serialize(const gbdt::Ensemble& m) {
  std::ostringstream out;
  gbdt::save(m, out);
  return out.str();
}

}  // namespace

TEST(Split, MatchesExhaustiveSearch) {
  Rng rng(17);
  gbdt::Config cfg;
  cfg.min_child_weight = 0.25;
  for (int d = 0; d < 25; ++d) {
    Tiny t = random_tiny(rng);
    FeatureMatrix m = to_matrix(t);
    std::vector<std::uint32_t> rows32(t.rows);
    std::vector<std::size_t> rows(t.rows);
    for (std::size_t i = 0; i < t.rows; ++i) rows32[i] = static_cast<std::uint32_t>(rows[i] = i);
    gbdt::Split s = gbdt::find_best_split(m, rows32, t.g, t.h, cfg);
    oracle::BruteSplit b = oracle::best_split(t.x, t.cols, rows, t.g, t.h, cfg.lambda, cfg.min_child_weight, gbdt::kMinSplitGain);
    EXPECT_EQ(s.feature, b.feature) << "dataset " << d;
    if (b.feature >= 0) {
      EXPECT_EQ(static_cast<double>(s.threshold), b.threshold) << "dataset " << d;
      EXPECT_EQ(s.gain, b.gain) << "dataset " << d;
    }
  }
}

TEST(Split, TreeMatchesOracleTree) {
  Rng rng(23);
  gbdt::Config cfg;
  cfg.max_depth = 3;
  cfg.min_child_weight = 0.25;
  for (int d = 0; d < 25; ++d) {
    Tiny t = random_tiny(rng);
    std::vector<std::uint32_t> rows32(t.rows);
    std::vector<std::size_t> rows(t.rows);
    for (std::size_t i = 0; i < t.rows; ++i) rows32[i] = static_cast<std::uint32_t>(rows[i] = i);
    gbdt::Tree tree = gbdt::build_tree(to_matrix(t), rows32, t.g, t.h, cfg);
    std::vector<oracle::BruteNode> want;
    oracle::grow_tree(want, t.x, t.cols, rows, t.g, t.h, cfg.lambda, cfg.min_child_weight, gbdt::kMinSplitGain,
                      cfg.learning_rate, 0, cfg.max_depth);
    ASSERT_EQ(tree.nodes.size(), want.size()) << "dataset " << d;
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(tree.nodes[i].feature, want[i].feature);
      EXPECT_EQ(tree.nodes[i].threshold, want[i].threshold);
      EXPECT_EQ(tree.nodes[i].left, want[i].left);
      EXPECT_EQ(tree.nodes[i].right, want[i].right);
      EXPECT_DOUBLE_EQ(tree.nodes[i].weight, want[i].weight);
    }
    EXPECT_LE(tree.depth(), cfg.max_depth);
  }
}

TEST(Split, NoSplitOnConstantFeature) {
  FeatureMatrix m(4, 1);
  std::vector<std::uint32_t> rows = {0, 1, 2, 3};
  std::vector<double> g = {1, -1, 1, -1}, h = {1, 1, 1, 1};
  EXPECT_EQ(gbdt::find_best_split(m, rows, g, h, gbdt::Config{}).feature, -1);
}

TEST(Fit, SeparableWithinTenRounds) {
  EncodedCorpus e = separable(300, 1);
  gbdt::Config cfg;
  cfg.rounds = 10;
  cfg.min_child_weight = 0.05;
  auto res = gbdt::fit(e, nullptr, cfg);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < e.x.rows; ++i) ok += class_id(res.model.predict_class(e.x.row(i))) == e.labels[i];
  EXPECT_EQ(ok, e.x.rows);
}

TEST(Fit, ConstantLabelIsDegenerate) {
  EncodedCorpus e = separable(50, 2);
  for (auto& l : e.labels) l = static_cast<std::uint8_t>(class_id(SemioticClass::Digit));
  auto res = gbdt::fit(e, nullptr, gbdt::Config{});
  EXPECT_TRUE(res.model.degenerate);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::uint16_t> x = {static_cast<std::uint16_t>(rng.below(257)), static_cast<std::uint16_t>(rng.below(257))};
    EXPECT_EQ(res.model.predict_class(x), SemioticClass::Digit);
  }
}

TEST(Fit, DimensionMismatch) {
  EncodedCorpus e = separable(20, 3);
  EncodedCorpus dev{FeatureMatrix(5, 3), std::vector<std::uint8_t>(5, 0)};
  EXPECT_THROW(gbdt::fit(e, &dev, gbdt::Config{}), UsageError);
  e.labels.pop_back();
  EXPECT_THROW(gbdt::fit(e, nullptr, gbdt::Config{}), UsageError);
}

TEST(Predict, EmptyEnsembleIsUniform) {
  gbdt::Ensemble m;
  m.width = 3;
  std::vector<std::uint16_t> x = {1, 2, 3};
  for (double p : m.predict_proba(x)) EXPECT_DOUBLE_EQ(p, 1.0 / 16.0);
  EXPECT_THROW(m.predict_proba(std::vector<std::uint16_t>{1}), UsageError);
  gbdt::Ensemble back;
  std::istringstream in(serialize(m));
  back = gbdt::load(in);
  for (double p : back.predict_proba(x)) EXPECT_DOUBLE_EQ(p, 1.0 / 16.0);
}

TEST(Predict, ProbabilitiesSumToOne) {
  EncodedCorpus e = separable(200, 5);
  gbdt::Config cfg;
  cfg.rounds = 20;
  auto m = gbdt::fit(e, nullptr, cfg).model;
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint16_t> x = {static_cast<std::uint16_t>(rng.below(257)), static_cast<std::uint16_t>(rng.below(257))};
    double s = 0;
    for (double p : m.predict_proba(x)) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(ModelFile, RoundTripPredictions) {
  EncodedCorpus e = separable(200, 7);
  gbdt::Config cfg;
  cfg.rounds = 15;
  auto m = gbdt::fit(e, nullptr, cfg).model;
  std::istringstream in(serialize(m));
  auto back = gbdt::load(in);
  EXPECT_EQ(serialize(back), serialize(m));
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::uint16_t> x = {static_cast<std::uint16_t>(rng.below(257)), static_cast<std::uint16_t>(rng.below(257))};
    EXPECT_EQ(back.predict_proba(x), m.predict_proba(x));
  }
}

TEST(ModelFile, CorruptionDetected) {
  EncodedCorpus e = separable(50, 9);
  gbdt::Config cfg;
  cfg.rounds = 3;
  std::string bytes = serialize(gbdt::fit(e, nullptr, cfg).model);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  EXPECT_THROW(gbdt::load(a), DataError);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::istringstream b(bad_version);
  EXPECT_THROW(gbdt::load(b), DataError);
  std::istringstream c(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(gbdt::load(c), DataError);
  std::istringstream d(bytes + "x");
  EXPECT_THROW(gbdt::load(d), DataError);
}

TEST(Fit, TrainLossMonotoneOnToyCorpus) {
  Corpus c = synth_corpus(parse_synth_spec("DATE=150,CARDINAL=150,DIGIT=150,LETTERS=150"), 1);
  EncodedCorpus e = encode_corpus(c, 10);
  gbdt::Config cfg;
  cfg.rounds = 60;
  auto res = gbdt::fit(e, nullptr, cfg);
  ASSERT_EQ(res.history.size(), 60u);
  for (std::size_t i = 1; i < res.history.size(); ++i)
    EXPECT_LE(res.history[i].train_loss, res.history[i - 1].train_loss + 1e-12) << "round " << i + 1;
}

TEST(Fit, DeterministicAndThreadIndependent) {
  Corpus c = synth_corpus(parse_synth_spec("DATE=60,CARDINAL=60,MONEY=60"), 2);
  EncodedCorpus e = encode_corpus(c, 10);
  auto [tr, dv] = split_corpus(c, 0.2, 1);
  EncodedCorpus et = encode_corpus(tr, 10), ed = encode_corpus(dv, 10);
  gbdt::Config cfg;
  cfg.rounds = 15;
  std::string a = serialize(gbdt::fit(et, &ed, cfg).model);
  EXPECT_EQ(a, serialize(gbdt::fit(et, &ed, cfg).model));
  cfg.threads = 3;
  EXPECT_EQ(a, serialize(gbdt::fit(et, &ed, cfg).model));
}

TEST(Fit, EarlyStoppingTruncatesToBestRound) {
  Corpus c = synth_corpus(parse_synth_spec("DATE=80,CARDINAL=80"), 4);
  auto [tr, dv] = split_corpus(c, 0.2, 1);
  EncodedCorpus et = encode_corpus(tr, 10), ed = encode_corpus(dv, 10);
  gbdt::Config cfg;
  cfg.rounds = 200;
  cfg.early_stopping_patience = 3;
  auto res = gbdt::fit(et, &ed, cfg);
  EXPECT_EQ(res.model.round_count(), res.best_round);
  EXPECT_LE(res.history.size(), res.best_round + cfg.early_stopping_patience);
}
