// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "deepnorm/binary_io.hpp"
#include "deepnorm/error.hpp"
#include "deepnorm/features.hpp"
#include "deepnorm/semiotic_class.hpp"

// Multiclass gradient-boosted regression trees with a softmax objective.
//
// Each boosting round fits one tree per class to the second-order expansion
// of the softmax cross-entropy: g = p - 1{y = c}, h = p (1 - p). Splits are
// found by exact greedy search; features are small integer codes (0..256), so
// a per-node histogram over all code values enumerates every distinct
// threshold. A node routes x[f] < threshold to the left child. Leaf weights
// are -G / (H + lambda), scaled by the learning rate.

namespace deepnorm::gbdt {

inline constexpr std::size_t kBuckets = 257;
inline constexpr double kMinSplitGain = 1e-6;

struct Config {
  int max_depth = 6;
  double learning_rate = 0.3;
  std::size_t rounds = 100;
  std::size_t early_stopping_patience = 10;
  double min_child_weight = 1.0;
  double lambda = 1.0;
  std::size_t threads = 1;

  void validate() const {
    if (max_depth < 1) throw UsageError("max_depth must be positive");
    if (!(learning_rate > 0)) throw UsageError("learning_rate must be positive");
    if (rounds < 1) throw UsageError("rounds must be positive");
    if (early_stopping_patience < 1) throw UsageError("early_stopping_patience must be positive");
    if (!(min_child_weight > 0)) throw UsageError("min_child_weight must be positive");
    if (!(lambda > 0)) throw UsageError("lambda must be positive");
    if (threads < 1) throw UsageError("threads must be positive");
  }
};

struct Node {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double weight = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  double predict(std::span<const std::uint16_t> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const Node& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i].weight;
  }

  int depth() const { return depth_from(0); }

  bool operator==(const Tree&) const = default;

 private:
  int depth_from(std::size_t i) const {
    const Node& n = nodes[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
  }
};

using Probabilities = std::array<double, kClassCount>;

struct Ensemble {
  std::size_t width = 0;
  double learning_rate = 0.3;
  std::array<double, kClassCount> base_scores{};
  std::vector<std::vector<Tree>> rounds;  // rounds[r][class]
  bool degenerate = false;                // single-class training data

  std::size_t round_count() const { return rounds.size(); }

  void check_width(std::span<const std::uint16_t> x) const {
    if (x.size() != width)
      throw UsageError("feature width " + std::to_string(x.size()) + " does not match model width " +
                       std::to_string(width));
  }

  std::array<double, kClassCount> scores(std::span<const std::uint16_t> x) const {
    check_width(x);
    auto s = base_scores;
    for (const auto& round : rounds)
      for (std::size_t c = 0; c < kClassCount; ++c) s[c] += round[c].predict(x);
    return s;
  }

  Probabilities predict_proba(std::span<const std::uint16_t> x) const { return softmax(scores(x)); }

  /// Ties go to the lowest class id.
  SemioticClass predict_class(std::span<const std::uint16_t> x) const {
    auto p = predict_proba(x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < kClassCount; ++c)
      if (p[c] > p[best]) best = c;
    return class_from_id(best);
  }

  static Probabilities softmax(const std::array<double, kClassCount>& s) {
    double m = *std::max_element(s.begin(), s.end());
    Probabilities p;
    double z = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) z += (p[c] = std::exp(s[c] - m));
    for (double& v : p) v /= z;
    return p;
  }

  bool operator==(const Ensemble&) const = default;
};

// ---------------------------------------------------------------------------
// Split search and tree growth

struct Split {
  std::int32_t feature = -1;  // -1: no admissible split
  std::uint16_t threshold = 0;
  double gain = 0.0;
};

inline double leaf_objective(double g, double h, double lambda) { return g * g / (h + lambda); }

inline double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  return 0.5 * (leaf_objective(gl, hl, lambda) + leaf_objective(gr, hr, lambda) -
                leaf_objective(gl + gr, hl + hr, lambda));
}

/// Best split of `rows` over all features. Candidates are compared by gain
/// (strictly greater wins), so ties keep the lowest feature, then the lowest
/// threshold.
inline Split find_best_split(const FeatureMatrix& x, std::span<const std::uint32_t> rows, std::span<const double> g,
                             std::span<const double> h, const Config& cfg) {
  const std::size_t cols = x.cols;
  std::vector<double> hg(cols * kBuckets, 0.0), hh(cols * kBuckets, 0.0);
  std::vector<std::uint32_t> hn(cols * kBuckets, 0);
  double gt = 0, ht = 0;
  for (std::uint32_t r : rows) {
    const std::uint16_t* xr = &x.data[static_cast<std::size_t>(r) * cols];
    const double gr = g[r], hr = h[r];
    gt += gr;
    ht += hr;
    for (std::size_t f = 0; f < cols; ++f) {
      std::size_t b = f * kBuckets + xr[f];
      hg[b] += gr;
      hh[b] += hr;
      ++hn[b];
    }
  }
  Split best;
  for (std::size_t f = 0; f < cols; ++f) {
    double gl = 0, hl = 0;
    bool seen = false;
    for (std::size_t v = 0; v < kBuckets; ++v) {
      std::size_t b = f * kBuckets + v;
      if (!hn[b]) continue;
      if (seen) {
        double gr = gt - gl, hr = ht - hl;
        if (hl >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
          double gain = split_gain(gl, hl, gr, hr, cfg.lambda);
          if (gain > kMinSplitGain && gain > best.gain) {
            best.feature = static_cast<std::int32_t>(f);
            best.threshold = static_cast<std::uint16_t>(v);
            best.gain = gain;
          }
        }
      }
      seen = true;
      gl += hg[b];
      hl += hh[b];
    }
  }
  return best;
}

namespace detail {

inline std::int32_t grow(Tree& tree, const FeatureMatrix& x, std::vector<std::uint32_t> rows, std::span<const double> g,
                         std::span<const double> h, const Config& cfg, int depth) {
  double gs = 0, hs = 0;
  for (std::uint32_t r : rows) {
    gs += g[r];
    hs += h[r];
  }
  auto id = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back(Node{-1, 0.0, -1, -1, -cfg.learning_rate * gs / (hs + cfg.lambda)});
  if (depth >= cfg.max_depth || rows.size() < 2) return id;
  Split s = find_best_split(x, rows, g, h, cfg);
  if (s.feature < 0) return id;
  std::vector<std::uint32_t> left, right;
  for (std::uint32_t r : rows)
    (x(r, static_cast<std::size_t>(s.feature)) < s.threshold ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  auto l = grow(tree, x, std::move(left), g, h, cfg, depth + 1);
  auto rr = grow(tree, x, std::move(right), g, h, cfg, depth + 1);
  Node& n = tree.nodes[static_cast<std::size_t>(id)];
  n.feature = s.feature;
  n.threshold = s.threshold;
  n.left = l;
  n.right = rr;
  return id;
}

}  // namespace detail

/// Regression tree on (g, h) over `rows`; nodes are stored in preorder.
inline Tree build_tree(const FeatureMatrix& x, std::vector<std::uint32_t> rows, std::span<const double> g,
                       std::span<const double> h, const Config& cfg) {
  Tree t;
  detail::grow(t, x, std::move(rows), g, h, cfg, 0);
  return t;
}

// ---------------------------------------------------------------------------
// Training

struct RoundStatus {
  std::size_t round = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> dev_accuracy;
};

struct FitResult {
  Ensemble model;
  std::vector<RoundStatus> history;
  std::size_t best_round = 0;  // rounds kept in `model`
};

using StatusCallback = std::function<void(const RoundStatus&)>;

inline double softmax_loss(const std::vector<std::array<double, kClassCount>>& scores,
                           std::span<const std::uint8_t> labels) {
  double total = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    double m = *std::max_element(s.begin(), s.end());
    double z = 0;
    for (double v : s) z += std::exp(v - m);
    total += std::log(z) + m - s[labels[i]];
  }
  return scores.empty() ? 0.0 : total / static_cast<double>(scores.size());
}

inline double argmax_accuracy(const std::vector<std::array<double, kClassCount>>& scores,
                              std::span<const std::uint8_t> labels) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    std::size_t best = 0;
    for (std::size_t c = 1; c < kClassCount; ++c)
      if (s[c] > s[best]) best = c;
    hit += best == labels[i];
  }
  return scores.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(scores.size());
}

/// Boosts up to cfg.rounds rounds. With a non-empty `dev` set, training stops
/// once dev accuracy has not improved for `early_stopping_patience` rounds and
/// the model is truncated to the best round. Without one, all rounds are kept.
inline FitResult fit(const EncodedCorpus& train, const EncodedCorpus* dev, const Config& cfg,
                     const StatusCallback& on_round = {}) {
  cfg.validate();
  const FeatureMatrix& x = train.x;
  if (x.rows == 0) throw UsageError("training set is empty");
  if (train.labels.size() != x.rows) throw UsageError("label count does not match feature rows");
  for (auto l : train.labels)
    if (l >= kClassCount) throw UsageError("label out of range");
  const bool use_dev = dev && dev->x.rows > 0;
  if (use_dev && (dev->x.cols != x.cols || dev->labels.size() != dev->x.rows))
    throw UsageError("dev set dimensions do not match training set");

  FitResult result;
  Ensemble& m = result.model;
  m.width = x.cols;
  m.learning_rate = cfg.learning_rate;

  bool single = std::all_of(train.labels.begin(), train.labels.end(), [&](auto l) { return l == train.labels[0]; });
  if (single) {
    m.degenerate = true;
    m.base_scores[train.labels[0]] = 1.0;
    return result;
  }

  const std::size_t n = x.rows;
  std::vector<std::array<double, kClassCount>> scores(n, m.base_scores);
  std::vector<std::array<double, kClassCount>> dev_scores(use_dev ? dev->x.rows : 0, m.base_scores);
  std::vector<std::uint32_t> all_rows(n);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = static_cast<std::uint32_t>(i);
  std::vector<std::vector<double>> g(kClassCount, std::vector<double>(n)), h(kClassCount, std::vector<double>(n));

  double best_acc = -1;
  std::size_t best_round = 0;
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      auto p = Ensemble::softmax(scores[i]);
      for (std::size_t c = 0; c < kClassCount; ++c) {
        g[c][i] = p[c] - (train.labels[i] == c ? 1.0 : 0.0);
        h[c][i] = p[c] * (1.0 - p[c]);
      }
    }
    std::vector<Tree> trees(kClassCount);
    auto work = [&](std::size_t worker) {
      for (std::size_t c = worker; c < kClassCount; c += cfg.threads) trees[c] = build_tree(x, all_rows, g[c], h[c], cfg);
    };
    if (cfg.threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < cfg.threads; ++t) pool.emplace_back(work, t);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < kClassCount; ++c) scores[i][c] += trees[c].predict(x.row(i));
    m.rounds.push_back(std::move(trees));

    RoundStatus st;
    st.round = round;
    st.train_loss = softmax_loss(scores, train.labels);
    if (use_dev) {
      for (std::size_t i = 0; i < dev->x.rows; ++i)
        for (std::size_t c = 0; c < kClassCount; ++c) dev_scores[i][c] += m.rounds.back()[c].predict(dev->x.row(i));
      st.dev_accuracy = argmax_accuracy(dev_scores, dev->labels);
      if (*st.dev_accuracy > best_acc) {
        best_acc = *st.dev_accuracy;
        best_round = round;
      }
    } else {
      best_round = round;
    }
    result.history.push_back(st);
    if (on_round) on_round(st);
    if (use_dev && round - best_round >= cfg.early_stopping_patience) break;
  }
  m.rounds.resize(best_round);
  result.best_round = best_round;
  return result;
}

// ---------------------------------------------------------------------------
// Model file
//
//   "DNGB" u32 version=1
//   u64 width, u32 class_count=16, f64 learning_rate, u8 degenerate
//   f64[16] base_scores
//   u64 rounds; per round, per class: u32 node_count, then per node
//     i32 feature, f64 threshold, i32 left, i32 right, f64 weight
//
// All values little-endian; doubles are stored bit-exact.

inline constexpr std::uint32_t kModelVersion = 1;

inline void save(const Ensemble& m, std::ostream& out) {
  binio::Writer w(out);
  w.put_bytes("DNGB", 4);
  w.put(kModelVersion);
  w.put<std::uint64_t>(m.width);
  w.put<std::uint32_t>(kClassCount);
  w.put(m.learning_rate);
  w.put<std::uint8_t>(m.degenerate ? 1 : 0);
  for (double b : m.base_scores) w.put(b);
  w.put<std::uint64_t>(m.rounds.size());
  for (const auto& round : m.rounds) {
    for (const Tree& t : round) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(t.nodes.size()));
      for (const Node& n : t.nodes) {
        w.put(n.feature);
        w.put(n.threshold);
        w.put(n.left);
        w.put(n.right);
        w.put(n.weight);
      }
    }
  }
  w.check("classifier model");
}

inline Ensemble load(std::istream& in, const std::string& source = "classifier model") {
  binio::Reader r(in, source);
  r.expect_header("DNGB", kModelVersion);
  Ensemble m;
  m.width = r.get<std::uint64_t>();
  if (r.get<std::uint32_t>() != kClassCount) throw DataError(source + ": unexpected class count");
  m.learning_rate = r.get<double>();
  m.degenerate = r.get<std::uint8_t>() != 0;
  for (double& b : m.base_scores) b = r.get<double>();
  auto rounds = r.get<std::uint64_t>();
  if (rounds > (1u << 24)) throw DataError(source + ": corrupt round count");
  m.rounds.resize(rounds);
  for (auto& round : m.rounds) {
    round.resize(kClassCount);
    for (Tree& t : round) {
      auto count = r.get<std::uint32_t>();
      if (count == 0 || count > (1u << 24)) throw DataError(source + ": corrupt node count");
      t.nodes.resize(count);
      for (std::int32_t idx = 0; idx < static_cast<std::int32_t>(count); ++idx) {
        Node& n = t.nodes[static_cast<std::size_t>(idx)];
        n.feature = r.get<std::int32_t>();
        n.threshold = r.get<double>();
        n.left = r.get<std::int32_t>();
        n.right = r.get<std::int32_t>();
        n.weight = r.get<double>();
        if (!n.is_leaf() && (n.left <= idx || n.right <= idx || static_cast<std::uint32_t>(n.left) >= count ||
                             static_cast<std::uint32_t>(n.right) >= count ||
                             static_cast<std::uint64_t>(n.feature) >= m.width))
          throw DataError(source + ": corrupt tree node");
      }
    }
  }
  r.expect_end();
  return m;
}

inline void save(const Ensemble& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write classifier model: " + path);
  save(m, out);
}

inline Ensemble load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open classifier model: " + path);
  return load(in, path);
}

}  // namespace deepnorm::gbdt
