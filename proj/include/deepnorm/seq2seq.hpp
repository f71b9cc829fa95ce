// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deepnorm/error.hpp"
#include "deepnorm/rng.hpp"

// Label-conditioned attention encoder-decoder.
//
// Encoder: token embedding followed by a stack of LSTM layers (gates i, f, o
// and cell candidate g; h = o * tanh(c)). The decoder attends over the top
// layer states h_1..h_L with additive scoring, where L is the position of the
// last non-PAD input id
//
//   e_i = v . tanh(W_a s_{t-1} + U_a h_i),  alpha = softmax(e),  c_t = sum_i alpha_i h_i
//
// and updates its state with reset/update gating:
//
//   r_t = sigm(W_r y_{t-1} + U_r s_{t-1} + C_r c_t + b_r)
//   z_t = sigm(W_z y_{t-1} + U_z s_{t-1} + C_z c_t + b_z)
//   g_t = tanh(W_p y_{t-1} + U_p (r_t * s_{t-1}) + C_p c_t + b_p)
//   s_t = (1 - z_t) * s_{t-1} + z_t * g_t
//   o_t = sigm(W_o y_{t-1} + U_o s_{t-1} + C_o c_t + b_o)
//   logits_t = W_out o_t + b_out
//
// y_{t-1} is the embedding of the previous target word (GO at t = 1) and
// s_0 = tanh(W_init h_L + b_init). All activations are column-major with one
// column per batch element.

namespace deepnorm::seq2seq {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kPad = 0;
inline constexpr int kGo = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;

enum class Optimizer : std::uint8_t { Sgd = 0, Adam = 1 };

inline std::string_view optimizer_name(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

inline Optimizer parse_optimizer(std::string_view s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "adam") return Optimizer::Adam;
  throw UsageError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

struct ModelConfig {
  std::size_t encoder_len = 20;
  std::size_t decoder_len = 25;
  std::size_t layers = 2;
  std::size_t hidden_units = 256;
  std::size_t attention_units = 256;
  std::size_t embedding_dim = 0;  // 0: same as hidden_units
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::size_t max_target_vocab = 100'000;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  double initial_lr = 0.5;
  double lr_decay = 0.85;
  double clip_norm = 5.0;
  double init_scale = 0.08;
  double momentum = 0.0;  // sgd only; 0: plain gradient descent
  Optimizer optimizer = Optimizer::Sgd;

  std::size_t embedding() const { return embedding_dim ? embedding_dim : hidden_units; }

  void validate() const {
    auto positive = [](std::size_t v, const char* what) {
      if (v == 0) throw UsageError(std::string(what) + " must be positive");
    };
    positive(encoder_len, "encoder_len");
    positive(decoder_len, "decoder_len");
    positive(layers, "layers");
    positive(hidden_units, "hidden_units");
    positive(attention_units, "attention_units");
    positive(source_vocab, "source_vocab");
    positive(target_vocab, "target_vocab");
    positive(batch_size, "batch_size");
    positive(epochs, "epochs");
    if (target_vocab <= kEos) throw UsageError("target vocabulary must include PAD, GO and EOS");
    if (!(initial_lr > 0)) throw UsageError("initial_lr must be positive");
    if (!(lr_decay > 0 && lr_decay <= 1)) throw UsageError("lr_decay must lie in (0, 1]");
    if (!(clip_norm > 0)) throw UsageError("clip_norm must be positive");
    if (!(init_scale >= 0)) throw UsageError("init_scale must be non-negative");
    if (!(momentum >= 0 && momentum < 1)) throw UsageError("momentum must lie in [0, 1)");
  }
};

/// All trainable tensors. Vectors are stored as single-column matrices.
template <typename S>
struct Params {
  Mat<S> src_embedding;  // E x Vs
  std::vector<Mat<S>> enc_W, enc_U, enc_b;  // per layer: 4H x in, 4H x H, 4H x 1 (gate rows i, f, o, g)
  Mat<S> init_W, init_b;           // H x H, H x 1
  Mat<S> att_W, att_U, att_v;      // A x H, A x H, A x 1
  Mat<S> tgt_embedding;            // E x Vt
  Mat<S> W_r, U_r, C_r, b_r;
  Mat<S> W_z, U_z, C_z, b_z;
  Mat<S> W_p, U_p, C_p, b_p;
  Mat<S> W_o, U_o, C_o, b_o;
  Mat<S> out_W, out_b;             // Vt x H, Vt x 1

  static Params zeros(const ModelConfig& cfg) {
    cfg.validate();
    const auto E = static_cast<Eigen::Index>(cfg.embedding());
    const auto H = static_cast<Eigen::Index>(cfg.hidden_units);
    const auto A = static_cast<Eigen::Index>(cfg.attention_units);
    const auto Vs = static_cast<Eigen::Index>(cfg.source_vocab);
    const auto Vt = static_cast<Eigen::Index>(cfg.target_vocab);
    Params p;
    p.src_embedding = Mat<S>::Zero(E, Vs);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      p.enc_W.push_back(Mat<S>::Zero(4 * H, l == 0 ? E : H));
      p.enc_U.push_back(Mat<S>::Zero(4 * H, H));
      p.enc_b.push_back(Mat<S>::Zero(4 * H, 1));
    }
    p.init_W = Mat<S>::Zero(H, H);
    p.init_b = Mat<S>::Zero(H, 1);
    p.att_W = Mat<S>::Zero(A, H);
    p.att_U = Mat<S>::Zero(A, H);
    p.att_v = Mat<S>::Zero(A, 1);
    p.tgt_embedding = Mat<S>::Zero(E, Vt);
    for (Mat<S>* w : {&p.W_r, &p.W_z, &p.W_p, &p.W_o}) *w = Mat<S>::Zero(H, E);
    for (Mat<S>* u : {&p.U_r, &p.U_z, &p.U_p, &p.U_o, &p.C_r, &p.C_z, &p.C_p, &p.C_o}) *u = Mat<S>::Zero(H, H);
    for (Mat<S>* b : {&p.b_r, &p.b_z, &p.b_p, &p.b_o}) *b = Mat<S>::Zero(H, 1);
    p.out_W = Mat<S>::Zero(Vt, H);
    p.out_b = Mat<S>::Zero(Vt, 1);
    return p;
  }

  /// Every entry uniform in [-scale, scale), drawn in named() order.
  static Params uniform(const ModelConfig& cfg, std::uint64_t seed, double scale) {
    Params p = zeros(cfg);
    Rng rng(seed);
    for (auto& [name, m] : p.named())
      for (Eigen::Index j = 0; j < m->cols(); ++j)
        for (Eigen::Index i = 0; i < m->rows(); ++i) (*m)(i, j) = static_cast<S>(rng.uniform(-scale, scale));
    return p;
  }

  std::vector<std::pair<std::string, Mat<S>*>> named() {
    std::vector<std::pair<std::string, Mat<S>*>> out;
    out.emplace_back("encoder.embedding", &src_embedding);
    for (std::size_t l = 0; l < enc_W.size(); ++l) {
      std::string pre = "encoder.l" + std::to_string(l) + ".";
      out.emplace_back(pre + "W", &enc_W[l]);
      out.emplace_back(pre + "U", &enc_U[l]);
      out.emplace_back(pre + "b", &enc_b[l]);
    }
    out.emplace_back("init.W", &init_W);
    out.emplace_back("init.b", &init_b);
    out.emplace_back("attention.W", &att_W);
    out.emplace_back("attention.U", &att_U);
    out.emplace_back("attention.v", &att_v);
    out.emplace_back("decoder.embedding", &tgt_embedding);
    out.emplace_back("decoder.W_r", &W_r);
    out.emplace_back("decoder.U_r", &U_r);
    out.emplace_back("decoder.C_r", &C_r);
    out.emplace_back("decoder.b_r", &b_r);
    out.emplace_back("decoder.W_z", &W_z);
    out.emplace_back("decoder.U_z", &U_z);
    out.emplace_back("decoder.C_z", &C_z);
    out.emplace_back("decoder.b_z", &b_z);
    out.emplace_back("decoder.W_p", &W_p);
    out.emplace_back("decoder.U_p", &U_p);
    out.emplace_back("decoder.C_p", &C_p);
    out.emplace_back("decoder.b_p", &b_p);
    out.emplace_back("decoder.W_o", &W_o);
    out.emplace_back("decoder.U_o", &U_o);
    out.emplace_back("decoder.C_o", &C_o);
    out.emplace_back("decoder.b_o", &b_o);
    out.emplace_back("output.W", &out_W);
    out.emplace_back("output.b", &out_b);
    return out;
  }

  std::vector<std::pair<std::string, const Mat<S>*>> named() const {
    std::vector<std::pair<std::string, const Mat<S>*>> out;
    for (auto& [n, m] : const_cast<Params*>(this)->named()) out.emplace_back(n, m);
    return out;
  }

  void set_zero() {
    for (auto& [n, m] : named()) m->setZero();
  }

  bool operator==(const Params& o) const {
    auto a = named();
    auto b = o.named();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].second->rows() != b[i].second->rows() || a[i].second->cols() != b[i].second->cols() ||
          *a[i].second != *b[i].second)
        return false;
    return true;
  }
};

/// One training or decoding example. `input` holds exactly encoder_len ids;
/// `target` holds word ids ending in EOS.
struct Sample {
  std::vector<int> input;
  std::vector<int> target;
};

// ---------------------------------------------------------------------------
// Building blocks

template <typename S>
Mat<S> sigmoid(const Mat<S>& a) {
  return (S(1) + (-a.array()).exp()).inverse().matrix();
}

template <typename S>
Mat<S> gather_columns(const Mat<S>& table, const std::vector<int>& ids) {
  Mat<S> out(table.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t b = 0; b < ids.size(); ++b) {
    if (ids[b] < 0 || ids[b] >= table.cols()) throw UsageError("token id out of vocabulary range");
    out.col(static_cast<Eigen::Index>(b)) = table.col(ids[b]);
  }
  return out;
}

template <typename S>
void scatter_add_columns(Mat<S>& table, const std::vector<int>& ids, const Mat<S>& grads) {
  for (std::size_t b = 0; b < ids.size(); ++b) table.col(ids[b]) += grads.col(static_cast<Eigen::Index>(b));
}

template <typename S>
struct LstmStep {
  Mat<S> x;       // input, in x B
  Mat<S> gates;   // 4H x B after activation: i, f, o, g
  Mat<S> c, h, tanh_c;
};

/// One LSTM step for all columns of x.
template <typename S>
LstmStep<S> lstm_step(const Mat<S>& W, const Mat<S>& U, const Mat<S>& b, const Mat<S>& x, const Mat<S>& h_prev,
                      const Mat<S>& c_prev) {
  const Eigen::Index H = U.cols();
  LstmStep<S> st;
  st.x = x;
  Mat<S> a = W * x + U * h_prev;
  a.colwise() += b.col(0);
  st.gates.resize(a.rows(), a.cols());
  st.gates.topRows(3 * H) = sigmoid<S>(a.topRows(3 * H));
  st.gates.bottomRows(H) = a.bottomRows(H).array().tanh().matrix();
  auto i = st.gates.topRows(H).array();
  auto f = st.gates.middleRows(H, H).array();
  auto o = st.gates.middleRows(2 * H, H).array();
  auto g = st.gates.bottomRows(H).array();
  st.c = (f * c_prev.array() + i * g).matrix();
  st.tanh_c = st.c.array().tanh().matrix();
  st.h = (o * st.tanh_c.array()).matrix();
  return st;
}

/// Per-layer, per-position LSTM states.
template <typename S>
struct EncoderTrace {
  std::vector<std::vector<LstmStep<S>>> layers;  // [layer][t]

  const Mat<S>& top(std::size_t t) const { return layers.back()[t].h; }
  std::size_t length() const { return layers.empty() ? 0 : layers.front().size(); }
};

/// Encodes a batch: inputs[b] is the id sequence of column b. Every
/// sequence must have the same length.
template <typename S>
EncoderTrace<S> encoder_forward(const std::vector<std::vector<int>>& inputs, const Params<S>& p) {
  if (inputs.empty()) throw UsageError("empty encoder batch");
  const std::size_t T = inputs.front().size();
  if (T == 0) throw UsageError("empty encoder input");
  for (auto& seq : inputs)
    if (seq.size() != T) throw UsageError("encoder inputs must share one length");
  const auto B = static_cast<Eigen::Index>(inputs.size());
  const Eigen::Index H = p.enc_U.front().cols();
  EncoderTrace<S> tr;
  tr.layers.resize(p.enc_W.size());
  std::vector<int> ids(inputs.size());
  for (std::size_t l = 0; l < p.enc_W.size(); ++l) {
    Mat<S> h = Mat<S>::Zero(H, B), c = Mat<S>::Zero(H, B);
    tr.layers[l].reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
      Mat<S> x;
      if (l == 0) {
        for (std::size_t b = 0; b < inputs.size(); ++b) ids[b] = inputs[b][t];
        x = gather_columns(p.src_embedding, ids);
      } else {
        x = tr.layers[l - 1][t].h;
      }
      tr.layers[l].push_back(lstm_step<S>(p.enc_W[l], p.enc_U[l], p.enc_b[l], x, h, c));
      h = tr.layers[l].back().h;
      c = tr.layers[l].back().c;
    }
  }
  return tr;
}

/// Source positions up to and including the last non-PAD id (at least 1).
/// Attention and the initial decoder state ignore the positions after it.
inline std::vector<std::size_t> source_lengths(const std::vector<std::vector<int>>& inputs) {
  std::vector<std::size_t> out;
  out.reserve(inputs.size());
  for (const auto& seq : inputs) {
    std::size_t n = seq.size();
    while (n > 1 && seq[n - 1] == kPad) --n;
    out.push_back(n);
  }
  return out;
}

/// Column b of the returned matrix is h[lengths[b] - 1] column b.
template <typename S>
Mat<S> last_states(const std::vector<Mat<S>>& h, std::span<const std::size_t> lengths) {
  Mat<S> out(h.front().rows(), h.front().cols());
  for (Eigen::Index b = 0; b < out.cols(); ++b) out.col(b) = h[lengths[static_cast<std::size_t>(b)] - 1].col(b);
  return out;
}

template <typename S>
struct AttentionStep {
  Mat<S> alpha;                 // T x B, columns sum to 1
  Mat<S> context;               // H x B
  std::vector<Mat<S>> hidden;   // tanh(W_a s + U_a h_i), each A x B
};

/// `projected[i]` = U_a h_i, precomputed once per batch. With `lengths`,
/// positions at or past lengths[b] get zero weight in column b.
template <typename S>
AttentionStep<S> attention_context(const Mat<S>& s_prev, const std::vector<Mat<S>>& h,
                                   const std::vector<Mat<S>>& projected, const Params<S>& p,
                                   std::span<const std::size_t> lengths = {}) {
  const auto T = static_cast<Eigen::Index>(h.size());
  const Eigen::Index B = s_prev.cols();
  AttentionStep<S> st;
  Mat<S> ws = p.att_W * s_prev;
  Mat<S> e(T, B);
  st.hidden.resize(h.size());
  for (Eigen::Index i = 0; i < T; ++i) {
    st.hidden[static_cast<std::size_t>(i)] = (ws + projected[static_cast<std::size_t>(i)]).array().tanh().matrix();
    e.row(i) = p.att_v.col(0).transpose() * st.hidden[static_cast<std::size_t>(i)];
  }
  auto masked = [&](Eigen::Index i, Eigen::Index b) {
    return !lengths.empty() && i >= static_cast<Eigen::Index>(lengths[static_cast<std::size_t>(b)]);
  };
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index i = 0; i < T; ++i)
      if (masked(i, b)) e(i, b) = -std::numeric_limits<S>::infinity();
  Eigen::Matrix<S, 1, Eigen::Dynamic> mx = e.colwise().maxCoeff();
  e.rowwise() -= mx;
  st.alpha = e.array().exp().matrix();
  // vectorized exp clamps -inf to a tiny positive value
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index i = 0; i < T; ++i)
      if (masked(i, b)) st.alpha(i, b) = 0;
  Eigen::Matrix<S, 1, Eigen::Dynamic> z = st.alpha.colwise().sum();
  for (Eigen::Index b = 0; b < B; ++b) st.alpha.col(b) /= z(b);
  st.context = Mat<S>::Zero(h.front().rows(), B);
  for (Eigen::Index i = 0; i < T; ++i)
    st.context.array() += h[static_cast<std::size_t>(i)].array().rowwise() * st.alpha.row(i).array();
  return st;
}

template <typename S>
AttentionStep<S> attention_context(const Mat<S>& s_prev, const std::vector<Mat<S>>& h, const Params<S>& p) {
  std::vector<Mat<S>> projected;
  for (auto& hi : h) projected.push_back(p.att_U * hi);
  return attention_context<S>(s_prev, h, projected, p);
}

template <typename S>
struct DecoderStep {
  Mat<S> y, s_prev, context;
  Mat<S> r, z, g, rs;  // rs = r * s_prev
  Mat<S> s;
  Mat<S> o;
  Mat<S> logits;
};

/// One decoder update given the embedded previous word, previous state and context.
template <typename S>
DecoderStep<S> decoder_step(const Mat<S>& y, const Mat<S>& s_prev, const Mat<S>& c, const Params<S>& p) {
  DecoderStep<S> st;
  st.y = y;
  st.s_prev = s_prev;
  st.context = c;
  Mat<S> ar = p.W_r * y + p.U_r * s_prev + p.C_r * c;
  ar.colwise() += p.b_r.col(0);
  st.r = sigmoid<S>(ar);
  Mat<S> az = p.W_z * y + p.U_z * s_prev + p.C_z * c;
  az.colwise() += p.b_z.col(0);
  st.z = sigmoid<S>(az);
  st.rs = (st.r.array() * s_prev.array()).matrix();
  Mat<S> ag = p.W_p * y + p.U_p * st.rs + p.C_p * c;
  ag.colwise() += p.b_p.col(0);
  st.g = ag.array().tanh().matrix();
  st.s = ((S(1) - st.z.array()) * s_prev.array() + st.z.array() * st.g.array()).matrix();
  Mat<S> ao = p.W_o * y + p.U_o * s_prev + p.C_o * c;
  ao.colwise() += p.b_o.col(0);
  st.o = sigmoid<S>(ao);
  st.logits = p.out_W * st.o;
  st.logits.colwise() += p.out_b.col(0);
  return st;
}

template <typename S>
Mat<S> column_softmax(const Mat<S>& logits) {
  Mat<S> p = logits;
  Eigen::Matrix<S, 1, Eigen::Dynamic> mx = p.colwise().maxCoeff();
  p.rowwise() -= mx;
  p = p.array().exp().matrix();
  Eigen::Matrix<S, 1, Eigen::Dynamic> z = p.colwise().sum();
  for (Eigen::Index b = 0; b < p.cols(); ++b) p.col(b) /= z(b);
  return p;
}

template <typename S>
Mat<S> initial_state(const Mat<S>& h_last, const Params<S>& p) {
  Mat<S> a = p.init_W * h_last;
  a.colwise() += p.init_b.col(0);
  return a.array().tanh().matrix();
}

// ---------------------------------------------------------------------------
// Teacher-forced loss and its gradient

template <typename S>
struct ForwardTrace {
  EncoderTrace<S> encoder;
  std::vector<Mat<S>> top;        // encoder top states
  std::vector<Mat<S>> projected;  // U_a h_i
  std::vector<std::size_t> lengths;
  Mat<S> h_last;                  // top state at each column's last source position
  Mat<S> s0;
  std::vector<AttentionStep<S>> attention;
  std::vector<DecoderStep<S>> decoder;
  std::vector<Mat<S>> probs;
  std::vector<std::vector<int>> prev_ids;  // decoder input ids per step
  std::vector<std::vector<int>> gold;      // gold ids per step (PAD when masked)
  std::size_t scored = 0;                  // number of unmasked target positions
  S loss = 0;
};

template <typename S>
ForwardTrace<S> forward(const std::vector<Sample>& batch, const Params<S>& p, std::size_t decoder_len) {
  if (batch.empty()) throw UsageError("empty batch");
  ForwardTrace<S> tr;
  std::vector<std::vector<int>> inputs;
  std::size_t steps = 0;
  for (const Sample& s : batch) {
    if (s.target.empty()) throw UsageError("sample without target");
    if (s.target.size() > decoder_len) throw UsageError("target longer than decoder_len");
    inputs.push_back(s.input);
    steps = std::max(steps, s.target.size());
  }
  tr.encoder = encoder_forward<S>(inputs, p);
  for (std::size_t t = 0; t < tr.encoder.length(); ++t) {
    tr.top.push_back(tr.encoder.top(t));
    tr.projected.push_back(p.att_U * tr.top.back());
  }
  tr.lengths = source_lengths(inputs);
  tr.h_last = last_states<S>(tr.top, tr.lengths);
  tr.s0 = initial_state<S>(tr.h_last, p);
  Mat<S> s = tr.s0;
  const std::size_t B = batch.size();
  S total = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<int> prev(B), gold(B);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& tgt = batch[b].target;
      prev[b] = t == 0 ? kGo : (t - 1 < tgt.size() ? tgt[t - 1] : kPad);
      gold[b] = t < tgt.size() ? tgt[t] : kPad;
    }
    tr.attention.push_back(attention_context<S>(s, tr.top, tr.projected, p, tr.lengths));
    tr.decoder.push_back(decoder_step<S>(gather_columns(p.tgt_embedding, prev), s, tr.attention.back().context, p));
    tr.probs.push_back(column_softmax<S>(tr.decoder.back().logits));
    for (std::size_t b = 0; b < B; ++b) {
      if (t < batch[b].target.size()) {
        if (gold[b] < 0 || gold[b] >= tr.probs.back().rows()) throw UsageError("target id out of vocabulary range");
        total -= std::log(tr.probs.back()(gold[b], static_cast<Eigen::Index>(b)));
        ++tr.scored;
      }
    }
    s = tr.decoder.back().s;
    tr.prev_ids.push_back(std::move(prev));
    tr.gold.push_back(std::move(gold));
  }
  tr.loss = total / static_cast<S>(tr.scored);
  return tr;
}

/// Mean negative log-likelihood per target position under teacher forcing.
template <typename S>
S forward_loss(const std::vector<Sample>& batch, const Params<S>& p, const ModelConfig& cfg) {
  return forward<S>(batch, p, cfg.decoder_len).loss;
}

/// Exact gradient of forward_loss; returns the loss.
template <typename S>
S loss_and_gradient(const std::vector<Sample>& batch, const Params<S>& p, const ModelConfig& cfg, Params<S>& grad) {
  ForwardTrace<S> tr = forward<S>(batch, p, cfg.decoder_len);
  if (grad.enc_W.size() != p.enc_W.size()) grad = Params<S>::zeros(cfg);
  grad.set_zero();

  const Eigen::Index H = p.init_W.rows();
  const auto B = static_cast<Eigen::Index>(batch.size());
  const std::size_t T = tr.top.size();
  const S inv_n = S(1) / static_cast<S>(tr.scored);

  std::vector<Mat<S>> d_top(T, Mat<S>::Zero(H, B));
  std::vector<Mat<S>> d_projected(T, Mat<S>::Zero(p.att_U.rows(), B));
  Mat<S> ds = Mat<S>::Zero(H, B);  // gradient w.r.t. the state produced by the current step

  for (std::size_t t = tr.decoder.size(); t-- > 0;) {
    const DecoderStep<S>& st = tr.decoder[t];
    const AttentionStep<S>& at = tr.attention[t];

    Mat<S> dlogits = tr.probs[t];
    for (Eigen::Index b = 0; b < B; ++b) {
      if (static_cast<std::size_t>(t) < batch[static_cast<std::size_t>(b)].target.size()) {
        dlogits(tr.gold[t][static_cast<std::size_t>(b)], b) -= S(1);
        dlogits.col(b) *= inv_n;
      } else {
        dlogits.col(b).setZero();
      }
    }
    grad.out_W.noalias() += dlogits * st.o.transpose();
    grad.out_b.col(0) += dlogits.rowwise().sum();
    Mat<S> d_o = p.out_W.transpose() * dlogits;

    Mat<S> da_o = (d_o.array() * st.o.array() * (S(1) - st.o.array())).matrix();
    grad.W_o.noalias() += da_o * st.y.transpose();
    grad.U_o.noalias() += da_o * st.s_prev.transpose();
    grad.C_o.noalias() += da_o * st.context.transpose();
    grad.b_o.col(0) += da_o.rowwise().sum();
    Mat<S> ds_prev = p.U_o.transpose() * da_o;
    Mat<S> dc = p.C_o.transpose() * da_o;
    Mat<S> dy = p.W_o.transpose() * da_o;

    Mat<S> dz = (ds.array() * (st.g.array() - st.s_prev.array())).matrix();
    Mat<S> dg = (ds.array() * st.z.array()).matrix();
    ds_prev.array() += ds.array() * (S(1) - st.z.array());

    Mat<S> da_g = (dg.array() * (S(1) - st.g.array().square())).matrix();
    grad.W_p.noalias() += da_g * st.y.transpose();
    grad.U_p.noalias() += da_g * st.rs.transpose();
    grad.C_p.noalias() += da_g * st.context.transpose();
    grad.b_p.col(0) += da_g.rowwise().sum();
    Mat<S> d_rs = p.U_p.transpose() * da_g;
    Mat<S> dr = (d_rs.array() * st.s_prev.array()).matrix();
    ds_prev.array() += d_rs.array() * st.r.array();
    dc.noalias() += p.C_p.transpose() * da_g;
    dy.noalias() += p.W_p.transpose() * da_g;

    Mat<S> da_z = (dz.array() * st.z.array() * (S(1) - st.z.array())).matrix();
    grad.W_z.noalias() += da_z * st.y.transpose();
    grad.U_z.noalias() += da_z * st.s_prev.transpose();
    grad.C_z.noalias() += da_z * st.context.transpose();
    grad.b_z.col(0) += da_z.rowwise().sum();
    ds_prev.noalias() += p.U_z.transpose() * da_z;
    dc.noalias() += p.C_z.transpose() * da_z;
    dy.noalias() += p.W_z.transpose() * da_z;

    Mat<S> da_r = (dr.array() * st.r.array() * (S(1) - st.r.array())).matrix();
    grad.W_r.noalias() += da_r * st.y.transpose();
    grad.U_r.noalias() += da_r * st.s_prev.transpose();
    grad.C_r.noalias() += da_r * st.context.transpose();
    grad.b_r.col(0) += da_r.rowwise().sum();
    ds_prev.noalias() += p.U_r.transpose() * da_r;
    dc.noalias() += p.C_r.transpose() * da_r;
    dy.noalias() += p.W_r.transpose() * da_r;

    scatter_add_columns(grad.tgt_embedding, tr.prev_ids[t], dy);

    // attention: c = sum_i alpha_i h_i
    const auto TT = static_cast<Eigen::Index>(T);
    Mat<S> d_alpha(TT, B);
    for (Eigen::Index i = 0; i < TT; ++i) {
      const Mat<S>& hi = tr.top[static_cast<std::size_t>(i)];
      d_top[static_cast<std::size_t>(i)].array() += dc.array().rowwise() * at.alpha.row(i).array();
      d_alpha.row(i) = (hi.array() * dc.array()).colwise().sum();
    }
    Eigen::Matrix<S, 1, Eigen::Dynamic> weighted = (at.alpha.array() * d_alpha.array()).colwise().sum();
    Mat<S> de = (at.alpha.array() * (d_alpha.array().rowwise() - weighted.array())).matrix();
    Mat<S> d_ws = Mat<S>::Zero(p.att_W.rows(), B);
    for (Eigen::Index i = 0; i < TT; ++i) {
      const Mat<S>& hid = at.hidden[static_cast<std::size_t>(i)];
      grad.att_v.col(0).noalias() += hid * de.row(i).transpose();
      Mat<S> d_hid = p.att_v * de.row(i);
      Mat<S> d_pre = (d_hid.array() * (S(1) - hid.array().square())).matrix();
      d_ws += d_pre;
      d_projected[static_cast<std::size_t>(i)] += d_pre;
    }
    grad.att_W.noalias() += d_ws * st.s_prev.transpose();
    ds_prev.noalias() += p.att_W.transpose() * d_ws;

    ds = std::move(ds_prev);
  }

  for (std::size_t i = 0; i < T; ++i) {
    grad.att_U.noalias() += d_projected[i] * tr.top[i].transpose();
    d_top[i].noalias() += p.att_U.transpose() * d_projected[i];
  }

  // s0 = tanh(W_init h_last + b_init)
  Mat<S> da0 = (ds.array() * (S(1) - tr.s0.array().square())).matrix();
  grad.init_W.noalias() += da0 * tr.h_last.transpose();
  grad.init_b.col(0) += da0.rowwise().sum();
  Mat<S> d_last = p.init_W.transpose() * da0;
  for (Eigen::Index b = 0; b < B; ++b) d_top[tr.lengths[static_cast<std::size_t>(b)] - 1].col(b) += d_last.col(b);

  // encoder, top layer first
  std::vector<Mat<S>> d_h_ext = std::move(d_top);
  for (std::size_t l = p.enc_W.size(); l-- > 0;) {
    const auto& steps = tr.encoder.layers[l];
    Mat<S> dh_next = Mat<S>::Zero(H, B), dc_next = Mat<S>::Zero(H, B);
    std::vector<Mat<S>> d_x(T);
    for (std::size_t t = T; t-- > 0;) {
      const LstmStep<S>& st = steps[t];
      const Mat<S> zeros = Mat<S>::Zero(H, B);
      const Mat<S>& h_prev = t ? steps[t - 1].h : zeros;
      const Mat<S>& c_prev = t ? steps[t - 1].c : zeros;
      auto i = st.gates.topRows(H).array();
      auto f = st.gates.middleRows(H, H).array();
      auto o = st.gates.middleRows(2 * H, H).array();
      auto g = st.gates.bottomRows(H).array();
      Mat<S> dh = d_h_ext[t] + dh_next;
      Mat<S> dcell = dc_next + (dh.array() * o * (S(1) - st.tanh_c.array().square())).matrix();
      Mat<S> da(4 * H, B);
      da.topRows(H) = (dcell.array() * g * i * (S(1) - i)).matrix();
      da.middleRows(H, H) = (dcell.array() * c_prev.array() * f * (S(1) - f)).matrix();
      da.middleRows(2 * H, H) = (dh.array() * st.tanh_c.array() * o * (S(1) - o)).matrix();
      da.bottomRows(H) = (dcell.array() * i * (S(1) - g.square())).matrix();
      grad.enc_W[l].noalias() += da * st.x.transpose();
      grad.enc_U[l].noalias() += da * h_prev.transpose();
      grad.enc_b[l].col(0) += da.rowwise().sum();
      d_x[t] = p.enc_W[l].transpose() * da;
      dh_next = p.enc_U[l].transpose() * da;
      dc_next = (dcell.array() * f).matrix();
    }
    if (l == 0) {
      std::vector<int> ids(batch.size());
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t b = 0; b < batch.size(); ++b) ids[b] = batch[b].input[t];
        scatter_add_columns(grad.src_embedding, ids, d_x[t]);
      }
    } else {
      d_h_ext = std::move(d_x);
    }
  }
  return tr.loss;
}

// ---------------------------------------------------------------------------
// Greedy decoding

/// Word ids produced for each input, starting from GO and feeding back the
/// argmax (lowest id on ties) until EOS or decoder_len steps. PAD, GO and EOS
/// are not included in the output.
template <typename S>
std::vector<std::vector<int>> decode_greedy(const std::vector<std::vector<int>>& inputs, const Params<S>& p,
                                            std::size_t decoder_len) {
  std::vector<std::vector<int>> out(inputs.size());
  if (inputs.empty()) return out;
  EncoderTrace<S> enc = encoder_forward<S>(inputs, p);
  std::vector<Mat<S>> top, projected;
  for (std::size_t t = 0; t < enc.length(); ++t) {
    top.push_back(enc.top(t));
    projected.push_back(p.att_U * top.back());
  }
  const std::vector<std::size_t> lengths = source_lengths(inputs);
  Mat<S> s = initial_state<S>(last_states<S>(top, lengths), p);
  std::vector<int> prev(inputs.size(), kGo);
  std::vector<bool> done(inputs.size(), false);
  for (std::size_t step = 0; step < decoder_len; ++step) {
    auto at = attention_context<S>(s, top, projected, p, lengths);
    auto st = decoder_step<S>(gather_columns(p.tgt_embedding, prev), s, at.context, p);
    bool all_done = true;
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      if (done[b]) continue;
      Eigen::Index best = 0;
      auto col = st.logits.col(static_cast<Eigen::Index>(b));
      for (Eigen::Index v = 1; v < col.size(); ++v)
        if (col(v) > col(best)) best = v;
      prev[b] = static_cast<int>(best);
      if (best == kEos) {
        done[b] = true;
        continue;
      }
      if (best != kPad && best != kGo) out[b].push_back(static_cast<int>(best));
      all_done = false;
    }
    if (all_done) break;
    s = st.s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

/// Scales every gradient so the global L2 norm is at most max_norm; returns the norm before clipping.
template <typename S>
S clip_gradients(Params<S>& grad, S max_norm) {
  S sq = 0;
  for (auto& [n, m] : grad.named()) sq += m->squaredNorm();
  S norm = std::sqrt(sq);
  if (norm > max_norm) {
    S scale = max_norm / norm;
    for (auto& [n, m] : grad.named()) *m *= scale;
  }
  return norm;
}

template <typename S>
void sgd_update(Params<S>& p, const Params<S>& grad, S lr) {
  auto pn = p.named();
  auto gn = grad.named();
  for (std::size_t i = 0; i < pn.size(); ++i) *pn[i].second -= lr * *gn[i].second;
}

/// velocity = momentum * velocity + grad; p -= lr * velocity.
template <typename S>
void momentum_update(Params<S>& p, Params<S>& velocity, const Params<S>& grad, S lr, S momentum) {
  auto pn = p.named();
  auto vn = velocity.named();
  auto gn = grad.named();
  for (std::size_t i = 0; i < pn.size(); ++i) {
    *vn[i].second = momentum * *vn[i].second + *gn[i].second;
    *pn[i].second -= lr * *vn[i].second;
  }
}

/// Bias-corrected Adam step (beta1 0.9, beta2 0.999); `step` is 1-based.
template <typename S>
void adam_update(Params<S>& p, Params<S>& m1, Params<S>& m2, const Params<S>& grad, S lr, std::size_t step) {
  constexpr S b1 = S(0.9), b2 = S(0.999), eps = S(1e-8);
  const S c1 = S(1) - std::pow(b1, static_cast<S>(step));
  const S c2 = S(1) - std::pow(b2, static_cast<S>(step));
  auto pn = p.named();
  auto an = m1.named();
  auto bn = m2.named();
  auto gn = grad.named();
  for (std::size_t i = 0; i < pn.size(); ++i) {
    const Mat<S>& g = *gn[i].second;
    Mat<S>& a = *an[i].second;
    Mat<S>& b = *bn[i].second;
    a = b1 * a + (S(1) - b1) * g;
    b = b2 * b + (S(1) - b2) * g.cwiseProduct(g);
    *pn[i].second -= (lr / c1) * (a.array() / ((b.array() / c2).sqrt() + eps)).matrix();
  }
}

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double lr = 0;
  double mean_loss = 0;
};

template <typename S>
struct TrainResult {
  Params<S> params;
  std::vector<EpochLog> epochs;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch gradient descent (optionally with momentum, or Adam) with per-epoch
/// learning-rate decay lr = initial_lr * decay^(epoch-1) and global-norm
/// gradient clipping. Samples are reshuffled every epoch from `seed`.
template <typename S>
TrainResult<S> train(const std::vector<Sample>& samples, const ModelConfig& cfg, std::uint64_t seed,
                     const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (samples.empty()) throw UsageError("no training samples");
  TrainResult<S> res{Params<S>::uniform(cfg, seed, cfg.init_scale), {}, 0};
  Params<S> grad = Params<S>::zeros(cfg);
  const bool adam = cfg.optimizer == Optimizer::Adam;
  Params<S> velocity = adam || cfg.momentum > 0 ? Params<S>::zeros(cfg) : Params<S>{};
  Params<S> second = adam ? Params<S>::zeros(cfg) : Params<S>{};
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double lr = cfg.initial_lr;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<Sample> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(samples[order[k]]);
      S loss = loss_and_gradient<S>(batch, res.params, cfg, grad);
      if (!std::isfinite(static_cast<double>(loss))) throw NumericError("training loss is not finite");
      clip_gradients<S>(grad, static_cast<S>(cfg.clip_norm));
      if (adam)
        adam_update<S>(res.params, velocity, second, grad, static_cast<S>(lr), res.steps + 1);
      else if (cfg.momentum > 0)
        momentum_update<S>(res.params, velocity, grad, static_cast<S>(lr), static_cast<S>(cfg.momentum));
      else
        sgd_update<S>(res.params, grad, static_cast<S>(lr));
      loss_sum += static_cast<double>(loss);
      ++batches;
      ++res.steps;
    }
    EpochLog log{epoch, lr, loss_sum / static_cast<double>(batches)};
    res.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
    lr *= cfg.lr_decay;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

struct GroupCheck {
  std::string name;
  std::size_t entries = 0;
  double relative_error = 0;  // |a - n| / (|a| + |n|) over the whole group, as 2-norms
  double max_abs_error = 0;
};

/// Compares loss_and_gradient against central differences for every entry
/// of every parameter tensor.
inline std::vector<GroupCheck> gradient_check(const std::vector<Sample>& batch, Params<double> p,
                                              const ModelConfig& cfg, double eps = 1e-4) {
  Params<double> grad = Params<double>::zeros(cfg);
  loss_and_gradient<double>(batch, p, cfg, grad);
  std::vector<GroupCheck> out;
  auto pn = p.named();
  auto gn = grad.named();
  for (std::size_t k = 0; k < pn.size(); ++k) {
    Mat<double>& m = *pn[k].second;
    const Mat<double>& g = *gn[k].second;
    GroupCheck gc{pn[k].first, static_cast<std::size_t>(m.size()), 0, 0};
    double diff_sq = 0, a_sq = 0, n_sq = 0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + eps;
      const double up = forward_loss<double>(batch, p, cfg);
      m.data()[i] = orig - eps;
      const double down = forward_loss<double>(batch, p, cfg);
      m.data()[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = g.data()[i];
      diff_sq += (analytic - numeric) * (analytic - numeric);
      a_sq += analytic * analytic;
      n_sq += numeric * numeric;
      gc.max_abs_error = std::max(gc.max_abs_error, std::abs(analytic - numeric));
    }
    const double denom = std::sqrt(a_sq) + std::sqrt(n_sq);
    gc.relative_error = denom > 0 ? std::sqrt(diff_sq) / denom : 0;
    out.push_back(gc);
  }
  return out;
}

/// Tiny model and batch used by the gradient check command: random ids in
/// the non-reserved range, targets of varied length so masking is exercised.
struct GradcheckSetup {
  ModelConfig cfg;
  Params<double> params;
  std::vector<Sample> batch;
};

inline GradcheckSetup make_gradcheck_setup(std::size_t hidden, std::size_t vocab, std::size_t encoder_len,
                                           std::size_t layers, std::uint64_t seed) {
  if (vocab <= static_cast<std::size_t>(kUnk) + 1) throw UsageError("gradient check vocabulary must exceed 4");
  GradcheckSetup s;
  s.cfg.encoder_len = encoder_len;
  s.cfg.decoder_len = encoder_len;
  s.cfg.layers = layers;
  s.cfg.hidden_units = hidden;
  s.cfg.attention_units = hidden;
  s.cfg.embedding_dim = hidden;
  s.cfg.source_vocab = vocab;
  s.cfg.target_vocab = vocab;
  s.cfg.batch_size = 3;
  s.cfg.validate();
  s.params = Params<double>::uniform(s.cfg, seed, 0.5);
  Rng rng(seed + 1);
  auto sym = [&] { return static_cast<int>(rng.between(kUnk, static_cast<std::int64_t>(vocab) - 1)); };
  for (std::size_t b = 0; b < 3; ++b) {
    Sample smp;
    const std::size_t len = 1 + rng.below(encoder_len);
    for (std::size_t t = 0; t < encoder_len; ++t) smp.input.push_back(t < len ? sym() : kPad);
    const std::size_t tlen = 1 + rng.below(encoder_len - 1 > 0 ? encoder_len - 1 : 1);
    for (std::size_t t = 0; t < tlen; ++t) smp.target.push_back(sym());
    smp.target.push_back(kEos);
    s.batch.push_back(std::move(smp));
  }
  return s;
}

}  // namespace deepnorm::seq2seq
