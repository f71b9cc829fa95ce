// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "deepnorm/normalizer.hpp"
#include "deepnorm/seq2seq.hpp"
#include "oracles/seq2seq_reference.hpp"

using namespace deepnorm;
using namespace deepnorm::seq2seq;

namespace {

ModelConfig tiny_config(std::size_t hidden, std::size_t attention, std::size_t embedding, std::size_t layers,
                        std::size_t vocab, std::size_t len) {
  ModelConfig cfg;
  cfg.hidden_units = hidden;
  cfg.attention_units = attention;
  cfg.embedding_dim = embedding;
  cfg.layers = layers;
  cfg.source_vocab = vocab;
  cfg.target_vocab = vocab;
  cfg.encoder_len = len;
  cfg.decoder_len = len;
  return cfg;
}

std::vector<Sample> fixed_batch(std::size_t vocab, std::size_t len) {
  std::vector<Sample> batch;
  for (int b = 0; b < 3; ++b) {
    Sample s;
    for (std::size_t t = 0; t < len; ++t)
      s.input.push_back(t < len - static_cast<std::size_t>(b) ? static_cast<int>(3 + (t * 5 + b) % (vocab - 3)) : kPad);
    for (int t = 0; t <= b; ++t) s.target.push_back(static_cast<int>(3 + (t + 2 * b) % (vocab - 3)));
    s.target.push_back(kEos);
    batch.push_back(s);
  }
  return batch;
}

Corpus digit_corpus(std::size_t repeats) {
  static const char* names[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};
  std::vector<Token> toks;
  std::uint64_t sid = 0;
  for (std::size_t r = 0; r < repeats; ++r)
    for (int d = 0; d < 10; ++d)
      toks.push_back({sid++, 0, SemioticClass::Digit, std::to_string(d), d == 0 ? "o" : names[d]});
  return Corpus(std::move(toks));
}

}  // namespace

TEST(Forward, MatchesScalarReference) {
  for (auto [h, a, e, l] : {std::array<std::size_t, 4>{4, 4, 4, 2}, {5, 3, 2, 1}, {3, 6, 4, 3}}) {
    ModelConfig cfg = tiny_config(h, a, e, l, 11, 6);
    auto p = Params<double>::uniform(cfg, 42 + h, 0.5);
    auto batch = fixed_batch(11, 6);
    EXPECT_NEAR(forward_loss<double>(batch, p, cfg), oracle::reference_loss(batch, p), 1e-10) << h << " " << a;
  }
}

TEST(Forward, GradcheckSetupMatchesReference) {
  auto s = make_gradcheck_setup(4, 12, 6, 2, 1);
  EXPECT_NEAR(forward_loss<double>(s.batch, s.params, s.cfg), oracle::reference_loss(s.batch, s.params), 1e-10);
}

TEST(Lstm, OneUnitByHand) {
  Mat<double> W(4, 1), U(4, 1), b(4, 1), x(1, 1), h(1, 1), c(1, 1);
  W << 0.5, -0.25, 1.0, 2.0;
  U << 0.1, 0.2, 0.3, 0.4;
  b << 0.0, 1.0, -0.5, 0.25;
  x << 0.8;
  h << -0.3;
  c << 0.6;
  auto st = lstm_step<double>(W, U, b, x, h, c);
  auto sg = [](double v) { return 1 / (1 + std::exp(-v)); };
  double i = sg(0.5 * 0.8 + 0.1 * -0.3), f = sg(-0.25 * 0.8 + 0.2 * -0.3 + 1.0), o = sg(0.8 + 0.3 * -0.3 - 0.5);
  double g = std::tanh(2.0 * 0.8 + 0.4 * -0.3 + 0.25);
  double c1 = f * 0.6 + i * g;
  EXPECT_NEAR(st.c(0, 0), c1, 1e-15);
  EXPECT_NEAR(st.h(0, 0), o * std::tanh(c1), 1e-15);
}

TEST(Encoder, ZeroParametersGiveZeroStates) {
  ModelConfig cfg = tiny_config(4, 4, 4, 2, 9, 5);
  auto p = Params<double>::zeros(cfg);
  auto tr = encoder_forward<double>({{4, 5, 6, 0, 0}, {7, 8, 0, 0, 0}}, p);
  ASSERT_EQ(tr.length(), 5u);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(tr.top(t).norm(), 0.0);
}

TEST(Encoder, RejectsOutOfRangeIds) {
  ModelConfig cfg = tiny_config(2, 2, 2, 1, 5, 3);
  auto p = Params<double>::zeros(cfg);
  EXPECT_THROW(encoder_forward<double>({{1, 2, 9}}, p), UsageError);
  EXPECT_THROW(encoder_forward<double>({{1, 2, 3}, {1, 2}}, p), UsageError);
}

TEST(Attention, IdenticalStatesGiveUniformWeights) {
  ModelConfig cfg = tiny_config(3, 4, 3, 1, 6, 20);
  auto p = Params<double>::uniform(cfg, 3, 0.5);
  Mat<double> hi(3, 1);
  hi << 0.2, -0.4, 0.9;
  std::vector<Mat<double>> h(20, hi);
  Mat<double> s(3, 1);
  s << 0.1, 0.2, 0.3;
  auto at = attention_context<double>(s, h, p);
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_NEAR(at.alpha(i, 0), 1.0 / 20, 1e-15);
  EXPECT_NEAR((at.context - hi).norm(), 0.0, 1e-14);
}

TEST(Attention, ZeroScoreVectorGivesMean) {
  ModelConfig cfg = tiny_config(2, 3, 2, 1, 6, 4);
  auto p = Params<double>::uniform(cfg, 5, 0.5);
  p.att_v.setZero();
  std::vector<Mat<double>> h;
  Mat<double> mean = Mat<double>::Zero(2, 1);
  for (int i = 0; i < 4; ++i) {
    Mat<double> v(2, 1);
    v << i, -2.0 * i + 1;
    h.push_back(v);
    mean += v / 4.0;
  }
  auto at = attention_context<double>(Mat<double>::Constant(2, 1, 0.3), h, p);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(at.alpha(i, 0), 0.25);
  EXPECT_NEAR((at.context - mean).norm(), 0.0, 1e-15);
}

TEST(Attention, WeightsSumToOne) {
  ModelConfig cfg = tiny_config(3, 5, 3, 1, 6, 7);
  auto p = Params<double>::uniform(cfg, 8, 1.0);
  std::vector<Mat<double>> h;
  for (int i = 0; i < 7; ++i) h.push_back(Mat<double>::Random(3, 2));
  auto at = attention_context<double>(Mat<double>::Random(3, 2), h, p);
  for (Eigen::Index b = 0; b < 2; ++b) EXPECT_NEAR(at.alpha.col(b).sum(), 1.0, 1e-14);
}

TEST(Decoder, UpdateGateIdentities) {
  ModelConfig cfg = tiny_config(3, 3, 2, 1, 7, 4);
  auto p = Params<double>::uniform(cfg, 11, 0.5);
  Mat<double> y = Mat<double>::Random(2, 1), s = Mat<double>::Random(3, 1), c = Mat<double>::Random(3, 1);
  p.b_z.setConstant(-1000);
  auto closed = decoder_step<double>(y, s, c, p);
  EXPECT_NEAR((closed.s - s).norm(), 0.0, 1e-12);
  p.b_z.setConstant(1000);
  auto open = decoder_step<double>(y, s, c, p);
  EXPECT_NEAR((open.s - open.g).norm(), 0.0, 1e-12);
}

TEST(Decoder, OneUnitByHand) {
  ModelConfig cfg = tiny_config(1, 1, 1, 1, 3, 2);
  auto p = Params<double>::zeros(cfg);
  p.W_r(0, 0) = 0.5, p.U_r(0, 0) = -1, p.C_r(0, 0) = 0.25, p.b_r(0, 0) = 0.1;
  p.W_z(0, 0) = 1, p.U_z(0, 0) = 0.5, p.C_z(0, 0) = -0.5, p.b_z(0, 0) = 0;
  p.W_p(0, 0) = -0.3, p.U_p(0, 0) = 2, p.C_p(0, 0) = 0.7, p.b_p(0, 0) = -0.2;
  p.W_o(0, 0) = 0.2, p.U_o(0, 0) = 0.4, p.C_o(0, 0) = 0.6, p.b_o(0, 0) = 0.8;
  p.out_W << 1, -1, 2;
  p.out_b << 0, 0.5, -0.5;
  Mat<double> y(1, 1), s(1, 1), c(1, 1);
  y << 0.9;
  s << -0.4;
  c << 0.3;
  auto sg = [](double v) { return 1 / (1 + std::exp(-v)); };
  double r = sg(0.5 * 0.9 + -1 * -0.4 + 0.25 * 0.3 + 0.1);
  double z = sg(0.9 + 0.5 * -0.4 - 0.5 * 0.3);
  double g = std::tanh(-0.3 * 0.9 + 2 * (r * -0.4) + 0.7 * 0.3 - 0.2);
  double o = sg(0.2 * 0.9 + 0.4 * -0.4 + 0.6 * 0.3 + 0.8);
  auto st = decoder_step<double>(y, s, c, p);
  EXPECT_NEAR(st.s(0, 0), (1 - z) * -0.4 + z * g, 1e-15);
  EXPECT_NEAR(st.logits(1, 0), -o + 0.5, 1e-15);
}

TEST(Loss, UniformLogitsGiveLogV) {
  ModelConfig cfg = tiny_config(4, 4, 4, 2, 13, 6);
  auto p = Params<double>::uniform(cfg, 2, 0.5);
  p.out_W.setZero();
  p.out_b.setZero();
  EXPECT_NEAR(forward_loss<double>(fixed_batch(13, 6), p, cfg), std::log(13.0), 1e-12);
}

TEST(Loss, ConfidentCorrectLogitsApproachZero) {
  ModelConfig cfg = tiny_config(3, 3, 3, 1, 8, 4);
  auto p = Params<double>::uniform(cfg, 2, 0.5);
  p.out_W.setZero();
  p.out_b.setZero();
  p.out_b(kEos, 0) = 60;
  std::vector<Sample> batch = {{{4, 5, 0, 0}, {kEos}}, {{6, 0, 0, 0}, {kEos}}};
  EXPECT_LT(forward_loss<double>(batch, p, cfg), 1e-20);
  Params<double> grad = Params<double>::zeros(cfg);
  loss_and_gradient<double>(batch, p, cfg, grad);
  for (auto& [name, m] : grad.named()) EXPECT_LT(m->cwiseAbs().maxCoeff(), 1e-20) << name;
}

TEST(Loss, EmptyBatchAndBadTargets) {
  ModelConfig cfg = tiny_config(2, 2, 2, 1, 6, 3);
  auto p = Params<double>::zeros(cfg);
  EXPECT_THROW(forward_loss<double>({}, p, cfg), UsageError);
  EXPECT_THROW(forward_loss<double>({{{4, 0, 0}, {}}}, p, cfg), UsageError);
  EXPECT_THROW(forward_loss<double>({{{4, 0, 0}, {4, 4, 4, kEos}}}, p, cfg), UsageError);
  EXPECT_THROW(forward_loss<double>({{{4, 0, 0}, {9, kEos}}}, p, cfg), UsageError);
}

TEST(Gradient, EveryGroupPassesFiniteDifferences) {
  for (std::size_t layers : {1, 2}) {
    auto s = make_gradcheck_setup(4, 12, 6, layers, 7);
    auto checks = gradient_check(s.batch, s.params, s.cfg, 1e-4);
    EXPECT_EQ(checks.size(), 1 + 3 * layers + 2 + 3 + 1 + 16 + 2);
    for (const auto& c : checks) EXPECT_LT(c.relative_error, 1e-4) << c.name << " layers " << layers;
  }
}

TEST(Gradient, AttentionWidthDiffersFromHidden) {
  ModelConfig cfg = tiny_config(3, 5, 2, 2, 10, 5);
  auto p = Params<double>::uniform(cfg, 9, 0.5);
  for (const auto& c : gradient_check(fixed_batch(10, 5), p, cfg, 1e-4)) EXPECT_LT(c.relative_error, 1e-4) << c.name;
}

TEST(Gradient, MaskedPadEmbeddingGetsNoGradient) {
  auto s = make_gradcheck_setup(4, 12, 6, 2, 3);
  Params<double> grad = Params<double>::zeros(s.cfg);
  loss_and_gradient<double>(s.batch, s.params, s.cfg, grad);
  EXPECT_EQ(grad.tgt_embedding.col(kPad).norm(), 0.0);
  EXPECT_GT(grad.tgt_embedding.col(kGo).norm(), 0.0);
}

TEST(Gradient, TrailingSourcePadIsInvisible) {
  ModelConfig cfg = tiny_config(4, 4, 4, 2, 11, 6);
  auto p = Params<double>::uniform(cfg, 5, 0.5);
  auto batch = fixed_batch(11, 6);
  Params<double> grad = Params<double>::zeros(cfg);
  double loss = loss_and_gradient<double>(batch, p, cfg, grad);
  EXPECT_EQ(grad.src_embedding.col(kPad).norm(), 0.0);
  p.src_embedding.col(kPad).setConstant(3.0);
  EXPECT_EQ(forward_loss<double>(batch, p, cfg), loss);
}

TEST(Attention, MaskedPositionsGetExactlyZeroWeight) {
  ModelConfig cfg = tiny_config(3, 4, 3, 1, 10, 5);
  auto p = Params<double>::uniform(cfg, 8, 0.5);
  std::vector<Mat<double>> h, proj;
  for (int i = 0; i < 5; ++i) {
    h.push_back(Mat<double>::Random(3, 2));
    proj.push_back(p.att_U * h.back());
  }
  std::vector<std::size_t> lengths = {2, 5};
  auto at = attention_context<double>(Mat<double>::Random(3, 2), h, proj, p, lengths);
  for (int i = 2; i < 5; ++i) EXPECT_EQ(at.alpha(i, 0), 0.0);
  EXPECT_NEAR(at.alpha.col(0).sum(), 1.0, 1e-12);
  EXPECT_GT(at.alpha(4, 1), 0.0);
  EXPECT_EQ(source_lengths({{4, 5, 0, 0}, {0, 0, 0}, {4, 0, 5}}), (std::vector<std::size_t>{2, 1, 3}));
}

TEST(Gradient, ClippingBoundsGlobalNorm) {
  auto s = make_gradcheck_setup(4, 12, 6, 1, 3);
  Params<double> grad = Params<double>::zeros(s.cfg);
  loss_and_gradient<double>(s.batch, s.params, s.cfg, grad);
  double before = clip_gradients<double>(grad, 1e-3);
  double sq = 0;
  for (auto& [n, m] : grad.named()) sq += m->squaredNorm();
  EXPECT_GT(before, 1e-3);
  EXPECT_NEAR(std::sqrt(sq), 1e-3, 1e-12);
}

TEST(Decode, ZeroModelIsDeterministicAndEmpty) {
  ModelConfig cfg = tiny_config(3, 3, 3, 1, 8, 25);
  auto p = Params<double>::zeros(cfg);
  auto out = decode_greedy<double>({{4, 5, 0}, {6, 0, 0}}, p, 25);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_TRUE(out[0].empty());
  EXPECT_EQ(out, decode_greedy<double>({{4, 5, 0}, {6, 0, 0}}, p, 25));
}

TEST(Decode, LengthBoundedByDecoderLen) {
  ModelConfig cfg = tiny_config(3, 3, 3, 1, 8, 25);
  auto p = Params<double>::zeros(cfg);
  p.out_b(5, 0) = 1;
  auto out = decode_greedy<double>({{4, 5, 0}}, p, 25);
  EXPECT_EQ(out[0], std::vector<int>(25, 5));
  p.out_b(kEos, 0) = 2;
  EXPECT_TRUE(decode_greedy<double>({{4, 5, 0}}, p, 25)[0].empty());
}

TEST(Encoding, InputLayout) {
  Corpus c({{0, 0, SemioticClass::Date, "2017", "twenty seventeen"}});
  Vocabulary v = build_vocab(c, VocabKind::Character, 100);
  auto ids = encode_input("2017", SemioticClass::Date, v, 20);
  ASSERT_EQ(ids.size(), 20u);
  EXPECT_EQ(ids[0], v.label_id(SemioticClass::Date));
  EXPECT_EQ(ids[1], v.id("2"));
  EXPECT_EQ(ids[2], v.id("0"));
  EXPECT_EQ(ids[3], v.id("1"));
  EXPECT_EQ(ids[4], v.id("7"));
  for (std::size_t i = 5; i < 20; ++i) EXPECT_EQ(ids[i], Vocabulary::kPad);
  auto url = encode_input("http://example.com/abcdefghij", SemioticClass::Electronic, v, 20);
  EXPECT_EQ(url.size(), 20u);
  EXPECT_NE(url.back(), Vocabulary::kPad);
  auto exact = encode_input(std::string(19, '2'), SemioticClass::Digit, v, 20);
  EXPECT_EQ(exact.back(), v.id("2"));
}

TEST(Encoding, TargetTruncatedBeforeEos) {
  Corpus c({{0, 0, SemioticClass::Cardinal, "1", "a b c d e"}});
  Vocabulary v = build_vocab(c, VocabKind::Word, 100);
  EXPECT_EQ(encode_target("a b c", v, 25), (std::vector<int>{v.id("a"), v.id("b"), v.id("c"), Vocabulary::kEos}));
  EXPECT_EQ(encode_target("a b c d e", v, 3), (std::vector<int>{v.id("a"), v.id("b"), Vocabulary::kEos}));
  EXPECT_EQ(encode_target("zzz", v, 25), (std::vector<int>{Vocabulary::kUnk, Vocabulary::kEos}));
}

TEST(Train, DeterministicPerSeed) {
  ModelConfig cfg;
  cfg.hidden_units = cfg.attention_units = 8;
  cfg.layers = 1;
  cfg.batch_size = 5;
  cfg.epochs = 2;
  auto a = train_normalizer(digit_corpus(2), cfg, 3);
  auto b = train_normalizer(digit_corpus(2), cfg, 3);
  ASSERT_EQ(a.epochs.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.epochs[i].mean_loss, b.epochs[i].mean_loss);
  EXPECT_TRUE(a.model.params() == b.model.params());
  auto c = train_normalizer(digit_corpus(2), cfg, 4);
  EXPECT_FALSE(a.model.params() == c.model.params());
  EXPECT_DOUBLE_EQ(a.epochs[1].lr, cfg.initial_lr * cfg.lr_decay);
}

TEST(Train, DigitToyDecodesSeven) {
  ModelConfig cfg;
  cfg.hidden_units = cfg.attention_units = 16;
  cfg.layers = 1;
  cfg.batch_size = 10;
  cfg.epochs = 30;
  cfg.initial_lr = 0.01;
  cfg.lr_decay = 1.0;
  cfg.optimizer = Optimizer::Adam;
  cfg.init_scale = 0.3;
  auto res = train_normalizer(digit_corpus(5), cfg, 1);
  EXPECT_EQ(res.model.normalize("7", SemioticClass::Digit), "seven");
  EXPECT_EQ(res.model.normalize("0", SemioticClass::Digit), "o");
  EXPECT_LT(res.epochs.back().mean_loss, res.epochs.front().mean_loss);
}

TEST(Train, RejectsEmptyTransformingSet) {
  Corpus c({{0, 0, SemioticClass::Plain, "a", "a"}});
  EXPECT_THROW(train_normalizer(c, ModelConfig{}, 1), DataError);
}

TEST(Config, Validation) {
  ModelConfig cfg = tiny_config(2, 2, 2, 1, 6, 3);
  EXPECT_NO_THROW(cfg.validate());
  cfg.lr_decay = 1.5;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = tiny_config(2, 2, 2, 1, 6, 3);
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = tiny_config(2, 2, 2, 1, 2, 3);
  EXPECT_THROW(cfg.validate(), UsageError);
  EXPECT_EQ(parse_optimizer("adam"), Optimizer::Adam);
  EXPECT_THROW(parse_optimizer("rmsprop"), UsageError);
}

TEST(Checkpoint, RoundTrip) {
  ModelConfig cfg;
  cfg.hidden_units = cfg.attention_units = 6;
  cfg.layers = 2;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.momentum = 0.5;
  auto res = train_normalizer(digit_corpus(1), cfg, 2);
  std::stringstream buf;
  res.model.save(buf);
  std::string bytes = buf.str();
  Normalizer back = Normalizer::load(buf);
  EXPECT_TRUE(back.params() == res.model.params());
  EXPECT_EQ(back.source_vocab(), res.model.source_vocab());
  EXPECT_EQ(back.target_vocab(), res.model.target_vocab());
  EXPECT_EQ(back.config().momentum, 0.5);
  EXPECT_EQ(back.config().hidden_units, 6u);
  EXPECT_EQ(back.normalize("5", SemioticClass::Digit), res.model.normalize("5", SemioticClass::Digit));
  std::ostringstream again;
  back.save(again);
  EXPECT_EQ(again.str(), bytes);

  std::string bad = bytes;
  bad[1] = 'Q';
  std::istringstream a(bad);
  EXPECT_THROW(Normalizer::load(a), DataError);
  std::istringstream b(bytes.substr(0, bytes.size() - 9));
  EXPECT_THROW(Normalizer::load(b), DataError);
  std::istringstream c(bytes + "!");
  EXPECT_THROW(Normalizer::load(c), DataError);
}
