// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "deepnorm/binary_io.hpp"
#include "deepnorm/corpus.hpp"
#include "deepnorm/seq2seq.hpp"
#include "deepnorm/utf8.hpp"

// Trained sequence model bundled with its vocabularies, plus input/target
// encoding and the checkpoint format.

namespace deepnorm {

/// [label, chars of before..., PAD...], exactly encoder_len ids. Characters
/// past encoder_len - 1 are dropped; unknown characters map to UNK.
inline std::vector<int> encode_input(const std::string& before, SemioticClass cls, const Vocabulary& source,
                                     std::size_t encoder_len) {
  if (encoder_len == 0) throw UsageError("encoder_len must be positive");
  std::vector<int> ids;
  ids.reserve(encoder_len);
  ids.push_back(source.label_id(cls));
  for (const std::string& ch : utf8::characters(before)) {
    if (ids.size() == encoder_len) break;
    ids.push_back(source.id(ch));
  }
  ids.resize(encoder_len, Vocabulary::kPad);
  return ids;
}

/// Word ids of after followed by EOS; at most decoder_len ids in total.
inline std::vector<int> encode_target(const std::string& after, const Vocabulary& target, std::size_t decoder_len) {
  if (decoder_len == 0) throw UsageError("decoder_len must be positive");
  std::vector<int> ids;
  for (const std::string& w : split_words(after)) {
    if (ids.size() + 1 == decoder_len) break;
    ids.push_back(target.id(w));
  }
  ids.push_back(Vocabulary::kEos);
  return ids;
}

class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(seq2seq::ModelConfig cfg, Vocabulary source, Vocabulary target, seq2seq::Params<double> params)
      : cfg_(std::move(cfg)), source_(std::move(source)), target_(std::move(target)), params_(std::move(params)) {}

  const seq2seq::ModelConfig& config() const { return cfg_; }
  const Vocabulary& source_vocab() const { return source_; }
  const Vocabulary& target_vocab() const { return target_; }
  const seq2seq::Params<double>& params() const { return params_; }

  seq2seq::Sample sample(const Token& t) const {
    if (!t.cls || !t.after) throw UsageError("training samples need class and after");
    return {encode_input(t.before, *t.cls, source_, cfg_.encoder_len),
            encode_target(*t.after, target_, cfg_.decoder_len)};
  }

  /// Greedy decode of several tokens at once. An empty decode echoes before.
  std::vector<std::string> normalize(const std::vector<std::string>& before,
                                     const std::vector<SemioticClass>& classes) const {
    if (before.size() != classes.size()) throw UsageError("normalize: size mismatch");
    std::vector<std::vector<int>> inputs;
    inputs.reserve(before.size());
    for (std::size_t i = 0; i < before.size(); ++i)
      inputs.push_back(encode_input(before[i], classes[i], source_, cfg_.encoder_len));
    std::vector<std::string> out;
    out.reserve(before.size());
    for (std::size_t start = 0; start < inputs.size(); start += cfg_.batch_size) {
      std::size_t end = std::min(inputs.size(), start + cfg_.batch_size);
      std::vector<std::vector<int>> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                          inputs.begin() + static_cast<std::ptrdiff_t>(end));
      auto decoded = seq2seq::decode_greedy<double>(chunk, params_, cfg_.decoder_len);
      for (std::size_t j = 0; j < decoded.size(); ++j) {
        std::vector<std::string> words;
        for (int id : decoded[j]) words.push_back(target_.symbol(id));
        out.push_back(words.empty() ? before[start + j] : join_words(words));
      }
    }
    return out;
  }

  std::string normalize(const std::string& before, SemioticClass cls) const {
    return normalize(std::vector<std::string>{before}, std::vector<SemioticClass>{cls}).front();
  }

  double loss(const std::vector<Token>& tokens) const {
    std::vector<seq2seq::Sample> batch;
    for (const Token& t : tokens) batch.push_back(sample(t));
    return seq2seq::forward_loss<double>(batch, params_, cfg_);
  }

  // Checkpoint layout (little-endian):
  //   "DNS2" u32 version=1
  //   config: u64 encoder_len, decoder_len, layers, hidden_units, attention_units,
  //           embedding_dim, source_vocab, target_vocab, max_target_vocab, batch_size, epochs
  //           f64 initial_lr, lr_decay, clip_norm, init_scale, momentum
  //           u8 optimizer (0 sgd, 1 adam)
  //   vocabulary x2 (source, target): u8 kind, u64 n, n strings (non-reserved symbols)
  //   u64 tensor count, then per tensor: string name, u64 rows, u64 cols, rows*cols f64 column-major
  //   string = u64 length + bytes
  static constexpr std::uint32_t kVersion = 1;

  void save(std::ostream& out) const {
    binio::Writer w(out);
    w.put_bytes("DNS2", 4);
    w.put<std::uint32_t>(kVersion);
    for (std::size_t v : {cfg_.encoder_len, cfg_.decoder_len, cfg_.layers, cfg_.hidden_units, cfg_.attention_units,
                          cfg_.embedding_dim, cfg_.source_vocab, cfg_.target_vocab, cfg_.max_target_vocab,
                          cfg_.batch_size, cfg_.epochs})
      w.put<std::uint64_t>(v);
    for (double v : {cfg_.initial_lr, cfg_.lr_decay, cfg_.clip_norm, cfg_.init_scale, cfg_.momentum})
      w.put<double>(v);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg_.optimizer));
    for (const Vocabulary* v : {&source_, &target_}) {
      w.put<std::uint8_t>(static_cast<std::uint8_t>(v->kind()));
      auto syms = v->symbols();
      w.put<std::uint64_t>(syms.size());
      for (auto& s : syms) w.put_string(s);
    }
    auto named = params_.named();
    w.put<std::uint64_t>(named.size());
    for (auto& [name, m] : named) {
      w.put_string(name);
      w.put<std::uint64_t>(static_cast<std::uint64_t>(m->rows()));
      w.put<std::uint64_t>(static_cast<std::uint64_t>(m->cols()));
      w.put_bytes(m->data(), sizeof(double) * static_cast<std::size_t>(m->size()));
    }
    w.check("normalizer checkpoint");
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    save(out);
  }

  static Normalizer load(std::istream& in, const std::string& source = "normalizer checkpoint") {
    binio::Reader r(in, source);
    r.expect_header("DNS2", kVersion);
    seq2seq::ModelConfig cfg;
    for (std::size_t* v : {&cfg.encoder_len, &cfg.decoder_len, &cfg.layers, &cfg.hidden_units,
                           &cfg.attention_units, &cfg.embedding_dim, &cfg.source_vocab, &cfg.target_vocab,
                           &cfg.max_target_vocab, &cfg.batch_size, &cfg.epochs})
      *v = static_cast<std::size_t>(r.get<std::uint64_t>());
    for (double* v : {&cfg.initial_lr, &cfg.lr_decay, &cfg.clip_norm, &cfg.init_scale, &cfg.momentum})
      *v = r.get<double>();
    auto opt = r.get<std::uint8_t>();
    if (opt > 1) throw DataError(source + ": unknown optimizer id " + std::to_string(opt));
    cfg.optimizer = static_cast<seq2seq::Optimizer>(opt);
    if (cfg.hidden_units > 65536 || cfg.attention_units > 65536 || cfg.layers > 64 || cfg.embedding_dim > 65536 ||
        cfg.source_vocab > (1u << 24) || cfg.target_vocab > (1u << 24))
      throw DataError(source + ": implausible model dimensions");
    try {
      cfg.validate();
    } catch (const UsageError& e) {
      throw DataError(source + ": " + e.what());
    }
    Vocabulary vocabs[2];
    for (Vocabulary& v : vocabs) {
      auto kind = r.get<std::uint8_t>();
      if (kind > 1) throw DataError(source + ": bad vocabulary kind");
      auto n = r.get<std::uint64_t>();
      if (n > (1u << 24)) throw DataError(source + ": corrupt vocabulary size");
      std::vector<std::string> syms;
      for (std::uint64_t i = 0; i < n; ++i) syms.push_back(r.get_string());
      v = Vocabulary(static_cast<VocabKind>(kind), syms);
    }
    if (vocabs[0].kind() != VocabKind::Character || vocabs[1].kind() != VocabKind::Word)
      throw DataError(source + ": vocabulary kinds do not match");
    if (vocabs[0].size() != cfg.source_vocab || vocabs[1].size() != cfg.target_vocab)
      throw DataError(source + ": vocabulary sizes do not match config");
    auto params = seq2seq::Params<double>::zeros(cfg);
    auto named = params.named();
    if (r.get<std::uint64_t>() != named.size()) throw DataError(source + ": tensor count does not match config");
    for (auto& [name, m] : named) {
      if (r.get_string() != name) throw DataError(source + ": expected tensor " + name);
      auto rows = r.get<std::uint64_t>();
      auto cols = r.get<std::uint64_t>();
      if (rows != static_cast<std::uint64_t>(m->rows()) || cols != static_cast<std::uint64_t>(m->cols()))
        throw DataError(source + ": shape mismatch for " + name);
      r.get_bytes(m->data(), sizeof(double) * static_cast<std::size_t>(m->size()));
    }
    r.expect_end();
    return Normalizer(cfg, std::move(vocabs[0]), std::move(vocabs[1]), std::move(params));
  }

  static Normalizer load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return load(in, path);
  }

 private:
  seq2seq::ModelConfig cfg_;
  Vocabulary source_{VocabKind::Character, {}};
  Vocabulary target_;
  seq2seq::Params<double> params_;
};

struct NormalizerTraining {
  Normalizer model;
  std::vector<seq2seq::EpochLog> epochs;
  std::size_t steps = 0;
};

/// Trains on the transforming tokens of a labeled corpus. Vocabulary sizes
/// in `cfg` are overwritten from the data.
inline NormalizerTraining train_normalizer(const Corpus& train, seq2seq::ModelConfig cfg, std::uint64_t seed,
                                           const seq2seq::EpochCallback& on_epoch = {}) {
  if (!train.labeled()) throw UsageError("normalizer training needs a labeled corpus");
  Corpus data = transforming_only(train);
  if (data.size() == 0) throw DataError("no transforming tokens to train on");
  Vocabulary source = build_vocab(data, VocabKind::Character, 1u << 20);
  Vocabulary target = build_vocab(data, VocabKind::Word, cfg.max_target_vocab);
  cfg.source_vocab = source.size();
  cfg.target_vocab = target.size();
  Normalizer shell(cfg, source, target, {});
  std::vector<seq2seq::Sample> samples;
  samples.reserve(data.size());
  for (const Token& t : data.tokens()) samples.push_back(shell.sample(t));
  auto res = seq2seq::train<double>(samples, cfg, seed, on_epoch);
  return {Normalizer(cfg, std::move(source), std::move(target), std::move(res.params)), std::move(res.epochs),
          res.steps};
}

}  // namespace deepnorm
