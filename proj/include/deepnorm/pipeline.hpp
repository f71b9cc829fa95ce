// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "deepnorm/corpus.hpp"
#include "deepnorm/csv.hpp"
#include "deepnorm/features.hpp"
#include "deepnorm/gbdt.hpp"
#include "deepnorm/memorization.hpp"
#include "deepnorm/normalizer.hpp"
#include "deepnorm/verbalize.hpp"

// Two-stage routing: the classifier labels every token, PLAIN and PUNCT
// tokens are echoed, and the rest go to the selected normalizer backend.

namespace deepnorm {

enum class Backend : std::uint8_t { Seq2seq, Verbalizer, Memorization };

inline std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Seq2seq: return "seq2seq";
    case Backend::Verbalizer: return "verbalizer";
    case Backend::Memorization: return "memorization";
  }
  return "?";
}

inline Backend parse_backend(std::string_view s) {
  if (s == "seq2seq") return Backend::Seq2seq;
  if (s == "verbalizer") return Backend::Verbalizer;
  if (s == "memorization") return Backend::Memorization;
  throw UsageError("unknown backend: " + std::string(s) + " (expected seq2seq, verbalizer or memorization)");
}

struct PipelineModel {
  std::optional<gbdt::Ensemble> classifier;  // absent: gold classes must be supplied
  std::size_t window = 10;
  Backend backend = Backend::Verbalizer;
  std::shared_ptr<const Normalizer> normalizer;
  std::shared_ptr<const VerbalizerRegistry> registry = std::make_shared<VerbalizerRegistry>();
  std::shared_ptr<const MemorizationTable> table;

  void validate() const {
    if (backend == Backend::Seq2seq && !normalizer) throw UsageError("seq2seq backend needs a normalizer model");
    if (backend == Backend::Memorization && !table) throw UsageError("memorization backend needs a table");
    if (!registry) throw UsageError("pipeline needs a verbalizer registry");
    if (classifier && classifier->width != 3 * window)
      throw UsageError("classifier width " + std::to_string(classifier->width) + " does not match window " +
                       std::to_string(window));
  }
};

/// Classifier output for every token, in corpus order.
inline std::vector<SemioticClass> classify_corpus(const Corpus& c, const gbdt::Ensemble& m, std::size_t window) {
  EncodedCorpus e = encode_corpus(c, window);
  std::vector<SemioticClass> out;
  out.reserve(c.size());
  for (std::size_t i = 0; i < e.x.rows; ++i) out.push_back(m.predict_class(e.x.row(i)));
  return out;
}

inline std::vector<SemioticClass> gold_classes(const Corpus& c) {
  if (!c.labeled()) throw UsageError("gold classes need a labeled corpus");
  std::vector<SemioticClass> out;
  out.reserve(c.size());
  for (const Token& t : c.tokens()) out.push_back(*t.cls);
  return out;
}

struct Predictions {
  std::vector<std::string> after;
  std::vector<SemioticClass> classes;  // class each token was routed with
};

namespace pipeline_detail {

inline std::string route_one(const std::string& before, SemioticClass cls, const PipelineModel& m) {
  if (!is_transforming(cls)) return before;
  switch (m.backend) {
    case Backend::Verbalizer: return m.registry->apply_or_echo(cls, before);
    case Backend::Memorization:
      if (auto hit = m.table->lookup(before)) return *hit;
      return m.registry->apply_or_echo(cls, before);
    case Backend::Seq2seq: return m.normalizer->normalize(before, cls);
  }
  return before;
}

}  // namespace pipeline_detail

/// Routes tokens with the given classes (predicted or gold).
inline Predictions normalize_with_classes(const Corpus& c, std::vector<SemioticClass> classes,
                                          const PipelineModel& m) {
  m.validate();
  if (classes.size() != c.size()) throw UsageError("class count does not match corpus size");
  Predictions p{std::vector<std::string>(c.size()), std::move(classes)};
  if (m.backend == Backend::Seq2seq) {
    std::vector<std::size_t> idx;
    std::vector<std::string> before;
    std::vector<SemioticClass> cls;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (is_transforming(p.classes[i])) {
        idx.push_back(i);
        before.push_back(c[i].before);
        cls.push_back(p.classes[i]);
      } else {
        p.after[i] = c[i].before;
      }
    }
    auto out = m.normalizer->normalize(before, cls);
    for (std::size_t j = 0; j < idx.size(); ++j) p.after[idx[j]] = std::move(out[j]);
    return p;
  }
  for (std::size_t i = 0; i < c.size(); ++i) p.after[i] = pipeline_detail::route_one(c[i].before, p.classes[i], m);
  return p;
}

/// Classifies with the model's classifier, or uses gold classes when asked.
inline Predictions normalize_corpus(const Corpus& c, const PipelineModel& m, bool use_gold_classes = false) {
  if (use_gold_classes) return normalize_with_classes(c, gold_classes(c), m);
  if (!m.classifier) throw UsageError("pipeline has no classifier; gold classes required");
  m.validate();
  return normalize_with_classes(c, classify_corpus(c, *m.classifier, m.window), m);
}

inline std::string normalize_token(const Corpus& c, std::size_t sentence, std::size_t token, const PipelineModel& m) {
  m.validate();
  if (!m.classifier) throw UsageError("pipeline has no classifier");
  FeatureVector v = encode_window(c, sentence, token, m.window);
  SemioticClass cls = m.classifier->predict_class(v.values);
  return pipeline_detail::route_one(c.sentence(sentence)[token].before, cls, m);
}

/// id = "sentence_token", after = prediction.
inline void write_predictions(std::ostream& out, const Corpus& c, const Predictions& p) {
  if (p.after.size() != c.size()) throw UsageError("prediction count does not match corpus size");
  csv::write_record(out, {"id", "after"});
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::string id = std::to_string(c[i].sentence_id) + "_" + std::to_string(c[i].token_id);
    csv::write_record(out, {id, p.after[i]});
  }
}

/// Reads a predictions file and aligns it with `c` by id. Every token of `c`
/// must have exactly one row.
inline std::vector<std::string> read_predictions(std::istream& in, const Corpus& c,
                                                 const std::string& source = "predictions") {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->fields.size() != 2 || header->fields[0] != "id" || header->fields[1] != "after")
    throw DataError(source + ": expected header id,after");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < c.size(); ++i)
    index.emplace(std::to_string(c[i].sentence_id) + "_" + std::to_string(c[i].token_id), i);
  std::vector<std::string> out(c.size());
  std::vector<bool> seen(c.size(), false);
  while (auto rec = reader.next()) {
    if (rec->fields.size() != 2)
      throw DataError(source + ":" + std::to_string(rec->line) + ": expected 2 columns, got " +
                      std::to_string(rec->fields.size()));
    auto it = index.find(rec->fields[0]);
    if (it == index.end()) throw DataError(source + ":" + std::to_string(rec->line) + ": unknown id " + rec->fields[0]);
    if (seen[it->second]) throw DataError(source + ":" + std::to_string(rec->line) + ": duplicate id " + rec->fields[0]);
    seen[it->second] = true;
    out[it->second] = rec->fields[1];
  }
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!seen[i])
      throw DataError(source + ": no prediction for id " + std::to_string(c[i].sentence_id) + "_" +
                      std::to_string(c[i].token_id));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct ClassScore {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

struct EvalReport {
  std::string backend;
  std::string timestamp;
  std::size_t count = 0;
  std::size_t correct = 0;
  std::array<ClassScore, kClassCount> per_class{};

  double accuracy() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

/// Exact match after trimming outer whitespace, keyed by gold class.
inline EvalReport evaluate(const std::vector<std::string>& predictions, const Corpus& gold, std::string backend = {},
                           std::string timestamp = {}) {
  if (!gold.labeled()) throw UsageError("evaluation needs a labeled gold corpus");
  if (predictions.size() != gold.size())
    throw UsageError("prediction count " + std::to_string(predictions.size()) + " does not match gold size " +
                     std::to_string(gold.size()));
  EvalReport r;
  r.backend = std::move(backend);
  r.timestamp = std::move(timestamp);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Token& t = gold[i];
    bool ok = trim(predictions[i]) == trim(*t.after);
    ClassScore& cs = r.per_class[class_id(*t.cls)];
    ++cs.count;
    ++r.count;
    if (ok) {
      ++cs.correct;
      ++r.correct;
    }
  }
  return r;
}

/// Aligned table: overall row, then one row per class present in the gold data.
inline void write_report_text(std::ostream& out, const EvalReport& r) {
  auto row = [&](std::string_view name, std::size_t n, double a) {
    out << std::left << std::setw(12) << name << std::right << std::setw(10) << n << "  " << std::fixed
        << std::setprecision(4) << a << '\n';
  };
  if (!r.backend.empty()) out << "backend: " << r.backend << '\n';
  if (!r.timestamp.empty()) out << "timestamp: " << r.timestamp << '\n';
  out << std::left << std::setw(12) << "class" << std::right << std::setw(10) << "tokens" << "  accuracy\n";
  row("All", r.count, r.accuracy());
  for (SemioticClass c : kAllClasses) {
    const ClassScore& cs = r.per_class[class_id(c)];
    if (cs.count) row(class_name(c), cs.count, cs.accuracy());
  }
  out.unsetf(std::ios::floatfield);
}

inline void write_report_kv(std::ostream& out, const EvalReport& r) {
  out << "backend=" << r.backend << '\n';
  out << "timestamp=" << r.timestamp << '\n';
  out << "tokens=" << r.count << '\n';
  out << "correct=" << r.correct << '\n';
  out << std::setprecision(17) << "accuracy=" << r.accuracy() << '\n';
  for (SemioticClass c : kAllClasses) {
    const ClassScore& cs = r.per_class[class_id(c)];
    out << "class." << class_name(c) << ".tokens=" << cs.count << '\n';
    out << "class." << class_name(c) << ".correct=" << cs.correct << '\n';
    out << "class." << class_name(c) << ".accuracy=" << cs.accuracy() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sweeps

struct WindowRow {
  std::size_t window = 0;
  double dev_accuracy = 0;
  std::size_t rounds = 0;
};

/// Trains one classifier per window size and reports dev accuracy.
inline std::vector<WindowRow> sweep_windows(const Corpus& train, const Corpus& dev, const std::vector<std::size_t>& windows,
                                            const gbdt::Config& cfg) {
  if (windows.empty()) throw UsageError("sweep needs at least one window size");
  std::vector<WindowRow> rows;
  for (std::size_t k : windows) {
    EncodedCorpus tr = encode_corpus(train, k);
    EncodedCorpus dv = encode_corpus(dev, k);
    auto fit = gbdt::fit(tr, &dv, cfg);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < dv.x.rows; ++i)
      hit += class_id(fit.model.predict_class(dv.x.row(i))) == dv.labels[i];
    rows.push_back({k, dv.x.rows ? static_cast<double>(hit) / static_cast<double>(dv.x.rows) : 0.0, fit.best_round});
  }
  return rows;
}

struct ModelCell {
  std::size_t hidden = 0;
  std::size_t layers = 0;
  double accuracy = 0;
};

/// Trains one normalizer per (hidden, layers) pair with a shared seed and
/// reports pipeline exact-match accuracy on `dev`. Tokens are routed with
/// `dev_classes` (classifier output or gold labels).
inline std::vector<ModelCell> sweep_models(const Corpus& train, const Corpus& dev,
                                           const std::vector<SemioticClass>& dev_classes,
                                           const std::vector<std::size_t>& hidden,
                                           const std::vector<std::size_t>& layers, const seq2seq::ModelConfig& base,
                                           std::uint64_t seed, const seq2seq::EpochCallback& on_epoch = {}) {
  if (hidden.empty() || layers.empty()) throw UsageError("sweep needs at least one model setting");
  std::vector<ModelCell> cells;
  for (std::size_t h : hidden) {
    for (std::size_t l : layers) {
      seq2seq::ModelConfig cfg = base;
      cfg.hidden_units = h;
      cfg.layers = l;
      auto trained = train_normalizer(train, cfg, seed, on_epoch);
      PipelineModel m;
      m.backend = Backend::Seq2seq;
      m.normalizer = std::make_shared<Normalizer>(std::move(trained.model));
      auto p = normalize_with_classes(dev, dev_classes, m);
      cells.push_back({h, l, evaluate(p.after, dev).accuracy()});
    }
  }
  return cells;
}

inline void write_window_table(std::ostream& out, const std::vector<WindowRow>& rows) {
  out << std::left << std::setw(8) << "window" << std::right << std::setw(14) << "dev_accuracy" << std::setw(8)
      << "rounds" << '\n';
  for (auto& r : rows)
    out << std::left << std::setw(8) << r.window << std::right << std::setw(14) << std::fixed << std::setprecision(4)
        << r.dev_accuracy << std::setw(8) << r.rounds << '\n';
  out.unsetf(std::ios::floatfield);
}

/// Rows are hidden sizes, columns layer counts.
inline void write_model_table(std::ostream& out, const std::vector<ModelCell>& cells) {
  std::vector<std::size_t> hs, ls;
  for (auto& c : cells) {
    if (std::find(hs.begin(), hs.end(), c.hidden) == hs.end()) hs.push_back(c.hidden);
    if (std::find(ls.begin(), ls.end(), c.layers) == ls.end()) ls.push_back(c.layers);
  }
  out << std::left << std::setw(8) << "nodes";
  for (auto l : ls) out << std::right << std::setw(10) << (std::to_string(l) + " layers");
  out << '\n';
  for (auto h : hs) {
    out << std::left << std::setw(8) << h;
    for (auto l : ls) {
      auto it = std::find_if(cells.begin(), cells.end(), [&](auto& c) { return c.hidden == h && c.layers == l; });
      out << std::right << std::setw(10) << std::fixed << std::setprecision(4) << (it == cells.end() ? 0.0 : it->accuracy);
    }
    out << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace deepnorm
