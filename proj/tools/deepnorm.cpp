// SPDX-License-Identifier: Apache-2.0
// deepnorm: corpus statistics, training, prediction, evaluation and sweeps.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "deepnorm/corpus.hpp"
#include "deepnorm/features.hpp"
#include "deepnorm/gbdt.hpp"
#include "deepnorm/memorization.hpp"
#include "deepnorm/normalizer.hpp"
#include "deepnorm/pipeline.hpp"
#include "deepnorm/seq2seq.hpp"
#include "deepnorm/synth.hpp"
#include "deepnorm/verbalize.hpp"

namespace dn = deepnorm;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dn::DataError("cannot open for writing: " + path);
  return out;
}

void log_config(const std::string& key, const auto& value) { std::cerr << "config " << key << "=" << value << '\n'; }

// Flags shared by the commands that read or build models.
struct GbdtFlags {
  dn::gbdt::Config cfg;
  std::size_t window = 10;

  void add(CLI::App* app) {
    app->add_option("-k,--window", window, "context window size k")->check(CLI::PositiveNumber);
    app->add_option("--max-depth", cfg.max_depth, "maximum tree depth")->capture_default_str();
    app->add_option("--eta", cfg.learning_rate, "shrinkage")->capture_default_str();
    app->add_option("--rounds", cfg.rounds, "maximum boosting rounds")->capture_default_str();
    app->add_option("--patience", cfg.early_stopping_patience, "early stopping patience in rounds")
        ->capture_default_str();
    app->add_option("--min-child-weight", cfg.min_child_weight, "minimum hessian sum per child")
        ->capture_default_str();
    app->add_option("--lambda", cfg.lambda, "L2 regularization on leaf weights")->capture_default_str();
  }

  void log() const {
    log_config("window", window);
    log_config("max_depth", cfg.max_depth);
    log_config("eta", cfg.learning_rate);
    log_config("rounds", cfg.rounds);
    log_config("patience", cfg.early_stopping_patience);
    log_config("min_child_weight", cfg.min_child_weight);
    log_config("lambda", cfg.lambda);
    log_config("threads", cfg.threads);
  }
};

struct ModelFlags {
  dn::seq2seq::ModelConfig cfg;
  std::string optimizer = "sgd";

  void add(CLI::App* app) {
    app->add_option("--hidden", cfg.hidden_units, "hidden units")->capture_default_str();
    app->add_option("--layers", cfg.layers, "encoder LSTM layers")->capture_default_str();
    app->add_option("--attention", cfg.attention_units, "attention units")->capture_default_str();
    app->add_option("--embedding", cfg.embedding_dim, "embedding size (0: same as hidden)")->capture_default_str();
    app->add_option("--encoder-len", cfg.encoder_len, "encoder positions")->capture_default_str();
    app->add_option("--decoder-len", cfg.decoder_len, "decoder positions")->capture_default_str();
    app->add_option("--max-vocab", cfg.max_target_vocab, "target vocabulary size")->capture_default_str();
    app->add_option("--batch", cfg.batch_size, "batch size")->capture_default_str();
    app->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
    app->add_option("--lr", cfg.initial_lr, "initial learning rate")->capture_default_str();
    app->add_option("--decay", cfg.lr_decay, "learning rate decay per epoch")->capture_default_str();
    app->add_option("--clip", cfg.clip_norm, "global gradient norm clip")->capture_default_str();
    app->add_option("--init-scale", cfg.init_scale, "uniform init range")->capture_default_str();
    app->add_option("--momentum", cfg.momentum, "momentum for sgd (0: plain gradient descent)")->capture_default_str();
    app->add_option("--optimizer", optimizer, "sgd or adam")->capture_default_str();
  }

  // called after parsing
  void resolve() { cfg.optimizer = dn::seq2seq::parse_optimizer(optimizer); }

  void log() const {
    log_config("hidden", cfg.hidden_units);
    log_config("layers", cfg.layers);
    log_config("attention", cfg.attention_units);
    log_config("embedding", cfg.embedding());
    log_config("encoder_len", cfg.encoder_len);
    log_config("decoder_len", cfg.decoder_len);
    log_config("max_vocab", cfg.max_target_vocab);
    log_config("batch", cfg.batch_size);
    log_config("epochs", cfg.epochs);
    log_config("lr", cfg.initial_lr);
    log_config("decay", cfg.lr_decay);
    log_config("clip", cfg.clip_norm);
    log_config("init_scale", cfg.init_scale);
    log_config("momentum", cfg.momentum);
    log_config("optimizer", dn::seq2seq::optimizer_name(cfg.optimizer));
  }
};

// Train/dev sources: an explicit dev file, otherwise a sentence split of train.
struct SplitFlags {
  std::string train, dev;
  double dev_fraction = 0.1;

  void add(CLI::App* app) {
    app->add_option("--train", train, "labeled training corpus")->required()->check(CLI::ExistingFile);
    app->add_option("--dev", dev, "labeled dev corpus (default: split from --train)")->check(CLI::ExistingFile);
    app->add_option("--dev-fraction", dev_fraction, "dev share of sentences when splitting")->capture_default_str();
  }

  std::pair<dn::Corpus, dn::Corpus> load(std::uint64_t seed) const {
    dn::Corpus tr = dn::parse_corpus(train, true);
    if (!dev.empty()) return {std::move(tr), dn::parse_corpus(dev, true)};
    if (!(dev_fraction > 0 && dev_fraction < 1)) throw dn::UsageError("--dev-fraction must lie in (0, 1)");
    return dn::split_corpus(tr, dev_fraction, seed);
  }
};

std::vector<std::size_t> parse_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v == 0)
      throw dn::UsageError(std::string("bad ") + what + " list entry: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw dn::UsageError(std::string("empty ") + what + " list");
  return out;
}

std::shared_ptr<const dn::VerbalizerRegistry> make_registry(const std::string& symbols) {
  auto names = std::make_shared<dn::SymbolNames>();
  if (!symbols.empty()) names->load(symbols);
  return std::make_shared<dn::VerbalizerRegistry>(names);
}

void write_report(const dn::EvalReport& r, const std::string& kv_path) {
  dn::write_report_text(std::cout, r);
  if (!kv_path.empty()) {
    auto out = open_out(kv_path);
    dn::write_report_kv(out, r);
  }
}

// Pipeline sources shared by predict and evaluate.
struct PipelineFlags {
  std::string backend = "verbalizer";
  std::string classifier, normalizer, table, symbols;
  bool gold_classes = false;

  void add(CLI::App* app) {
    app->add_option("--backend", backend, "seq2seq, verbalizer or memorization")->capture_default_str();
    app->add_option("--classifier", classifier, "classifier model file")->check(CLI::ExistingFile);
    app->add_option("--normalizer", normalizer, "seq2seq checkpoint (seq2seq backend)")->check(CLI::ExistingFile);
    app->add_option("--table", table, "memorization table TSV (memorization backend)")->check(CLI::ExistingFile);
    app->add_option("--symbols", symbols, "extra symbol<TAB>name map for VERBATIM and ELECTRONIC")
        ->check(CLI::ExistingFile);
    app->add_flag("--gold-classes", gold_classes, "route with the corpus class column instead of the classifier");
  }

  dn::PipelineModel build() const {
    dn::PipelineModel m;
    m.backend = dn::parse_backend(backend);
    m.registry = make_registry(symbols);
    if (!classifier.empty()) {
      m.classifier = dn::gbdt::load(classifier);
      m.window = m.classifier->width / 3;
    } else if (!gold_classes) {
      throw dn::UsageError("either --classifier or --gold-classes is required");
    }
    if (!normalizer.empty()) m.normalizer = std::make_shared<dn::Normalizer>(dn::Normalizer::load(normalizer));
    if (!table.empty()) m.table = std::make_shared<dn::MemorizationTable>(dn::MemorizationTable::load(table));
    m.validate();
    log_config("backend", backend);
    log_config("classes", gold_classes ? "gold" : "classifier");
    if (m.classifier) log_config("window", m.window);
    return m;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text normalization toolkit: semiotic classifier, sequence normalizer and rule verbalizers"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads for classifier training")->capture_default_str()->check(
      CLI::PositiveNumber);

  // stats
  auto* stats = app.add_subcommand("stats", "class histogram, transformed fraction and token lengths");
  std::string stats_in, stats_kv;
  bool stats_unlabeled = false;
  stats->add_option("input", stats_in, "corpus CSV")->required()->check(CLI::ExistingFile);
  stats->add_option("--kv", stats_kv, "also write key=value report here");
  stats->add_flag("--unlabeled", stats_unlabeled, "input has no class/after columns");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  std::string synth_spec, synth_out, synth_symbols;
  synth->add_option("--spec", synth_spec, "per-class counts, e.g. DATE=100,CARDINAL=50")->required();
  synth->add_option("-o,--output", synth_out, "output CSV")->required();
  synth->add_option("--symbols", synth_symbols, "extra symbol<TAB>name map")->check(CLI::ExistingFile);

  // train-classifier
  auto* tc = app.add_subcommand("train-classifier", "fit the semiotic class classifier");
  SplitFlags tc_split;
  GbdtFlags tc_gbdt;
  std::string tc_out;
  tc_split.add(tc);
  tc_gbdt.add(tc);
  tc->add_option("-o,--output", tc_out, "model file")->required();

  // train-normalizer
  auto* tn = app.add_subcommand("train-normalizer", "train the sequence normalizer on transforming tokens");
  std::string tn_train, tn_out;
  ModelFlags tn_model;
  tn->add_option("--train", tn_train, "labeled training corpus")->required()->check(CLI::ExistingFile);
  tn->add_option("-o,--output", tn_out, "checkpoint file")->required();
  tn_model.add(tn);

  // baseline
  auto* bl = app.add_subcommand("baseline", "memorization lookup with verbalizer fallback");
  std::string bl_train, bl_input, bl_out, bl_table_out, bl_classifier, bl_symbols, bl_kv;
  bool bl_gold = false;
  bl->add_option("--train", bl_train, "labeled training corpus")->required()->check(CLI::ExistingFile);
  bl->add_option("--input", bl_input, "corpus to normalize")->required()->check(CLI::ExistingFile);
  bl->add_option("-o,--output", bl_out, "predictions CSV");
  bl->add_option("--table-out", bl_table_out, "write the memorization table TSV here");
  bl->add_option("--classifier", bl_classifier, "classifier for unseen tokens")->check(CLI::ExistingFile);
  bl->add_flag("--gold-classes", bl_gold, "use the input class column for unseen tokens");
  bl->add_option("--symbols", bl_symbols, "extra symbol<TAB>name map")->check(CLI::ExistingFile);
  bl->add_option("--kv", bl_kv, "evaluate against the input and write key=value report here");

  // predict
  auto* pr = app.add_subcommand("predict", "run the two-stage pipeline");
  std::string pr_in, pr_out;
  PipelineFlags pr_pipe;
  pr->add_option("--input", pr_in, "corpus to normalize")->required()->check(CLI::ExistingFile);
  pr->add_option("-o,--output", pr_out, "predictions CSV")->required();
  pr_pipe.add(pr);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "per-class exact-match accuracy");
  std::string ev_gold, ev_pred, ev_kv;
  PipelineFlags ev_pipe;
  ev->add_option("--gold", ev_gold, "labeled reference corpus")->required()->check(CLI::ExistingFile);
  ev->add_option("--predictions", ev_pred, "predictions CSV (otherwise the pipeline is run on --gold)")
      ->check(CLI::ExistingFile);
  ev->add_option("--kv", ev_kv, "also write key=value report here");
  ev_pipe.add(ev);

  // sweep
  auto* sw = app.add_subcommand("sweep", "window-size or model-size sweep");
  std::string sw_mode = "windows", sw_windows = "10,20,40", sw_hidden = "64,128,256", sw_layers = "2,3",
              sw_classifier;
  SplitFlags sw_split;
  GbdtFlags sw_gbdt;
  ModelFlags sw_model;
  sw->add_option("--mode", sw_mode, "windows or models")->capture_default_str();
  sw->add_option("--windows", sw_windows, "window sizes")->capture_default_str();
  sw->add_option("--hidden-list", sw_hidden, "hidden sizes")->capture_default_str();
  sw->add_option("--layers-list", sw_layers, "layer counts")->capture_default_str();
  sw->add_option("--classifier", sw_classifier, "route dev tokens with this classifier (default: gold classes)")
      ->check(CLI::ExistingFile);
  sw_split.add(sw);
  sw_gbdt.add(sw);
  sw_model.add(sw);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the sequence model gradients");
  std::size_t gc_hidden = 4, gc_vocab = 12, gc_len = 6, gc_layers = 2;
  double gc_eps = 1e-4, gc_tol = 1e-4;
  gc->add_option("--hidden", gc_hidden, "hidden units")->capture_default_str();
  gc->add_option("--vocab", gc_vocab, "source and target vocabulary size")->capture_default_str();
  gc->add_option("--encoder-len", gc_len, "encoder (and decoder) length")->capture_default_str();
  gc->add_option("--layers", gc_layers, "encoder layers")->capture_default_str();
  gc->add_option("--eps", gc_eps, "finite-difference step")->capture_default_str();
  gc->add_option("--tolerance", gc_tol, "maximum relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    log_config("seed", seed);
    if (*stats) {
      dn::Corpus c = dn::parse_corpus(stats_in, !stats_unlabeled);
      dn::CorpusStats s = dn::corpus_stats(c);
      dn::write_stats_text(std::cout, s);
      if (!stats_kv.empty()) {
        auto out = open_out(stats_kv);
        dn::write_stats_kv(out, s);
      }
    } else if (*synth) {
      dn::SynthSpec spec = dn::parse_synth_spec(synth_spec);
      auto registry = make_registry(synth_symbols);
      dn::Corpus c = dn::synth_corpus(spec, seed, *registry);
      auto out = open_out(synth_out);
      dn::write_corpus(out, c);
      std::cerr << "wrote " << c.size() << " tokens in " << c.sentence_count() << " sentences to " << synth_out
                << '\n';
    } else if (*tc) {
      tc_gbdt.cfg.threads = threads;
      tc_gbdt.log();
      auto [train, dev] = tc_split.load(seed);
      dn::EncodedCorpus tr = dn::encode_corpus(train, tc_gbdt.window);
      dn::EncodedCorpus dv = dn::encode_corpus(dev, tc_gbdt.window);
      std::cerr << "train " << tr.x.rows << " tokens, dev " << dv.x.rows << " tokens\n";
      auto fit = dn::gbdt::fit(tr, &dv, tc_gbdt.cfg, [](const dn::gbdt::RoundStatus& s) {
        std::cout << "round " << s.round << " train_loss " << std::setprecision(6) << s.train_loss;
        if (s.dev_accuracy) std::cout << " dev_accuracy " << *s.dev_accuracy;
        std::cout << '\n';
      });
      if (fit.model.degenerate) std::cerr << "warning: single-class training data; constant model\n";
      dn::gbdt::save(fit.model, tc_out);
      std::cerr << "kept " << fit.best_round << " rounds; wrote " << tc_out << '\n';
    } else if (*tn) {
      tn_model.resolve();
      tn_model.log();
      dn::Corpus train = dn::parse_corpus(tn_train, true);
      auto res = dn::train_normalizer(train, tn_model.cfg, seed, [](const dn::seq2seq::EpochLog& l) {
        std::cout << "epoch " << l.epoch << " lr " << std::setprecision(6) << l.lr << " loss " << l.mean_loss
                  << std::endl;
      });
      res.model.save(tn_out);
      std::cerr << "source vocab " << res.model.config().source_vocab << ", target vocab "
                << res.model.config().target_vocab << ", " << res.steps << " steps; wrote " << tn_out << '\n';
    } else if (*bl) {
      dn::Corpus train = dn::parse_corpus(bl_train, true);
      const bool want_eval = !bl_kv.empty();
      dn::Corpus input = dn::parse_corpus(bl_input, bl_gold || want_eval);
      auto table = dn::build_memorization_table(train);
      if (!bl_table_out.empty()) table.save(bl_table_out);
      auto registry = make_registry(bl_symbols);
      std::vector<dn::SemioticClass> classes;
      if (bl_gold) {
        classes = dn::gold_classes(input);
      } else if (!bl_classifier.empty()) {
        auto m = dn::gbdt::load(bl_classifier);
        classes = dn::classify_corpus(input, m, m.width / 3);
      }
      dn::Predictions p;
      for (std::size_t i = 0; i < input.size(); ++i) {
        std::optional<dn::SemioticClass> cls;
        if (!classes.empty()) cls = classes[i];
        p.after.push_back(dn::baseline_normalize(input[i], table, *registry, cls));
      }
      if (!bl_out.empty()) {
        auto out = open_out(bl_out);
        dn::write_predictions(out, input, p);
      }
      if (want_eval) write_report(dn::evaluate(p.after, input, "memorization", utc_timestamp()), bl_kv);
      std::cerr << "table entries " << table.size() << '\n';
    } else if (*pr) {
      dn::PipelineModel m = pr_pipe.build();
      dn::Corpus input = dn::parse_corpus(pr_in, pr_pipe.gold_classes);
      auto p = dn::normalize_corpus(input, m, pr_pipe.gold_classes);
      auto out = open_out(pr_out);
      dn::write_predictions(out, input, p);
      std::cerr << "wrote " << p.after.size() << " predictions to " << pr_out << '\n';
    } else if (*ev) {
      dn::Corpus gold = dn::parse_corpus(ev_gold, true);
      std::vector<std::string> predictions;
      std::string backend = ev_pipe.backend;
      if (!ev_pred.empty()) {
        std::ifstream in(ev_pred, std::ios::binary);
        if (!in) throw dn::DataError("cannot open " + ev_pred);
        predictions = dn::read_predictions(in, gold, ev_pred);
        backend = "file " + ev_pred;
      } else {
        dn::PipelineModel m = ev_pipe.build();
        predictions = dn::normalize_corpus(gold, m, ev_pipe.gold_classes).after;
      }
      write_report(dn::evaluate(predictions, gold, backend, utc_timestamp()), ev_kv);
    } else if (*sw) {
      auto [train, dev] = sw_split.load(seed);
      if (sw_mode == "windows") {
        sw_gbdt.cfg.threads = threads;
        sw_gbdt.log();
        auto rows = dn::sweep_windows(train, dev, parse_list(sw_windows, "window"), sw_gbdt.cfg);
        dn::write_window_table(std::cout, rows);
      } else if (sw_mode == "models") {
        sw_model.resolve();
        sw_model.log();
        std::vector<dn::SemioticClass> classes;
        if (sw_classifier.empty()) {
          classes = dn::gold_classes(dev);
        } else {
          auto m = dn::gbdt::load(sw_classifier);
          classes = dn::classify_corpus(dev, m, m.width / 3);
        }
        auto cells = dn::sweep_models(train, dev, classes, parse_list(sw_hidden, "hidden"),
                                      parse_list(sw_layers, "layers"), sw_model.cfg, seed);
        dn::write_model_table(std::cout, cells);
      } else {
        throw dn::UsageError("--mode must be windows or models");
      }
    } else if (*gc) {
      if (gc_len < 2) throw dn::UsageError("--encoder-len must be at least 2");
      auto setup = dn::seq2seq::make_gradcheck_setup(gc_hidden, gc_vocab, gc_len, gc_layers, seed);
      auto groups = dn::seq2seq::gradient_check(setup.batch, setup.params, setup.cfg, gc_eps);
      bool ok = true;
      for (auto& g : groups) {
        bool pass = g.relative_error < gc_tol;
        ok = ok && pass;
        std::cout << std::left << std::setw(22) << g.name << std::right << std::setw(6) << g.entries << "  rel "
                  << std::scientific << std::setprecision(3) << g.relative_error << "  max_abs " << g.max_abs_error
                  << "  " << (pass ? "ok" : "FAIL") << '\n';
      }
      std::cout << (ok ? "gradient check passed" : "gradient check FAILED") << '\n';
      return ok ? kOk : kNumeric;
    }
  } catch (const dn::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const dn::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
