// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deepnorm/csv.hpp"
#include "deepnorm/error.hpp"
#include "deepnorm/rng.hpp"
#include "deepnorm/semiotic_class.hpp"
#include "deepnorm/utf8.hpp"

namespace deepnorm {

struct Token {
  std::uint64_t sentence_id = 0;
  std::uint32_t token_id = 0;
  std::optional<SemioticClass> cls;
  std::string before;
  std::optional<std::string> after;

  bool operator==(const Token&) const = default;
};

/// Tokens in file order, grouped into contiguous sentences.
class Corpus {
 public:
  enum class IdCheck { Consecutive, Increasing };

  Corpus() = default;

  /// Validates and groups `tokens`. Sentences are maximal runs of equal
  /// sentence_id; a sentence id may not reappear after its run ends.
  explicit Corpus(std::vector<Token> tokens, std::string source_path = {},
                  IdCheck check = IdCheck::Consecutive)
      : tokens_(std::move(tokens)), source_path_(std::move(source_path)) {
    std::unordered_map<std::uint64_t, bool> seen;
    labeled_ = true;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const Token& t = tokens_[i];
      if (t.before.empty())
        throw DataError("token " + std::to_string(t.sentence_id) + "_" + std::to_string(t.token_id) +
                        ": empty written form");
      if (!t.cls || !t.after) labeled_ = false;
      bool starts = i == 0 || tokens_[i - 1].sentence_id != t.sentence_id;
      if (starts) {
        if (seen.count(t.sentence_id))
          throw DataError("sentence " + std::to_string(t.sentence_id) + " is not contiguous");
        seen[t.sentence_id] = true;
        sentence_begin_.push_back(i);
        if (check == IdCheck::Consecutive && t.token_id != 0)
          throw DataError("sentence " + std::to_string(t.sentence_id) + " does not start at token 0");
      } else {
        std::uint32_t prev = tokens_[i - 1].token_id;
        bool ok = check == IdCheck::Consecutive ? t.token_id == prev + 1 : t.token_id > prev;
        if (!ok)
          throw DataError("sentence " + std::to_string(t.sentence_id) + ": token id " +
                          std::to_string(t.token_id) + " out of sequence");
      }
    }
    if (tokens_.empty()) labeled_ = true;
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  std::size_t sentence_count() const { return sentence_begin_.size(); }
  bool labeled() const { return labeled_; }
  const std::string& source_path() const { return source_path_; }
  std::span<const Token> tokens() const { return tokens_; }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }

  /// Index of the first token of sentence `s` in tokens().
  std::size_t sentence_begin(std::size_t s) const { return sentence_begin_.at(s); }
  std::size_t sentence_end(std::size_t s) const {
    return s + 1 < sentence_begin_.size() ? sentence_begin_[s + 1] : tokens_.size();
  }
  std::span<const Token> sentence(std::size_t s) const {
    return std::span<const Token>(tokens_).subspan(sentence_begin(s), sentence_end(s) - sentence_begin(s));
  }

  /// Rows dropped at ingestion because a labeled row had no spoken form.
  std::size_t dropped_rows() const { return dropped_rows_; }
  void set_dropped_rows(std::size_t n) { dropped_rows_ = n; }

 private:
  std::vector<Token> tokens_;
  std::vector<std::size_t> sentence_begin_;
  std::string source_path_;
  bool labeled_ = true;
  std::size_t dropped_rows_ = 0;
};

namespace detail {

inline std::uint64_t parse_uint(const std::string& s, std::size_t line, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw DataError("line " + std::to_string(line) + ": " + what + " is not a non-negative integer: '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::out_of_range&) {
    throw DataError("line " + std::to_string(line) + ": " + what + " out of range");
  }
}

}  // namespace detail

/// Reads the comma-separated corpus format with a header naming the columns
/// sentence_id, token_id, class, before, after (class and after are required
/// when `labeled`; ignored otherwise). Labeled rows with an empty after field
/// are dropped and counted.
inline Corpus parse_corpus(std::istream& in, bool labeled, std::string source = {}) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw DataError(source + ": empty file (no header row)");
  int col_sid = -1, col_tid = -1, col_cls = -1, col_before = -1, col_after = -1;
  for (std::size_t i = 0; i < header->fields.size(); ++i) {
    const std::string& h = header->fields[i];
    int idx = static_cast<int>(i);
    if (h == "sentence_id") col_sid = idx;
    else if (h == "token_id") col_tid = idx;
    else if (h == "class") col_cls = idx;
    else if (h == "before") col_before = idx;
    else if (h == "after") col_after = idx;
    else throw DataError(source + ": line 1: unexpected column '" + h + "'");
  }
  if (col_sid < 0 || col_tid < 0 || col_before < 0)
    throw DataError(source + ": header must name sentence_id, token_id and before");
  if (labeled && (col_cls < 0 || col_after < 0))
    throw DataError(source + ": labeled corpus requires class and after columns");
  const std::size_t width = header->fields.size();

  std::vector<Token> tokens;
  std::size_t dropped = 0;
  std::uint64_t prev_sid = 0;
  std::uint32_t prev_tid = 0;
  bool first = true;
  while (auto rec = reader.next()) {
    if (rec->fields.size() != width)
      throw DataError(source + ": line " + std::to_string(rec->line) + ": expected " + std::to_string(width) +
                      " columns, found " + std::to_string(rec->fields.size()));
    Token t;
    t.sentence_id = detail::parse_uint(rec->fields[col_sid], rec->line, "sentence_id");
    t.token_id = static_cast<std::uint32_t>(detail::parse_uint(rec->fields[col_tid], rec->line, "token_id"));
    t.before = rec->fields[col_before];
    if (t.before.empty()) throw DataError(source + ": line " + std::to_string(rec->line) + ": empty before field");
    bool new_sentence = first || t.sentence_id != prev_sid;
    if ((new_sentence && t.token_id != 0) || (!new_sentence && t.token_id != prev_tid + 1))
      throw DataError(source + ": line " + std::to_string(rec->line) + ": token ids are not consecutive");
    first = false;
    prev_sid = t.sentence_id;
    prev_tid = t.token_id;
    if (labeled) {
      try {
        t.cls = parse_class(rec->fields[col_cls]);
      } catch (const DataError& e) {
        throw DataError(source + ": line " + std::to_string(rec->line) + ": " + e.what());
      }
      if (rec->fields[col_after].empty()) {
        ++dropped;
        continue;
      }
      t.after = rec->fields[col_after];
    }
    tokens.push_back(std::move(t));
  }
  Corpus c(std::move(tokens), source, dropped ? Corpus::IdCheck::Increasing : Corpus::IdCheck::Consecutive);
  c.set_dropped_rows(dropped);
  return c;
}

inline Corpus parse_corpus(const std::string& path, bool labeled) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return parse_corpus(in, labeled, path);
}

/// Writes the same format parse_corpus reads; labeled corpora get all five columns.
inline void write_corpus(std::ostream& out, const Corpus& c) {
  const bool labeled = c.labeled();
  if (labeled)
    out << "sentence_id,token_id,class,before,after\n";
  else
    out << "sentence_id,token_id,before\n";
  for (const Token& t : c.tokens()) {
    std::string sid = std::to_string(t.sentence_id), tid = std::to_string(t.token_id);
    if (labeled)
      csv::write_record(out, {sid, tid, class_name(*t.cls), t.before, *t.after});
    else
      csv::write_record(out, {sid, tid, t.before});
  }
}

inline void write_corpus(const std::string& path, const Corpus& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path);
  write_corpus(out, c);
}

/// Copy of `c` without class and after fields.
inline Corpus strip_labels(const Corpus& c) {
  std::vector<Token> tokens(c.tokens().begin(), c.tokens().end());
  for (Token& t : tokens) {
    t.cls.reset();
    t.after.reset();
  }
  return Corpus(std::move(tokens), c.source_path(), Corpus::IdCheck::Increasing);
}

/// Tokens of the selected sentences, in corpus order.
inline Corpus select_sentences(const Corpus& c, std::span<const std::size_t> sentences) {
  std::vector<Token> tokens;
  for (std::size_t s : sentences)
    for (const Token& t : c.sentence(s)) tokens.push_back(t);
  return Corpus(std::move(tokens), c.source_path(), Corpus::IdCheck::Increasing);
}

/// Sentence-granular random split into (train, dev). The dev share is
/// round(n * dev_fraction), clamped so both sides keep at least one sentence.
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& c, double dev_fraction, std::uint64_t seed) {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw UsageError("dev_fraction must lie in (0, 1)");
  const std::size_t n = c.sentence_count();
  if (n < 2) throw DataError("cannot split a corpus with fewer than 2 sentences");
  auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(n) * dev_fraction));
  n_dev = std::clamp<std::size_t>(n_dev, 1, n - 1);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> dev(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
  std::sort(dev.begin(), dev.end());
  std::sort(train.begin(), train.end());
  return {select_sentences(c, train), select_sentences(c, dev)};
}

/// Only the tokens of transforming classes, keeping sentence grouping.
inline Corpus transforming_only(const Corpus& c) {
  std::vector<Token> tokens;
  for (const Token& t : c.tokens())
    if (t.cls && is_transforming(*t.cls)) tokens.push_back(t);
  return Corpus(std::move(tokens), c.source_path(), Corpus::IdCheck::Increasing);
}

using ClassCounts = std::array<std::size_t, kClassCount>;

inline ClassCounts class_histogram(const Corpus& c) {
  if (!c.labeled()) throw UsageError("class_histogram requires a labeled corpus");
  ClassCounts counts{};
  for (const Token& t : c.tokens()) ++counts[class_id(*t.cls)];
  return counts;
}

inline double transformed_fraction(const Corpus& c) {
  if (!c.labeled()) throw UsageError("transformed_fraction requires a labeled corpus");
  if (c.empty()) return 0.0;
  std::size_t changed = 0;
  for (const Token& t : c.tokens())
    if (*t.after != t.before) ++changed;
  return static_cast<double>(changed) / static_cast<double>(c.size());
}

/// Written-form length (in code points) -> token count.
inline std::map<std::size_t, std::size_t> length_histogram(const Corpus& c) {
  std::map<std::size_t, std::size_t> h;
  for (const Token& t : c.tokens()) ++h[utf8::decode(t.before).size()];
  return h;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) ++j;
    if (j > i) words.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return words;
}

inline std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

// ---------------------------------------------------------------------------
// Vocabulary

enum class VocabKind : std::uint8_t { Character, Word };

/// Dense symbol <-> id map. Ids 0..3 are PAD, GO, EOS, UNK; character
/// vocabularies additionally reserve ids 4..19 for the class-label symbols.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kGo = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kFirstLabel = 4;

  Vocabulary() : Vocabulary(VocabKind::Word, {}) {}

  /// `symbols` are the non-reserved entries in id order.
  Vocabulary(VocabKind kind, const std::vector<std::string>& symbols) : kind_(kind) {
    for (const char* r : {"<PAD>", "<GO>", "<EOS>", "<UNK>"}) add(r);
    if (kind_ == VocabKind::Character)
      for (auto name : kClassNames) add(label_symbol(name));
    reserved_ = id_to_symbol_.size();
    for (const auto& s : symbols) {
      if (symbol_to_id_.count(s)) throw DataError("duplicate vocabulary symbol: " + s);
      add(s);
    }
  }

  static std::string label_symbol(std::string_view class_name) { return "<" + std::string(class_name) + ">"; }

  VocabKind kind() const { return kind_; }
  std::size_t size() const { return id_to_symbol_.size(); }
  std::size_t reserved_count() const { return reserved_; }

  bool contains(const std::string& s) const { return symbol_to_id_.count(s) > 0; }

  /// Unknown symbols map to UNK.
  int id(const std::string& s) const {
    auto it = symbol_to_id_.find(s);
    return it == symbol_to_id_.end() ? kUnk : it->second;
  }

  const std::string& symbol(int id) const { return id_to_symbol_.at(static_cast<std::size_t>(id)); }

  int label_id(SemioticClass c) const {
    if (kind_ != VocabKind::Character) throw UsageError("label ids exist only in character vocabularies");
    return kFirstLabel + static_cast<int>(class_id(c));
  }

  /// Non-reserved symbols in id order.
  std::vector<std::string> symbols() const {
    return {id_to_symbol_.begin() + static_cast<std::ptrdiff_t>(reserved_), id_to_symbol_.end()};
  }

  bool operator==(const Vocabulary& o) const { return kind_ == o.kind_ && id_to_symbol_ == o.id_to_symbol_; }

 private:
  void add(const std::string& s) {
    symbol_to_id_.emplace(s, static_cast<int>(id_to_symbol_.size()));
    id_to_symbol_.push_back(s);
  }

  VocabKind kind_;
  std::vector<std::string> id_to_symbol_;
  std::unordered_map<std::string, int> symbol_to_id_;
  std::size_t reserved_ = 0;
};

/// Keeps the max_size most frequent symbols (ties broken lexicographically).
/// Character symbols are the code points of before strings; word symbols
/// are the whitespace-separated words of after strings.
inline Vocabulary build_vocab(const Corpus& c, VocabKind kind, std::size_t max_size) {
  if (max_size < 1) throw UsageError("vocabulary max_size must be at least 1");
  Vocabulary reserved(kind, {});
  std::unordered_map<std::string, std::size_t> freq;
  for (const Token& t : c.tokens()) {
    if (kind == VocabKind::Character) {
      for (auto& ch : utf8::characters(t.before)) ++freq[ch];
    } else if (t.after) {
      for (auto& w : split_words(*t.after)) ++freq[w];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [sym, n] : freq)
    if (!reserved.contains(sym)) entries.emplace_back(sym, n);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (entries.size() > max_size) entries.resize(max_size);
  std::vector<std::string> symbols;
  symbols.reserve(entries.size());
  for (auto& e : entries) symbols.push_back(e.first);
  return Vocabulary(kind, symbols);
}

// ---------------------------------------------------------------------------
// Statistics report

struct CorpusStats {
  std::size_t tokens = 0;
  std::size_t sentences = 0;
  std::size_t dropped_rows = 0;
  ClassCounts histogram{};
  double transformed_fraction = 0.0;
  std::map<std::size_t, std::size_t> lengths;
};

inline CorpusStats corpus_stats(const Corpus& c) {
  CorpusStats s;
  s.tokens = c.size();
  s.sentences = c.sentence_count();
  s.dropped_rows = c.dropped_rows();
  s.histogram = class_histogram(c);
  s.transformed_fraction = transformed_fraction(c);
  s.lengths = length_histogram(c);
  return s;
}

/// Human-readable table.
inline void write_stats_text(std::ostream& out, const CorpusStats& s) {
  out << "tokens       " << s.tokens << "\n"
      << "sentences    " << s.sentences << "\n"
      << "dropped rows " << s.dropped_rows << "\n"
      << "transformed  " << s.transformed_fraction << "\n\n"
      << "class          count   share\n";
  for (std::size_t i = 0; i < kClassCount; ++i) {
    double share = s.tokens ? static_cast<double>(s.histogram[i]) / static_cast<double>(s.tokens) : 0.0;
    char line[96];
    std::snprintf(line, sizeof line, "%-12s %8zu  %6.4f\n", std::string(kClassNames[i]).c_str(), s.histogram[i],
                  share);
    out << line;
  }
  out << "\nlength  count\n";
  for (auto& [len, n] : s.lengths) {
    char line[64];
    std::snprintf(line, sizeof line, "%6zu  %zu\n", len, n);
    out << line;
  }
}

/// One key=value per line.
inline void write_stats_kv(std::ostream& out, const CorpusStats& s) {
  out << "tokens=" << s.tokens << "\n"
      << "sentences=" << s.sentences << "\n"
      << "dropped_rows=" << s.dropped_rows << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.transformed_fraction);
  out << "transformed_fraction=" << buf << "\n";
  for (std::size_t i = 0; i < kClassCount; ++i) out << "class." << kClassNames[i] << "=" << s.histogram[i] << "\n";
  for (auto& [len, n] : s.lengths) out << "length." << len << "=" << n << "\n";
}

}  // namespace deepnorm
