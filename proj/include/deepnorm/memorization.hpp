// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deepnorm/corpus.hpp"
#include "deepnorm/verbalize.hpp"

namespace deepnorm {

/// Written form -> spoken forms observed in training, in first-seen order.
class MemorizationTable {
 public:
  struct Entry {
    std::vector<std::pair<std::string, std::size_t>> afters;  // first-seen order

    /// The most frequent after string; ties go to the one seen first.
    const std::string& majority() const {
      std::size_t best = 0;
      for (std::size_t i = 1; i < afters.size(); ++i)
        if (afters[i].second > afters[best].second) best = i;
      return afters[best].first;
    }
  };

  void observe(const std::string& before, const std::string& after) {
    auto& e = entries_[before];
    for (auto& [a, n] : e.afters) {
      if (a == after) {
        ++n;
        return;
      }
    }
    e.afters.emplace_back(after, 1);
  }

  std::optional<std::string> lookup(const std::string& before) const {
    auto it = entries_.find(before);
    if (it == entries_.end()) return std::nullopt;
    return it->second.majority();
  }

  const Entry* entry(const std::string& before) const {
    auto it = entries_.find(before);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  /// Sorted `before<TAB>after` lines; tab, newline, CR and backslash are escaped.
  void save(std::ostream& out) const {
    std::vector<const std::string*> keys;
    keys.reserve(entries_.size());
    for (auto& [k, _] : entries_) keys.push_back(&k);
    std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
    for (auto* k : keys) out << escape(*k) << '\t' << escape(entries_.at(*k).majority()) << '\n';
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write memorization table: " + path);
    save(out);
  }

  static MemorizationTable load(std::istream& in, const std::string& source = "memorization table") {
    MemorizationTable t;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
        throw DataError(source + ": line " + std::to_string(n) + ": expected two tab-separated columns");
      t.observe(unescape(line.substr(0, tab), source, n), unescape(line.substr(tab + 1), source, n));
    }
    return t;
  }

  static MemorizationTable load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open memorization table: " + path);
    return load(in, path);
  }

 private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      switch (c) {
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\\': out += "\\\\"; break;
        default: out += c;
      }
    }
    return out;
  }

  static std::string unescape(const std::string& s, const std::string& source, std::size_t line) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != '\\') {
        out += s[i];
        continue;
      }
      if (++i == s.size()) throw DataError(source + ": line " + std::to_string(line) + ": dangling escape");
      switch (s[i]) {
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case '\\': out += '\\'; break;
        default: throw DataError(source + ": line " + std::to_string(line) + ": bad escape");
      }
    }
    return out;
  }

  std::unordered_map<std::string, Entry> entries_;
};

inline MemorizationTable build_memorization_table(const Corpus& train) {
  if (!train.labeled()) throw UsageError("memorization table requires a labeled corpus");
  MemorizationTable t;
  for (const Token& tok : train.tokens()) t.observe(tok.before, *tok.after);
  return t;
}

/// Memorized spoken form when the written form was seen in training;
/// otherwise the verbalizer for `cls` (gold or predicted), echoing the input
/// when no class is known or the verbalizer does not apply. Never throws.
inline std::string baseline_normalize(const Token& tok, const MemorizationTable& table,
                                      const VerbalizerRegistry& registry, std::optional<SemioticClass> cls) {
  if (auto hit = table.lookup(tok.before)) return *hit;
  if (!cls) return tok.before;
  return registry.apply_or_echo(*cls, tok.before);
}

}  // namespace deepnorm
