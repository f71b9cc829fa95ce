// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "deepnorm/error.hpp"

namespace deepnorm::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line on which the record starts (1-based)
};

/// RFC 4180 reader: comma separated, double-quote quoting, "" escapes, quoted
/// fields may span lines. CRLF line endings are accepted.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::optional<Record> next() {
    Record rec;
    rec.line = line_ + 1;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    bool was_quoted = false;
    int ch;
    while ((ch = in_.get()) != std::char_traits<char>::eof()) {
      any = true;
      char c = static_cast<char>(ch);
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field += '"';
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line_;
          field += c;
        }
        continue;
      }
      if (c == '"' && field.empty() && !was_quoted) {
        in_quotes = true;
        was_quoted = true;
      } else if (c == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\n') {
        ++line_;
        if (!field.empty() && field.back() == '\r' && !was_quoted) field.pop_back();
        rec.fields.push_back(std::move(field));
        return rec;
      } else if (c == '\r' && in_.peek() == '\n') {
        // swallowed; the newline terminates the record
      } else {
        field += c;
      }
    }
    if (in_quotes) throw DataError("line " + std::to_string(rec.line) + ": unterminated quoted field");
    if (!any) return std::nullopt;
    ++line_;
    rec.fields.push_back(std::move(field));
    return rec;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

inline bool needs_quotes(std::string_view f) {
  if (f.empty()) return false;
  if (f.front() == ' ' || f.back() == ' ') return true;
  return f.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void write_field(std::ostream& out, std::string_view f) {
  if (!needs_quotes(f)) {
    out << f;
    return;
  }
  out << '"';
  for (char c : f) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

inline void write_record(std::ostream& out, const std::vector<std::string_view>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

}  // namespace deepnorm::csv
