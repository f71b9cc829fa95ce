// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "deepnorm/error.hpp"

// Little-endian fixed-width serialization helpers for model files.

namespace deepnorm::binio {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  void put_bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    put_bytes(s.data(), s.size());
  }

  void check(const std::string& what) const {
    if (!out_) throw DataError("write failed: " + what);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }

  void get_bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError(source_ + ": truncated file");
  }

  std::string get_string(std::size_t max_len = 1u << 20) {
    auto n = get<std::uint64_t>();
    if (n > max_len) throw DataError(source_ + ": corrupt string length");
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }

  /// Reads and verifies a magic tag and version number.
  void expect_header(const char (&magic)[5], std::uint32_t version) {
    char got[4];
    get_bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0) throw DataError(source_ + ": bad magic bytes (not a " + magic + " file)");
    auto v = get<std::uint32_t>();
    if (v != version)
      throw DataError(source_ + ": unsupported version " + std::to_string(v) + " (expected " +
                      std::to_string(version) + ")");
  }

  /// Fails unless the stream is exhausted.
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw DataError(source_ + ": trailing bytes");
  }

  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
};

}  // namespace deepnorm::binio
