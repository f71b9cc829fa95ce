// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace deepnorm {

/// Malformed or inconsistent input data (files, corpora, model blobs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training or numeric failure (divergence, non-finite values).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A verbalizer could not parse its input. Callers fall back to echoing the token.
class VerbalizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deepnorm
