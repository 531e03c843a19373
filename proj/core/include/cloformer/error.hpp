// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clo {

enum class ErrorCategory {
  kDimension,
  kArgument,
  kNumeric,
  kConfiguration,
  kFormat,
  kIo,
};

std::string_view category_name(ErrorCategory category);

/// Base of every exception thrown by the library. The CLI prints these as
/// `ERROR <category>: <detail>`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& detail)
      : std::runtime_error(detail), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& detail)
      : Error(ErrorCategory::kDimension, detail) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& detail)
      : Error(ErrorCategory::kArgument, detail) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& detail)
      : Error(ErrorCategory::kNumeric, detail) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& detail)
      : Error(ErrorCategory::kConfiguration, detail) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& detail)
      : Error(ErrorCategory::kFormat, detail) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& detail)
      : Error(ErrorCategory::kIo, detail) {}
};

}  // namespace clo
