#pragma once

#include <stdexcept>
#include <string>

namespace fsgcl {

/// Error categories double as CLI exit codes.
enum class ErrorCategory : int {
  kInput = 2,     // missing files, out-of-range ids
  kParse = 3,     // malformed text input
  kContract = 4,  // API misuse (shape mismatch, invalid call order)
  kNumeric = 5,   // NaN / Inf produced during computation
  kConfig = 6,    // unknown, ill-typed or infeasible configuration values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  const char* category_name() const noexcept {
    switch (category_) {
      case ErrorCategory::kInput: return "input";
      case ErrorCategory::kParse: return "parse";
      case ErrorCategory::kContract: return "contract";
      case ErrorCategory::kNumeric: return "numeric";
      case ErrorCategory::kConfig: return "config";
    }
    return "unknown";
  }

 private:
  ErrorCategory category_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorCategory::kInput, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(ErrorCategory::kParse, source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorCategory::kContract, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::kNumeric, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

}  // namespace fsgcl
