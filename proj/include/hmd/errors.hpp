#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hmd {

enum class ErrorKind {
  kIo,
  kParse,
  kFormat,
  kValidation,
  kDuplicate,
  kNotFound,
  kEmptyInput,
  kInsufficientData,
  kDegenerateLabels,
  kDimensionMismatch,
  kConfig,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kDuplicate: return "duplicate error";
    case ErrorKind::kNotFound: return "not found";
    case ErrorKind::kEmptyInput: return "empty input";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kDegenerateLabels: return "degenerate labels";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kConfig: return "config error";
  }
  return "error";
}

/// Every failure raised by the library. `line()` is 1-based and 0 when the
/// error is not tied to a line of an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t line = 0)
      : std::runtime_error(format(kind, message, line)), kind_(kind), line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message, std::size_t line) {
    std::string out = to_string(kind);
    if (line > 0) out += " at line " + std::to_string(line);
    out += ": ";
    out += message;
    return out;
  }

  ErrorKind kind_;
  std::size_t line_;
};

/// Process exit code convention: 2 input/config, 3 data degeneracy.
inline int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInsufficientData:
    case ErrorKind::kDegenerateLabels:
      return 3;
    case ErrorKind::kDimensionMismatch:
      return 1;
    default:
      return 2;
  }
}

}  // namespace hmd
