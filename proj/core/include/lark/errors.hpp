#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lark {

enum class ErrorKind {
  kFormat,
  kUnsupportedCodec,
  kEmptyInput,
  kSequenceTooShort,
  kDegenerateGeometry,
  kShape,
  kNumeric,
  kState,
  kChecksum,
  kVersion,
  kArgument,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; `kind()` lets callers
// (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  // Same kind, message prefixed with `context: `.
  Error prefixed(const std::string& context) const;

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace lark
