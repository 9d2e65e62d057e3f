#include "lark/errors.hpp"

namespace lark {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kUnsupportedCodec: return "unsupported codec";
    case ErrorKind::kEmptyInput: return "empty input";
    case ErrorKind::kSequenceTooShort: return "sequence too short";
    case ErrorKind::kDegenerateGeometry: return "degenerate geometry";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kState: return "state error";
    case ErrorKind::kChecksum: return "checksum error";
    case ErrorKind::kVersion: return "format version error";
    case ErrorKind::kArgument: return "argument error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(message) {}

Error Error::prefixed(const std::string& context) const { return Error(kind_, context + ": " + detail_); }

}  // namespace lark
