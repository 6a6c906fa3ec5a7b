#include "smcr/error.hpp"

namespace smcr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Degenerate: return "degenerate input";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Integrity: return "integrity error";
    case ErrorKind::Sampling: return "sampling error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Mining: return "mining error";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::Evaluation: return "evaluation error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Config: return "config error";
  }
  return "error";
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(to_string(kind)) + ": " + message);
}

}  // namespace smcr
