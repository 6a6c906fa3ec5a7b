#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smcr {

enum class ErrorKind {
  Shape,       // dimension or layout mismatch
  Degenerate,  // zero norm, zero variance, empty set where one is required
  Numeric,     // non-finite values, probabilities outside (0,1)
  Domain,      // argument outside its admissible range
  Parse,       // malformed text input
  Integrity,   // header/body disagreement in a file
  Sampling,    // batch sampler cannot satisfy P/K
  Lookup,      // label absent from a label system
  Mining,      // no positive or negative for a triplet anchor
  Alignment,   // two label spaces cannot be matched
  Contract,    // caller broke a documented precondition
  Evaluation,  // nothing left to evaluate
  Io,
  Config,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace smcr
