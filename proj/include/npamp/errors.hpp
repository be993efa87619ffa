#pragma once

#include <stdexcept>
#include <string>

namespace npamp {

// Raised when a computation cannot produce a finite, well-defined result
// (root not bracketed, divergence, degenerate contrast). Input validation
// failures use std::invalid_argument instead.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace npamp
