#pragma once

#include <complex>
#include <string>
#include <vector>

namespace capres {

using cplx = std::complex<double>;

/// Accumulates invariant violations; empty means ok.
struct ValidationVerdict {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  void add(std::string message) { violations.push_back(std::move(message)); }
};

}  // namespace capres
