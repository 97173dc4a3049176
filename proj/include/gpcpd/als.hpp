#pragma once

#include "gpcpd/linalg.hpp"
#include "gpcpd/tensor.hpp"

#include <cstdint>
#include <vector>

namespace gpcpd {

struct AlsOptions {
  int max_sweeps = 500;
  /// Stop when the relative change of err-rel between sweeps drops below this.
  double rel_change_tol = 1e-10;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  /// Wall-clock budget in seconds (0: unlimited).
  double time_limit = 0.0;

  void validate() const;
};

struct AlsResult {
  FactorTriple factors;
  std::vector<double> err_trace; // err-rel after every sweep
  int restarts = 0;
};

/// Plain cyclic ALS: U1, U2, U3 in turn, each by least squares against its
/// flattening. Real input gets a real random start. A rank-deficient
/// Khatri-Rao product restarts from a new start (at most 3 times), after which
/// DegenerateInputError is thrown.
AlsResult als_decompose(const Tensor3& f, Index r, const AlsOptions& opts = {});

} // namespace gpcpd
