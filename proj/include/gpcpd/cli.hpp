#pragma once

#include <cstdint>

namespace gpcpd {

struct JacobianCheckSummary {
  double max_fQ = 0.0; // worst finite-difference discrepancy over all f_Q points
  double max_g = 0.0;
  int points = 0;
};

/// Finite-difference checks of the stage-1 and stage-2 Jacobians on random
/// planted instances (`instances` of them, `points` random points each).
JacobianCheckSummary run_jacobian_checks(std::uint64_t seed, int instances = 5, int points = 20);

/// Subcommands: decompose, fixture, bench, check-jacobians.
/// Returns 0 on success, 1 on solve failure, 2 on usage or IO errors.
int cli_main(int argc, char** argv);

} // namespace gpcpd
