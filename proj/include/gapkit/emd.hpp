#pragma once

#include "gapkit/types.hpp"

namespace gapkit {

struct EmdResult {
  Matrix plan;         // n x m coupling
  double cost = 0.0;   // <plan, C>
  Index pivots = 0;
};

/// Exact optimal transport between discrete measures `mu` (n) and `nu` (m)
/// under cost matrix C (n x m), by the primal network simplex method.
///
/// The returned plan is a vertex of the transportation polytope. `nu` is
/// rescaled to the mass of `mu` when the two totals differ by less than 1e-10.
EmdResult solve_emd(const Vector& mu, const Vector& nu, const Matrix& cost);

}  // namespace gapkit
