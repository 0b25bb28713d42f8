#pragma once

// Clement-type quasi-interpolation onto the free coarse nodes. The value at
// a node x is the local L2(patch of x, intersected with the domain)
// projection onto coarse hats, evaluated at x. On cells outside the
// enrichment zone the integrals use the coarse mass matrix; on zone cells
// they are taken over the inside fine children against the exact hat
// traces, so composite fields are handled without any quadrature error and
// lambda_x(phi_y) = delta_xy holds exactly.

#include "lodcut/assembly.hpp"

namespace lodcut {

struct ClementOperator {
  SpMat lambda_c;  // n_free x n_coarse_nodes
  SpMat lambda_w;  // n_free x n_fine_nodes

  VecX apply(const Field& v) const;
};

ClementOperator build_clement(const MeshHierarchy& hier);

}  // namespace lodcut
