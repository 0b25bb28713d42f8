#pragma once

// Correctors: for a free coarse node x, the fine-scale function q that makes
// hat_x + q energy-orthogonal to the interpolation kernel, subject to the
// kernel constraints themselves, supported on an L-layer patch around x
// intersected with the enrichment zone. The corrected basis carries the fine
// trace of hat_x with Dirichlet rows zeroed; the corrector's boundary lift
// cancels the hat there exactly, so essential conditions hold nodally.

#include "lodcut/clement.hpp"

namespace lodcut {

struct CorrectorStats {
  int free_dofs = 0;
  int constraint_rows = 0;
  int dropped_rows = 0;  // kernel rows touching only boundary-lift columns
  double solve_residual = 0;
  double constraint_residual = 0;
  bool used_fallback = false;
  bool skipped = false;  // the hat does not touch the zone
};

struct CorrectorResult {
  // Corrector values at free patch nodes (compact fine ids, ascending).
  // Boundary lift values are implicit: the basis zeroes Dirichlet rows.
  std::vector<std::pair<int, double>> q;
  CorrectorStats stats;
};

// L >= 0 localizes to node_patch(x, L) intersected with the zone; L < 0
// solves on the whole zone (the idealized corrector).
CorrectorResult solve_corrector(const MeshHierarchy& hier, const SpMat& Kf, const SpMat& Pi,
                                const ClementOperator& clem, int free_index, int L);

struct CorrectorBasis {
  SpMat W;  // n_fine_nodes x n_free: fine traces of the corrected basis
  int L = 0;
  long long skipped = 0;
  long long fallbacks = 0;
  int dropped_rows_max = 0;
  double worst_solve_residual = 0;
  double worst_constraint_residual = 0;
};

CorrectorBasis build_basis(const MeshHierarchy& hier, const SpMat& Kf, const SpMat& Pi,
                           const ClementOperator& clem, int L, int workers);

// Fine traces of the plain coarse hats with Dirichlet rows zeroed; the
// uncorrected counterpart of build_basis, and the whole basis when the
// zone is empty.
SpMat make_uncorrected_basis(const MeshHierarchy& hier, const SpMat& Pi);

}  // namespace lodcut
