#pragma once

// Diagnostics on top of the solver: condition numbers of the multiscale
// stiffness, decay of the corrector localization error, and two estimates
// of Poincare-Friedrichs constants on simplicial meshes (a combinatorial
// path bound and a discrete constrained Rayleigh quotient).

#include "lodcut/corrector.hpp"

namespace lodcut {

struct ConditionReport {
  double lambda_min = 0;
  double lambda_max = 0;
  double cond = 0;
  bool dense = true;
  int iterations = 0;
};

// Extremal eigenvalues of a symmetric positive definite sparse matrix.
// Dense solve up to 2000 rows; beyond that Lanczos with full
// reorthogonalization, using a factorization of K for the smallest.
ConditionReport condition_number(const SpMat& K);

// Log-log slope of cond against 1/H; needs at least three points.
double condition_scaling(const std::vector<double>& H, const std::vector<double>& cond);

struct DecayReport {
  std::vector<int> L;
  std::vector<double> err;  // energy distance to the idealized corrector
  double slope = 0;         // fitted d ln(err) / dL
  double gamma = 0;         // exp(3 * slope): contraction per patch tripling
  bool resolved = false;    // too few positive errors to fit anything
};

DecayReport measure_decay(const MeshHierarchy& hier, const SpMat& Kf, const SpMat& Pi,
                          const ClementOperator& clem, int free_index, int L_max);

struct PFPathBound {
  int s_max = 0;         // longest shortest element path to the gamma set
  long long r_max = 0;   // largest path-overlap count in the BFS forest
  double eta = 0;        // largest element edge
  double gamma_len = 0;  // total length of gamma
  double diam = 0;       // bounding-box diagonal
  double bound = 0;      // s_max * r_max * eta^3 / (gamma_len * diam^2)
};

PFPathBound pf_path_bound(const SimplicialMesh& mesh,
                          const std::vector<std::pair<int, int>>& gamma);

struct PFRayleigh {
  double lambda_min = 0;
  double constant = 0;  // 1 / (diam * sqrt(lambda_min))
  bool dense = true;
  int iterations = 0;
};

// Smallest eigenvalue of the stiffness against the mass form on the
// subspace of zero gamma-average, with one degree of freedom eliminated.
PFRayleigh pf_rayleigh(const SimplicialMesh& mesh,
                       const std::vector<std::pair<int, int>>& gamma);

struct PFEstimate {
  PFPathBound path;
  PFRayleigh rayleigh;
};

PFEstimate pf_estimate(const SimplicialMesh& mesh, const std::vector<std::pair<int, int>>& gamma);

}  // namespace lodcut
