#pragma once

// Global solves. The reference solution ties the composite field together
// by slaving dependent fine nodes (coarse positions, interface nodes on
// coarse edges, Dirichlet nodes) to the master unknowns, which makes it the
// exact Galerkin solution of the conforming composite space. The multiscale
// solve works in a given fine-trace basis over the free coarse nodes.

#include "lodcut/corrector.hpp"

namespace lodcut {

struct SolveStats {
  int unknowns = 0;
  double residual = 0;
};

struct ReferenceSolution {
  Field u;
  SpMat Rc;  // n_coarse_nodes x masters
  SpMat Rw;  // n_fine_nodes x masters
  int n_free_coarse = 0;
  SolveStats stats;
};

ReferenceSolution solve_reference(const MeshHierarchy& hier, const CompositeMatrices& mats);

struct LodSolution {
  VecX uhat;  // coefficients over the free coarse nodes
  Field u;
  SpMat Khat;
  VecX bhat;
  SolveStats stats;
};

// W holds fine traces of the basis over the free coarse nodes; the coarse
// part of basis i is the hat of free node i with Dirichlet nodes at zero.
LodSolution solve_lod(const MeshHierarchy& hier, const CompositeMatrices& mats, const SpMat& W);

// |||a - b||| / |||b||| in the composite energy norm.
double relative_energy_error(const CompositeMatrices& mats, const Field& a, const Field& b);

}  // namespace lodcut
