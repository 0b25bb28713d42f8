#pragma once

// P1 assembly over the composite space: coarse hats on active cells outside
// the enrichment zone, fine hats on the zone. The two regions are disjoint,
// so the energy of a composite function splits exactly into a coarse and a
// fine quadratic form. Boundary (Robin) terms are always accumulated from
// fine boundary edges; outside the zone they land on the coarse hats via
// their traces, which is exact because hats are linear along edges.

#include "lodcut/mesh.hpp"

#include <functional>

namespace lodcut {

double tri_area(const std::array<Vec2, 3>& p);
Eigen::Matrix3d p1_stiffness(const std::array<Vec2, 3>& p);
Eigen::Matrix3d p1_mass(const std::array<Vec2, 3>& p);
Eigen::Matrix2d robin_edge_matrix(double len, double kappa);

// Element load by a degree-3 simplex rule (exact for f*hat up to cubic).
Eigen::Vector3d p1_load(const std::array<Vec2, 3>& p, const std::function<double(Vec2)>& f);

struct ProblemData {
  // Volume load; an empty function means f == 1.
  std::function<double(Vec2)> f;
};

// Composite coefficient vector: c over all active coarse nodes, w over all
// zone fine nodes. Entries of c at nodes strictly interior to the zone are
// padding and never enter any form.
struct Field {
  VecX c, w;

  Field operator-(const Field& o) const { return {c - o.c, w - o.w}; }
};

struct CompositeMatrices {
  SpMat Kc, Mc;  // coarse nodes; stiffness includes outside-zone Robin terms
  SpMat Kf, Mf;  // zone fine nodes; stiffness includes zone Robin terms
  VecX bc, bf;
};

CompositeMatrices assemble(const MeshHierarchy& hier, const ProblemData& prob);

// Coarse-to-fine interpolation on the zone: row y holds the coarse hat
// values at fine node y, taken from the cell owning one of its inside fine
// triangles (exact, and only references active coarse nodes).
SpMat assemble_interpolation(const MeshHierarchy& hier);

// Stiffness of coarse hats over the given active cells using the exact
// rasterized intersection with the domain (constant gradients times the
// inside child area). No boundary terms.
SpMat assemble_coarse_cut_aware(const MeshHierarchy& hier, const std::vector<int>& cells);

double energy_sq(const CompositeMatrices& mats, const Field& v);
double energy_norm(const CompositeMatrices& mats, const Field& v);
double l2_sq(const CompositeMatrices& mats, const Field& v);
double l2_norm(const CompositeMatrices& mats, const Field& v);

// P1 stiffness and mass over a flat simplicial mesh (Poincare estimators).
void assemble_p1(const SimplicialMesh& mesh, SpMat* K, SpMat* M);

}  // namespace lodcut
