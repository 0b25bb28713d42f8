#include "lodcut/solver.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace lodcut {

namespace {

VecX spd_solve(const SpMat& K, const VecX& b, double tol, const char* what, double* residual) {
  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  if (ldlt.info() != Eigen::Success)
    throw SolverFailure(std::string(what) + ": factorization failed");
  const VecX x = ldlt.solve(b);
  const double r = (K * x - b).norm() / std::max(1.0, b.norm());
  *residual = r;
  if (!x.allFinite() || r > tol)
    throw SolverFailure(std::string(what) + ": residual above tolerance");
  return x;
}

}  // namespace

ReferenceSolution solve_reference(const MeshHierarchy& hier, const CompositeMatrices& mats) {
  const int nc = hier.n_coarse_nodes();
  const int nfz = hier.n_fine_nodes();
  const int ratio = hier.ratio;
  const int fw = hier.nfx + 1;
  const int cw = hier.ncx + 1;

  // Master unknowns: free coarse nodes first, then independent fine nodes.
  std::vector<int> coarse_master(static_cast<size_t>(nc), -1);
  int nm = 0;
  for (int cid : hier.free_coarse_nodes) coarse_master[static_cast<size_t>(cid)] = nm++;
  std::vector<int> fine_master(static_cast<size_t>(nfz), -1);
  for (int f = 0; f < nfz; ++f) {
    const FineNodeInfo& info = hier.fine_info[static_cast<size_t>(f)];
    if (!info.dirichlet && !info.coarse_pos && !info.interface)
      fine_master[static_cast<size_t>(f)] = nm++;
  }

  std::vector<Triplet> rc, rw;
  for (int cid = 0; cid < nc; ++cid)
    if (coarse_master[static_cast<size_t>(cid)] >= 0)
      rc.emplace_back(cid, coarse_master[static_cast<size_t>(cid)], 1.0);

  auto coarse_entry = [&](int ca, int cb, int frow, double wgt) {
    const int grid = cb * cw + ca;
    const int cid = hier.coarse_node_id[static_cast<size_t>(grid)];
    if (cid < 0) throw SolverFailure("slaving references an inactive coarse node");
    const int m = coarse_master[static_cast<size_t>(cid)];
    if (m >= 0 && wgt != 0.0) rw.emplace_back(frow, m, wgt);
  };

  for (int f = 0; f < nfz; ++f) {
    const FineNodeInfo& info = hier.fine_info[static_cast<size_t>(f)];
    if (fine_master[static_cast<size_t>(f)] >= 0) {
      rw.emplace_back(f, fine_master[static_cast<size_t>(f)], 1.0);
      continue;
    }
    if (info.dirichlet) continue;
    const int g = hier.fine_node_grid[static_cast<size_t>(f)];
    const int a = g % fw, b = g / fw;
    const int arel = a % ratio, brel = b % ratio;
    const int A = a / ratio, B = b / ratio;
    if (info.coarse_pos) {
      coarse_entry(A, B, f, 1.0);
      continue;
    }
    // Interface nodes sit on the interior of a coarse edge shared with a
    // cell outside the zone; their value interpolates the edge endpoints.
    const double th = static_cast<double>(arel == 0 ? brel : arel) / ratio;
    if (arel == 0) {
      coarse_entry(A, B, f, 1.0 - th);
      coarse_entry(A, B + 1, f, th);
    } else if (brel == 0) {
      coarse_entry(A, B, f, 1.0 - th);
      coarse_entry(A + 1, B, f, th);
    } else if (arel == brel) {
      coarse_entry(A, B, f, 1.0 - th);
      coarse_entry(A + 1, B + 1, f, th);
    } else {
      throw SolverFailure("interface fine node lies on no coarse edge");
    }
  }

  ReferenceSolution ref;
  ref.Rc.resize(nc, nm);
  ref.Rw.resize(nfz, nm);
  ref.Rc.setFromTriplets(rc.begin(), rc.end());
  ref.Rw.setFromTriplets(rw.begin(), rw.end());
  ref.n_free_coarse = hier.n_free();

  const SpMat kr = SpMat(ref.Rc.transpose() * mats.Kc * ref.Rc) +
                   SpMat(ref.Rw.transpose() * mats.Kf * ref.Rw);
  const VecX br = ref.Rc.transpose() * mats.bc + ref.Rw.transpose() * mats.bf;
  ref.stats.unknowns = nm;
  const VecX um = spd_solve(kr, br, 1e-10, "reference solve", &ref.stats.residual);
  ref.u.c = ref.Rc * um;
  ref.u.w = ref.Rw * um;
  return ref;
}

LodSolution solve_lod(const MeshHierarchy& hier, const CompositeMatrices& mats, const SpMat& W) {
  const int ni = hier.n_free();
  if (W.cols() != ni || W.rows() != hier.n_fine_nodes())
    throw DimensionMismatch("solve_lod: basis does not match the hierarchy");
  std::vector<Triplet> et;
  for (int i = 0; i < ni; ++i) et.emplace_back(hier.free_coarse_nodes[static_cast<size_t>(i)], i, 1.0);
  SpMat E(hier.n_coarse_nodes(), ni);
  E.setFromTriplets(et.begin(), et.end());

  LodSolution sol;
  sol.Khat = SpMat(E.transpose() * mats.Kc * E) + SpMat(W.transpose() * mats.Kf * W);
  sol.bhat = E.transpose() * mats.bc + W.transpose() * mats.bf;
  sol.stats.unknowns = ni;
  sol.uhat = spd_solve(sol.Khat, sol.bhat, 1e-10, "multiscale solve", &sol.stats.residual);
  sol.u.c = E * sol.uhat;
  sol.u.w = W * sol.uhat;
  return sol;
}

double relative_energy_error(const CompositeMatrices& mats, const Field& a, const Field& b) {
  const double den = energy_norm(mats, b);
  if (den == 0.0) throw SolverFailure("relative energy error against a zero field");
  return energy_norm(mats, a - b) / den;
}

}  // namespace lodcut
