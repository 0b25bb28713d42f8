#include "lodcut/corrector.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace lodcut {

namespace {

struct SaddleProblem {
  SpMat K;     // np x np
  SpMat C;     // nr x np
  VecX b, d;   // gradients and constraint values
};

struct SaddleSolution {
  VecX q, mu;
  double solve_residual = 0;
  double constraint_residual = 0;
  bool used_fallback = false;
};

void residuals(const SaddleProblem& sp, SaddleSolution* sol) {
  const VecX r1 = sp.K * sol->q + sp.C.transpose() * sol->mu - sp.b;
  sol->solve_residual = r1.norm() / std::max(1.0, sp.b.norm());
  if (sp.C.rows() > 0) {
    const VecX r2 = sp.C * sol->q - sp.d;
    sol->constraint_residual = r2.norm() / std::max(1.0, sp.d.norm());
  } else {
    sol->constraint_residual = 0;
  }
}

bool solve_schur(const SaddleProblem& sp, SaddleSolution* sol) {
  const Eigen::Index np = sp.K.rows(), nr = sp.C.rows();
  // The Schur route stores K^{-1} C^T densely; fall through to the
  // assembled system when that would not fit comfortably in memory.
  if (static_cast<double>(np) * static_cast<double>(nr) > 4.0e7) return false;
  Eigen::SimplicialLDLT<SpMat> ldlt(sp.K);
  if (ldlt.info() != Eigen::Success) return false;
  const VecX z0 = ldlt.solve(sp.b);
  if (!z0.allFinite()) return false;
  if (nr == 0) {
    sol->q = z0;
    sol->mu = VecX();
    residuals(sp, sol);
    return sol->solve_residual <= 1e-9;
  }
  const MatX Y = ldlt.solve(MatX(sp.C.transpose()));
  if (!Y.allFinite()) return false;
  const MatX S = sp.C * Y;
  const VecX rhs = sp.C * z0 - sp.d;
  VecX mu;
  {
    Eigen::LDLT<MatX> sldlt(S);
    mu = sldlt.solve(rhs);
    const bool ok = sldlt.info() == Eigen::Success && mu.allFinite() &&
                    (S * mu - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm());
    if (!ok) {
      Eigen::FullPivLU<MatX> lu(S);
      mu = lu.solve(rhs);
      if (!mu.allFinite() || (S * mu - rhs).norm() > 1e-10 * std::max(1.0, rhs.norm()))
        mu = Eigen::ColPivHouseholderQR<MatX>(S).solve(rhs);
    }
  }
  if (!mu.allFinite()) return false;
  sol->q = z0 - Y * mu;
  sol->mu = mu;
  residuals(sp, sol);
  return std::max(sol->solve_residual, sol->constraint_residual) <= 1e-9;
}

bool solve_assembled(const SaddleProblem& sp, SaddleSolution* sol) {
  const Eigen::Index np = sp.K.rows(), nr = sp.C.rows();
  const Eigen::Index nt = np + nr;
  std::vector<Triplet> tr;
  tr.reserve(static_cast<size_t>(sp.K.nonZeros() + 2 * sp.C.nonZeros()));
  for (Eigen::Index j = 0; j < np; ++j)
    for (SpMat::InnerIterator it(sp.K, j); it; ++it)
      tr.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value());
  for (Eigen::Index j = 0; j < np; ++j)
    for (SpMat::InnerIterator it(sp.C, j); it; ++it) {
      tr.emplace_back(static_cast<int>(np + it.row()), static_cast<int>(j), it.value());
      tr.emplace_back(static_cast<int>(j), static_cast<int>(np + it.row()), it.value());
    }
  SpMat A(nt, nt);
  A.setFromTriplets(tr.begin(), tr.end());
  VecX rhs(nt);
  rhs.head(np) = sp.b;
  rhs.tail(nr) = sp.d;

  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  VecX sol_vec;
  bool ok = lu.info() == Eigen::Success;
  if (ok) {
    sol_vec = lu.solve(rhs);
    ok = sol_vec.allFinite();
  }
  if (ok) {
    sol->q = sol_vec.head(np);
    sol->mu = sol_vec.tail(nr);
    residuals(sp, sol);
    ok = std::max(sol->solve_residual, sol->constraint_residual) <= 1e-9;
  }
  if (!ok && nt < 2000) {
    Eigen::FullPivLU<MatX> flu{MatX(A)};
    sol_vec = flu.solve(rhs);
    if (sol_vec.allFinite()) {
      sol->q = sol_vec.head(np);
      sol->mu = sol_vec.tail(nr);
      residuals(sp, sol);
      ok = std::max(sol->solve_residual, sol->constraint_residual) <= 1e-9;
    }
  }
  return ok;
}

}  // namespace

CorrectorResult solve_corrector(const MeshHierarchy& hier, const SpMat& Kf, const SpMat& Pi,
                                const ClementOperator& clem, int free_index, int L) {
  CorrectorResult res;
  if (free_index < 0 || free_index >= hier.n_free())
    throw DimensionMismatch("solve_corrector: free node index out of range");
  const int x = hier.free_coarse_nodes[static_cast<size_t>(free_index)];
  const int nfz = hier.n_fine_nodes();

  std::vector<std::pair<int, double>> hat;  // nonzero fine trace of hat_x
  VecX hatv = VecX::Zero(nfz);
  for (SpMat::InnerIterator it(Pi, x); it; ++it) {
    hat.emplace_back(static_cast<int>(it.row()), it.value());
    hatv(it.row()) = it.value();
  }
  if (hat.empty()) {
    res.stats.skipped = true;
    return res;
  }

  // Patch membership per coarse cell, then roles per fine node: 3 = boundary
  // lift, 2 = fixed zero (continuity across the patch or zone boundary),
  // 1 = free. Lift wins where both apply.
  std::vector<int> patch_cells;
  if (L < 0) {
    patch_cells = hier.zone_cells;
  } else {
    for (int t : hier.node_patch(x, L))
      if (hier.coarse_zone[static_cast<size_t>(t)]) patch_cells.push_back(t);
  }
  std::vector<char> in_patch(static_cast<size_t>(hier.n_coarse_tris()), 0);
  for (int t : patch_cells) in_patch[static_cast<size_t>(t)] = 1;

  std::vector<char> role(static_cast<size_t>(nfz), 0);  // 0 = outside patch
  for (int ft : hier.zone_fine_tris) {
    const bool inside = in_patch[static_cast<size_t>(hier.owner_coarse_tri(ft))] != 0;
    const auto grid = hier.fine_tri_grid_nodes(ft);
    for (int k = 0; k < 3; ++k) {
      const int f = hier.fine_node_id[static_cast<size_t>(grid[static_cast<size_t>(k)])];
      if (inside) {
        if (role[static_cast<size_t>(f)] == 0) role[static_cast<size_t>(f)] = 1;
      } else {
        role[static_cast<size_t>(f)] = 2;  // touches a zone cell beyond the patch
      }
    }
  }
  // Second sweep restores membership lost to the outside-contact overwrite
  // and applies the interface and Dirichlet rules.
  std::vector<int> p, lift;
  for (int ft : hier.zone_fine_tris) {
    if (!in_patch[static_cast<size_t>(hier.owner_coarse_tri(ft))]) continue;
    const auto grid = hier.fine_tri_grid_nodes(ft);
    for (int k = 0; k < 3; ++k) {
      const int f = hier.fine_node_id[static_cast<size_t>(grid[static_cast<size_t>(k)])];
      role[static_cast<size_t>(f)] |= 4;  // member mark
    }
  }
  for (int f = 0; f < nfz; ++f) {
    if (!(role[static_cast<size_t>(f)] & 4)) {
      role[static_cast<size_t>(f)] = 0;
      continue;
    }
    const FineNodeInfo& info = hier.fine_info[static_cast<size_t>(f)];
    if (info.dirichlet) {
      role[static_cast<size_t>(f)] = 3;
      lift.push_back(f);
    } else if (info.interface || (role[static_cast<size_t>(f)] & 3) == 2) {
      role[static_cast<size_t>(f)] = 2;
    } else {
      role[static_cast<size_t>(f)] = 1;
      p.push_back(f);
    }
  }
  const int np = static_cast<int>(p.size());
  if (np == 0) throw SingularSaddle("corrector patch has no free fine nodes");

  // Fine trace of the hat with Dirichlet entries zeroed; the removed values
  // become the boundary lift of the corrector.
  VecX rt = VecX::Zero(nfz);
  for (const auto& [f, v] : hat)
    if (!hier.fine_info[static_cast<size_t>(f)].dirichlet) rt(f) = v;

  std::vector<int> loc(static_cast<size_t>(nfz), -1);
  for (int k = 0; k < np; ++k) loc[static_cast<size_t>(p[static_cast<size_t>(k)])] = k;

  SaddleProblem sp;
  {
    VecX y = VecX::Zero(nfz);
    for (const auto& [f, v] : hat) {
      if (rt(f) == 0.0) continue;
      for (SpMat::InnerIterator it(Kf, f); it; ++it) y(it.row()) += it.value() * rt(f);
    }
    sp.b = VecX(np);
    for (int k = 0; k < np; ++k) sp.b(k) = -y(p[static_cast<size_t>(k)]);
  }
  {
    std::vector<Triplet> kt;
    for (int k = 0; k < np; ++k) {
      const int j = p[static_cast<size_t>(k)];
      for (SpMat::InnerIterator it(Kf, j); it; ++it) {
        const int r = loc[static_cast<size_t>(it.row())];
        if (r >= 0) kt.emplace_back(r, k, it.value());
      }
    }
    sp.K.resize(np, np);
    sp.K.setFromTriplets(kt.begin(), kt.end());
  }

  // Kernel rows that act on the free patch columns are kept as constraints;
  // rows acting only on lift columns cannot be satisfied locally and are
  // dropped (counted). lambda_w is column-major, so columns drive everything.
  std::vector<char> row_kept(static_cast<size_t>(clem.lambda_w.rows()), 0);
  std::vector<int> kept;
  for (int k = 0; k < np; ++k)
    for (SpMat::InnerIterator it(clem.lambda_w, p[static_cast<size_t>(k)]); it; ++it) {
      if (!row_kept[static_cast<size_t>(it.row())]) {
        row_kept[static_cast<size_t>(it.row())] = 1;
        kept.push_back(static_cast<int>(it.row()));
      }
    }
  std::sort(kept.begin(), kept.end());
  const int nr = static_cast<int>(kept.size());
  std::vector<int> row_loc(static_cast<size_t>(clem.lambda_w.rows()), -1);
  for (int r = 0; r < nr; ++r) row_loc[static_cast<size_t>(kept[static_cast<size_t>(r)])] = r;

  {
    std::vector<Triplet> ct;
    for (int k = 0; k < np; ++k)
      for (SpMat::InnerIterator it(clem.lambda_w, p[static_cast<size_t>(k)]); it; ++it)
        ct.emplace_back(row_loc[static_cast<size_t>(it.row())], k, it.value());
    sp.C.resize(nr, np);
    sp.C.setFromTriplets(ct.begin(), ct.end());
  }
  sp.d = VecX::Zero(nr);
  std::vector<char> row_dropped(static_cast<size_t>(clem.lambda_w.rows()), 0);
  int dropped = 0;
  for (int g : lift) {
    const double hv = hatv(g);
    if (hv == 0.0) continue;
    for (SpMat::InnerIterator it(clem.lambda_w, g); it; ++it) {
      const int r = row_loc[static_cast<size_t>(it.row())];
      if (r >= 0) {
        sp.d(r) += it.value() * hv;
      } else if (!row_dropped[static_cast<size_t>(it.row())]) {
        row_dropped[static_cast<size_t>(it.row())] = 1;
        ++dropped;
      }
    }
  }

  SaddleSolution sol;
  if (!solve_schur(sp, &sol)) {
    sol.used_fallback = true;
    if (!solve_assembled(sp, &sol))
      throw SolverFailure("corrector saddle solve failed beyond tolerance");
  }

  res.q.reserve(static_cast<size_t>(np));
  for (int k = 0; k < np; ++k)
    if (sol.q(k) != 0.0) res.q.emplace_back(p[static_cast<size_t>(k)], sol.q(k));
  res.stats.free_dofs = np;
  res.stats.constraint_rows = nr;
  res.stats.dropped_rows = dropped;
  res.stats.solve_residual = sol.solve_residual;
  res.stats.constraint_residual = sol.constraint_residual;
  res.stats.used_fallback = sol.used_fallback;
  return res;
}

CorrectorBasis build_basis(const MeshHierarchy& hier, const SpMat& Kf, const SpMat& Pi,
                           const ClementOperator& clem, int L, int workers) {
  const int ni = hier.n_free();
  std::vector<CorrectorResult> results(static_cast<size_t>(ni));
  parallel_for(ni, workers, [&](int i) {
    results[static_cast<size_t>(i)] = solve_corrector(hier, Kf, Pi, clem, i, L);
  });

  CorrectorBasis basis;
  basis.L = L;
  std::vector<Triplet> tr;
  for (int i = 0; i < ni; ++i) {
    const int x = hier.free_coarse_nodes[static_cast<size_t>(i)];
    for (SpMat::InnerIterator it(Pi, x); it; ++it)
      if (!hier.fine_info[static_cast<size_t>(it.row())].dirichlet)
        tr.emplace_back(static_cast<int>(it.row()), i, it.value());
    const CorrectorResult& r = results[static_cast<size_t>(i)];
    for (const auto& [f, v] : r.q) tr.emplace_back(f, i, v);
    if (r.stats.skipped) ++basis.skipped;
    if (r.stats.used_fallback) ++basis.fallbacks;
    basis.dropped_rows_max = std::max(basis.dropped_rows_max, r.stats.dropped_rows);
    basis.worst_solve_residual = std::max(basis.worst_solve_residual, r.stats.solve_residual);
    basis.worst_constraint_residual =
        std::max(basis.worst_constraint_residual, r.stats.constraint_residual);
  }
  basis.W.resize(hier.n_fine_nodes(), ni);
  basis.W.setFromTriplets(tr.begin(), tr.end());
  basis.W.prune([](const Eigen::Index&, const Eigen::Index&, const double& v) { return v != 0.0; });
  return basis;
}

SpMat make_uncorrected_basis(const MeshHierarchy& hier, const SpMat& Pi) {
  const int ni = hier.n_free();
  std::vector<Triplet> tr;
  for (int i = 0; i < ni; ++i) {
    const int x = hier.free_coarse_nodes[static_cast<size_t>(i)];
    for (SpMat::InnerIterator it(Pi, x); it; ++it)
      if (!hier.fine_info[static_cast<size_t>(it.row())].dirichlet)
        tr.emplace_back(static_cast<int>(it.row()), i, it.value());
  }
  SpMat w(hier.n_fine_nodes(), ni);
  w.setFromTriplets(tr.begin(), tr.end());
  return w;
}

}  // namespace lodcut
