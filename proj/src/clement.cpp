#include "lodcut/clement.hpp"

#include <algorithm>

namespace lodcut {

VecX ClementOperator::apply(const Field& v) const {
  if (v.c.size() != lambda_c.cols() || v.w.size() != lambda_w.cols())
    throw DimensionMismatch("clement apply: field does not match the operator");
  return lambda_c * v.c + lambda_w * v.w;
}

namespace {

// Hat values of the three corners of coarse tri t at the corners of fine
// tri ft (columns are fine corners). Exact on the lattice.
Eigen::Matrix3d hat_trace(const MeshHierarchy& hier, int t, int ft) {
  const auto grid = hier.fine_tri_grid_nodes(ft);
  Eigen::Matrix3d b;
  for (int i = 0; i < 3; ++i) {
    const auto lam = hier.coarse_barycentric(t, hier.fine_grid_pos(grid[static_cast<size_t>(i)]));
    for (int a = 0; a < 3; ++a) b(a, i) = lam[static_cast<size_t>(a)];
  }
  return b;
}

}  // namespace

ClementOperator build_clement(const MeshHierarchy& hier) {
  const int ni = hier.n_free();
  const int ratio = hier.ratio;
  std::vector<Triplet> tc, tw;

  // All coarse cells are congruent, as are all fine cells, so both mass
  // matrices are shared across the mesh.
  Eigen::Matrix3d mass_unit;
  mass_unit << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  const Eigen::Matrix3d mc = mass_unit * (hier.H * hier.H / 24.0);
  const Eigen::Matrix3d mf = mass_unit * (hier.h * hier.h / 24.0);

  for (int i = 0; i < ni; ++i) {
    const int x = hier.free_coarse_nodes[static_cast<size_t>(i)];
    const auto& cells = hier.coarse_node_cells[static_cast<size_t>(x)];

    // Collect the patch nodes and index them locally.
    std::vector<int> nodes;  // compact coarse ids
    auto local = [&nodes](int cid) {
      for (size_t k = 0; k < nodes.size(); ++k)
        if (nodes[k] == cid) return static_cast<int>(k);
      nodes.push_back(cid);
      return static_cast<int>(nodes.size() - 1);
    };
    struct CellNodes {
      int t;
      int loc[3];
      int cid[3];
    };
    std::vector<CellNodes> patch;
    patch.reserve(cells.size());
    for (int t : cells) {
      CellNodes cn;
      cn.t = t;
      const auto grid = hier.coarse_tri_grid_nodes(t);
      for (int a = 0; a < 3; ++a) {
        cn.cid[a] = hier.coarse_node_id[static_cast<size_t>(grid[static_cast<size_t>(a)])];
        cn.loc[a] = local(cn.cid[a]);
      }
      patch.push_back(cn);
    }
    const int np = static_cast<int>(nodes.size());

    // Local Gram of hat restrictions to the patch intersected with the
    // domain, plus the per-cell data needed to emit the dual functional.
    MatX gram = MatX::Zero(np, np);
    struct FineBlock {
      int fid[3];
      Eigen::Matrix3d bm;  // hat_trace * mf, rows follow cell corners
      int loc[3];
    };
    std::vector<FineBlock> fine_blocks;
    for (const CellNodes& cn : patch) {
      if (!hier.coarse_zone[static_cast<size_t>(cn.t)]) {
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) gram(cn.loc[a], cn.loc[b]) += mc(a, b);
        continue;
      }
      const int q = cn.t / 2, I = q % hier.ncx, J = q / hier.ncx;
      for (int brel = 0; brel < ratio; ++brel)
        for (int arel = 0; arel < ratio; ++arel)
          for (int u = 0; u < 2; ++u) {
            const int ft = 2 * ((J * ratio + brel) * hier.nfx + (I * ratio + arel)) + u;
            if (hier.owner_coarse_tri(ft) != cn.t || !hier.fine_inside[static_cast<size_t>(ft)])
              continue;
            FineBlock fb;
            const Eigen::Matrix3d b = hat_trace(hier, cn.t, ft);
            fb.bm = b * mf;
            const auto grid = hier.fine_tri_grid_nodes(ft);
            for (int k = 0; k < 3; ++k) {
              fb.fid[k] = hier.fine_node_id[static_cast<size_t>(grid[static_cast<size_t>(k)])];
              fb.loc[k] = cn.loc[k];
            }
            const Eigen::Matrix3d g = fb.bm * b.transpose();
            for (int a = 0; a < 3; ++a)
              for (int c = 0; c < 3; ++c) gram(cn.loc[a], cn.loc[c]) += g(a, c);
            fine_blocks.push_back(fb);
          }
    }

    VecX rhs = VecX::Zero(np);
    rhs(local(x)) = 1.0;
    Eigen::LDLT<MatX> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw SolverFailure("clement gram factorization failed");
    const VecX row = ldlt.solve(rhs);
    if (!row.allFinite()) throw SolverFailure("clement gram solve produced non-finite weights");

    // lambda_x(v) = sum_a row[a] <hat_a, v>; scatter the functional.
    for (const CellNodes& cn : patch) {
      if (hier.coarse_zone[static_cast<size_t>(cn.t)]) continue;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const double v = row(cn.loc[a]) * mc(a, b);
          if (v != 0.0) tc.emplace_back(i, cn.cid[b], v);
        }
    }
    for (const FineBlock& fb : fine_blocks) {
      for (int j = 0; j < 3; ++j) {
        double v = 0.0;
        for (int a = 0; a < 3; ++a) v += row(fb.loc[a]) * fb.bm(a, j);
        if (v != 0.0) tw.emplace_back(i, fb.fid[j], v);
      }
    }
  }

  ClementOperator op;
  op.lambda_c.resize(ni, hier.n_coarse_nodes());
  op.lambda_w.resize(ni, hier.n_fine_nodes());
  op.lambda_c.setFromTriplets(tc.begin(), tc.end());
  op.lambda_w.setFromTriplets(tw.begin(), tw.end());
  return op;
}

}  // namespace lodcut
