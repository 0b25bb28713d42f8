#include "lodcut/assembly.hpp"

#include <cmath>

namespace lodcut {

double tri_area(const std::array<Vec2, 3>& p) {
  return 0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y));
}

Eigen::Matrix3d p1_stiffness(const std::array<Vec2, 3>& p) {
  const double area = tri_area(p);
  Eigen::Vector3d bx, by;
  for (int i = 0; i < 3; ++i) {
    const Vec2& pj = p[static_cast<size_t>((i + 1) % 3)];
    const Vec2& pk = p[static_cast<size_t>((i + 2) % 3)];
    bx(i) = pj.y - pk.y;
    by(i) = pk.x - pj.x;
  }
  return (bx * bx.transpose() + by * by.transpose()) / (4.0 * area);
}

Eigen::Matrix3d p1_mass(const std::array<Vec2, 3>& p) {
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (tri_area(p) / 12.0);
}

Eigen::Matrix2d robin_edge_matrix(double len, double kappa) {
  Eigen::Matrix2d m;
  m << 2, 1, 1, 2;
  return m * (kappa * len / 6.0);
}

Eigen::Vector3d p1_load(const std::array<Vec2, 3>& p, const std::function<double(Vec2)>& f) {
  const double area = tri_area(p);
  if (!f) return Eigen::Vector3d::Constant(area / 3.0);
  // Degree-3 rule: centroid with weight -27/48 plus three points of type
  // (3/5, 1/5, 1/5) with weight 25/48 each.
  static const double bary[4][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                    {0.6, 0.2, 0.2},
                                    {0.2, 0.6, 0.2},
                                    {0.2, 0.2, 0.6}};
  static const double wq[4] = {-27.0 / 48, 25.0 / 48, 25.0 / 48, 25.0 / 48};
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (int q = 0; q < 4; ++q) {
    Vec2 pt{0, 0};
    for (int i = 0; i < 3; ++i) {
      pt.x += bary[q][i] * p[static_cast<size_t>(i)].x;
      pt.y += bary[q][i] * p[static_cast<size_t>(i)].y;
    }
    const double fv = wq[q] * f(pt);
    for (int i = 0; i < 3; ++i) b(i) += fv * bary[q][i];
  }
  return b * area;
}

CompositeMatrices assemble(const MeshHierarchy& hier, const ProblemData& prob) {
  CompositeMatrices mats;
  const int nc = hier.n_coarse_nodes();
  const int nf = hier.n_fine_nodes();
  std::vector<Triplet> kc, mc, kf, mf;
  mats.bc = VecX::Zero(nc);
  mats.bf = VecX::Zero(nf);

  // Coarse part: active cells outside the zone are interior cells, so full
  // element integrals are exact.
  for (int t = 0; t < hier.n_coarse_tris(); ++t) {
    if (!hier.cell_active(t) || hier.coarse_zone[static_cast<size_t>(t)]) continue;
    const auto corners = hier.coarse_tri_corners(t);
    const auto grid = hier.coarse_tri_grid_nodes(t);
    int id[3];
    for (int i = 0; i < 3; ++i)
      id[i] = hier.coarse_node_id[static_cast<size_t>(grid[static_cast<size_t>(i)])];
    const Eigen::Matrix3d ke = p1_stiffness(corners);
    const Eigen::Matrix3d me = p1_mass(corners);
    const Eigen::Vector3d be = p1_load(corners, prob.f);
    for (int i = 0; i < 3; ++i) {
      mats.bc(id[i]) += be(i);
      for (int j = 0; j < 3; ++j) {
        kc.emplace_back(id[i], id[j], ke(i, j));
        mc.emplace_back(id[i], id[j], me(i, j));
      }
    }
  }
  // Outside-zone Robin terms: each fine boundary edge contributes the exact
  // integral of products of coarse hat traces, which are linear on the edge.
  for (const OutZoneBoundaryEdge& e : hier.out_boundary_edges) {
    if (e.tag.is_dirichlet() || e.tag.kappa == 0.0) continue;
    const auto grid = hier.coarse_tri_grid_nodes(e.coarse_tri);
    const auto la = hier.coarse_barycentric(e.coarse_tri, e.pa);
    const auto lb = hier.coarse_barycentric(e.coarse_tri, e.pb);
    const double s = e.tag.kappa * e.len / 6.0;
    for (int i = 0; i < 3; ++i) {
      const int gi = hier.coarse_node_id[static_cast<size_t>(grid[static_cast<size_t>(i)])];
      for (int j = 0; j < 3; ++j) {
        const int gj = hier.coarse_node_id[static_cast<size_t>(grid[static_cast<size_t>(j)])];
        const double v = s * (2.0 * la[static_cast<size_t>(i)] * la[static_cast<size_t>(j)] +
                              2.0 * lb[static_cast<size_t>(i)] * lb[static_cast<size_t>(j)] +
                              la[static_cast<size_t>(i)] * lb[static_cast<size_t>(j)] +
                              lb[static_cast<size_t>(i)] * la[static_cast<size_t>(j)]);
        if (v != 0.0) kc.emplace_back(gi, gj, v);
      }
    }
  }

  // Fine part over the zone.
  for (int t : hier.zone_fine_tris) {
    const auto corners = hier.fine_tri_corners(t);
    const auto grid = hier.fine_tri_grid_nodes(t);
    int id[3];
    for (int i = 0; i < 3; ++i)
      id[i] = hier.fine_node_id[static_cast<size_t>(grid[static_cast<size_t>(i)])];
    const Eigen::Matrix3d ke = p1_stiffness(corners);
    const Eigen::Matrix3d me = p1_mass(corners);
    const Eigen::Vector3d be = p1_load(corners, prob.f);
    for (int i = 0; i < 3; ++i) {
      mats.bf(id[i]) += be(i);
      for (int j = 0; j < 3; ++j) {
        kf.emplace_back(id[i], id[j], ke(i, j));
        mf.emplace_back(id[i], id[j], me(i, j));
      }
    }
  }
  for (const ZoneBoundaryEdge& e : hier.zone_boundary_edges) {
    if (e.tag.is_dirichlet() || e.tag.kappa == 0.0) continue;
    const Eigen::Matrix2d re = robin_edge_matrix(e.len, e.tag.kappa);
    const int id[2] = {e.a, e.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) kf.emplace_back(id[i], id[j], re(i, j));
  }

  mats.Kc.resize(nc, nc);
  mats.Mc.resize(nc, nc);
  mats.Kf.resize(nf, nf);
  mats.Mf.resize(nf, nf);
  mats.Kc.setFromTriplets(kc.begin(), kc.end());
  mats.Mc.setFromTriplets(mc.begin(), mc.end());
  mats.Kf.setFromTriplets(kf.begin(), kf.end());
  mats.Mf.setFromTriplets(mf.begin(), mf.end());
  return mats;
}

SpMat assemble_interpolation(const MeshHierarchy& hier) {
  const int nf = hier.n_fine_nodes();
  std::vector<Triplet> tr;
  const int fw = hier.nfx + 1;
  for (int f = 0; f < nf; ++f) {
    const int g = hier.fine_node_grid[static_cast<size_t>(f)];
    const int ft = hier.incident_zone_tri(g % fw, g / fw);
    if (ft < 0) throw DimensionMismatch("zone fine node without an inside zone triangle");
    const int ct = hier.owner_coarse_tri(ft);
    const auto bary = hier.coarse_barycentric(ct, hier.fine_grid_pos(g));
    const auto grid = hier.coarse_tri_grid_nodes(ct);
    for (int i = 0; i < 3; ++i) {
      if (bary[static_cast<size_t>(i)] == 0.0) continue;
      const int cid = hier.coarse_node_id[static_cast<size_t>(grid[static_cast<size_t>(i)])];
      tr.emplace_back(f, cid, bary[static_cast<size_t>(i)]);
    }
  }
  SpMat pi(nf, hier.n_coarse_nodes());
  pi.setFromTriplets(tr.begin(), tr.end());
  return pi;
}

SpMat assemble_coarse_cut_aware(const MeshHierarchy& hier, const std::vector<int>& cells) {
  std::vector<Triplet> tr;
  const int ratio = hier.ratio;
  for (int t : cells) {
    if (!hier.cell_active(t)) throw DimensionMismatch("cut-aware assembly over inactive cell");
    // Count inside fine children; gradients are constant on the cell, so the
    // exact intersected stiffness is the full one scaled by the area share.
    const int q = t / 2, I = (q % hier.ncx), J = (q / hier.ncx);
    int in = 0;
    for (int brel = 0; brel < ratio; ++brel)
      for (int arel = 0; arel < ratio; ++arel)
        for (int u = 0; u < 2; ++u) {
          const int ft = 2 * ((J * ratio + brel) * hier.nfx + (I * ratio + arel)) + u;
          if (hier.owner_coarse_tri(ft) == t && hier.fine_inside[static_cast<size_t>(ft)]) ++in;
        }
    if (in == 0) continue;
    const auto corners = hier.coarse_tri_corners(t);
    const Eigen::Matrix3d ke = p1_stiffness(corners) * (static_cast<double>(in) / (ratio * ratio));
    const auto grid = hier.coarse_tri_grid_nodes(t);
    int id[3];
    for (int i = 0; i < 3; ++i)
      id[i] = hier.coarse_node_id[static_cast<size_t>(grid[static_cast<size_t>(i)])];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) tr.emplace_back(id[i], id[j], ke(i, j));
  }
  SpMat k(hier.n_coarse_nodes(), hier.n_coarse_nodes());
  k.setFromTriplets(tr.begin(), tr.end());
  return k;
}

double energy_sq(const CompositeMatrices& mats, const Field& v) {
  if (v.c.size() != mats.Kc.rows() || v.w.size() != mats.Kf.rows())
    throw DimensionMismatch("energy_sq: field does not match the matrices");
  return v.c.dot(mats.Kc * v.c) + v.w.dot(mats.Kf * v.w);
}

double energy_norm(const CompositeMatrices& mats, const Field& v) {
  return std::sqrt(std::max(0.0, energy_sq(mats, v)));
}

double l2_sq(const CompositeMatrices& mats, const Field& v) {
  if (v.c.size() != mats.Mc.rows() || v.w.size() != mats.Mf.rows())
    throw DimensionMismatch("l2_sq: field does not match the matrices");
  return v.c.dot(mats.Mc * v.c) + v.w.dot(mats.Mf * v.w);
}

double l2_norm(const CompositeMatrices& mats, const Field& v) {
  return std::sqrt(std::max(0.0, l2_sq(mats, v)));
}

void assemble_p1(const SimplicialMesh& mesh, SpMat* K, SpMat* M) {
  const int n = static_cast<int>(mesh.nodes.size());
  std::vector<Triplet> kt, mt;
  for (const auto& t : mesh.tris) {
    const std::array<Vec2, 3> p = {mesh.nodes[static_cast<size_t>(t[0])],
                                   mesh.nodes[static_cast<size_t>(t[1])],
                                   mesh.nodes[static_cast<size_t>(t[2])]};
    const Eigen::Matrix3d ke = p1_stiffness(p);
    const Eigen::Matrix3d me = p1_mass(p);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        kt.emplace_back(t[static_cast<size_t>(i)], t[static_cast<size_t>(j)], ke(i, j));
        mt.emplace_back(t[static_cast<size_t>(i)], t[static_cast<size_t>(j)], me(i, j));
      }
  }
  K->resize(n, n);
  M->resize(n, n);
  K->setFromTriplets(kt.begin(), kt.end());
  M->setFromTriplets(mt.begin(), mt.end());
}

}  // namespace lodcut
