#include "lodcut/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace lodcut {

namespace {

inline int tri_id(int width, int a, int b, int u) { return 2 * (b * width + a) + u; }

struct TriRef {
  int a = 0, b = 0, u = 0;
};

inline TriRef tri_ref(int width, int t) {
  const int q = t / 2;
  return {q % width, q / width, t % 2};
}

// Inside status of fine triangle (a, b, u); anything beyond the box is outside.
inline bool fine_status(const std::vector<char>& inside, int nfx, int a, int b, int u) {
  if (a < 0 || b < 0 || a >= nfx || b >= nfx) return false;
  return inside[static_cast<size_t>(tri_id(nfx, a, b, u))] != 0;
}

struct EdgeProbe {
  int pa_a, pa_b, pb_a, pb_b;  // endpoint grid coords
  int s1_a, s1_b, s1_u;        // side triangles
  int s2_a, s2_b, s2_u;
};

// The six fine edges incident to fine grid node (a, b): E, W, N, S and the
// two diagonals. Diagonal edges can be boundary edges when a removed ball
// separates the two triangles of a square, so they must be probed too.
inline std::array<EdgeProbe, 6> incident_edges(int a, int b) {
  return {{
      {a, b, a + 1, b, a, b - 1, 1, a, b, 0},          // E
      {a - 1, b, a, b, a - 1, b - 1, 1, a - 1, b, 0},  // W
      {a, b, a, b + 1, a - 1, b, 0, a, b, 1},          // N
      {a, b - 1, a, b, a - 1, b - 1, 0, a, b - 1, 1},  // S
      {a, b, a + 1, b + 1, a, b, 0, a, b, 1},          // NE diagonal
      {a - 1, b - 1, a, b, a - 1, b - 1, 0, a - 1, b - 1, 1},  // SW diagonal
  }};
}

}  // namespace

std::array<int, 3> MeshHierarchy::coarse_tri_grid_nodes(int t) const {
  const TriRef r = tri_ref(ncx, t);
  const int w = ncx + 1;
  if (r.u == 0)
    return {r.b * w + r.a, r.b * w + r.a + 1, (r.b + 1) * w + r.a + 1};
  return {r.b * w + r.a, (r.b + 1) * w + r.a + 1, (r.b + 1) * w + r.a};
}

std::array<int, 3> MeshHierarchy::fine_tri_grid_nodes(int t) const {
  const TriRef r = tri_ref(nfx, t);
  const int w = nfx + 1;
  if (r.u == 0)
    return {r.b * w + r.a, r.b * w + r.a + 1, (r.b + 1) * w + r.a + 1};
  return {r.b * w + r.a, (r.b + 1) * w + r.a + 1, (r.b + 1) * w + r.a};
}

Vec2 MeshHierarchy::coarse_grid_pos(int grid) const {
  const int w = ncx + 1;
  return {box.x0 + (grid % w) * H, box.y0 + (grid / w) * H};
}

Vec2 MeshHierarchy::fine_grid_pos(int grid) const {
  const int w = nfx + 1;
  return {box.x0 + (grid % w) * h, box.y0 + (grid / w) * h};
}

std::array<Vec2, 3> MeshHierarchy::coarse_tri_corners(int t) const {
  const auto g = coarse_tri_grid_nodes(t);
  return {coarse_grid_pos(g[0]), coarse_grid_pos(g[1]), coarse_grid_pos(g[2])};
}

std::array<Vec2, 3> MeshHierarchy::fine_tri_corners(int t) const {
  const auto g = fine_tri_grid_nodes(t);
  return {fine_grid_pos(g[0]), fine_grid_pos(g[1]), fine_grid_pos(g[2])};
}

int MeshHierarchy::owner_coarse_tri(int fine_tri) const {
  const TriRef r = tri_ref(nfx, fine_tri);
  const int I = r.a / ratio, J = r.b / ratio;
  const int arel = r.a % ratio, brel = r.b % ratio;
  // A fine lower triangle lies in the coarse lower triangle iff brel <= arel;
  // a fine upper triangle iff brel < arel.
  const int u = (r.u == 0) ? (brel <= arel ? 0 : 1) : (brel < arel ? 0 : 1);
  return tri_id(ncx, I, J, u);
}

std::array<double, 3> MeshHierarchy::coarse_barycentric(int t, Vec2 p) const {
  const TriRef r = tri_ref(ncx, t);
  const double xi = (p.x - (box.x0 + r.a * H)) / H;
  const double eta = (p.y - (box.y0 + r.b * H)) / H;
  if (r.u == 0) return {1.0 - xi, xi - eta, eta};
  return {1.0 - eta, xi, eta - xi};
}

int MeshHierarchy::incident_zone_tri(int a, int b) const {
  const int cand[6][3] = {{a, b, 0},         {a, b, 1},         {a - 1, b, 0},
                          {a, b - 1, 1},     {a - 1, b - 1, 0}, {a - 1, b - 1, 1}};
  for (const auto& c : cand) {
    if (!fine_status(fine_inside, nfx, c[0], c[1], c[2])) continue;
    const int ft = tri_id(nfx, c[0], c[1], c[2]);
    if (coarse_zone[static_cast<size_t>(owner_coarse_tri(ft))]) return ft;
  }
  return -1;
}

std::vector<int> MeshHierarchy::cell_patch(const std::vector<int>& seeds, int layers) const {
  std::vector<char> mask(static_cast<size_t>(n_coarse_tris()), 0);
  for (int t : seeds) {
    if (t < 0 || t >= n_coarse_tris() || !cell_active(t))
      throw DimensionMismatch("cell_patch: seed is not an active cell");
    mask[static_cast<size_t>(t)] = 1;
  }
  std::vector<char> node_mark(static_cast<size_t>((ncx + 1) * (ncx + 1)));
  for (int l = 0; l < layers; ++l) {
    std::fill(node_mark.begin(), node_mark.end(), 0);
    for (int t = 0; t < n_coarse_tris(); ++t)
      if (mask[static_cast<size_t>(t)])
        for (int g : coarse_tri_grid_nodes(t)) node_mark[static_cast<size_t>(g)] = 1;
    for (int t = 0; t < n_coarse_tris(); ++t) {
      if (mask[static_cast<size_t>(t)] || !cell_active(t)) continue;
      for (int g : coarse_tri_grid_nodes(t))
        if (node_mark[static_cast<size_t>(g)]) {
          mask[static_cast<size_t>(t)] = 1;
          break;
        }
    }
  }
  std::vector<int> out;
  for (int t = 0; t < n_coarse_tris(); ++t)
    if (mask[static_cast<size_t>(t)]) out.push_back(t);
  return out;
}

std::vector<int> MeshHierarchy::node_patch(int coarse_compact, int layers) const {
  const auto& seeds = coarse_node_cells[static_cast<size_t>(coarse_compact)];
  if (layers <= 0) return seeds;
  return cell_patch(seeds, layers);
}

std::vector<int> MeshHierarchy::interior_vertex_violations() const {
  std::vector<char> near_interior(static_cast<size_t>((ncx + 1) * (ncx + 1)), 0);
  for (int t = 0; t < n_coarse_tris(); ++t)
    if (coarse_class[static_cast<size_t>(t)] == CellClass::Interior)
      for (int g : coarse_tri_grid_nodes(t)) near_interior[static_cast<size_t>(g)] = 1;
  std::vector<int> bad;
  for (int t = 0; t < n_coarse_tris(); ++t) {
    if (!cell_active(t)) continue;
    bool ok = false;
    for (int g : coarse_tri_grid_nodes(t))
      if (near_interior[static_cast<size_t>(g)]) {
        ok = true;
        break;
      }
    if (!ok) bad.push_back(t);
  }
  return bad;
}

namespace {

// True if some fine boundary edge incident to fine grid node (a, b) carries a
// Dirichlet tag. Probes all six incident edges, diagonals included.
bool node_on_dirichlet(const DomainShape& shape, const std::vector<char>& inside, int nfx,
                       double x0, double y0, double h, int a, int b) {
  for (const EdgeProbe& e : incident_edges(a, b)) {
    const bool s1 = fine_status(inside, nfx, e.s1_a, e.s1_b, e.s1_u);
    const bool s2 = fine_status(inside, nfx, e.s2_a, e.s2_b, e.s2_u);
    if (s1 == s2) continue;
    const Vec2 pa{x0 + e.pa_a * h, y0 + e.pa_b * h};
    const Vec2 pb{x0 + e.pb_a * h, y0 + e.pb_b * h};
    if (shape.tag(pa, pb).is_dirichlet()) return true;
  }
  return false;
}

}  // namespace

MeshHierarchy build_hierarchy(const DomainShape& shape, int m, int n, const ZoneSpec& zone) {
  if (m < 0 || n < m) throw ResolutionError("need fine level n >= coarse level m >= 0");
  if (zone.layers < 0) throw ResolutionError("zone layers must be >= 0");

  MeshHierarchy hier;
  hier.shape = shape;
  hier.m = m;
  hier.n = n;
  hier.H = std::ldexp(1.0, -m);
  hier.h = std::ldexp(1.0, -n);
  hier.box = shape.bounding;
  const double side = hier.box.width();
  if (std::abs(side - hier.box.height()) > 1e-12)
    throw ResolutionError("background box must be square");
  hier.ncx = static_cast<int>(std::lround(side / hier.H));
  hier.nfx = static_cast<int>(std::lround(side / hier.h));
  hier.ratio = 1 << (n - m);
  if (hier.ncx * hier.ratio != hier.nfx)
    throw ResolutionError("background box is not aligned with the lattices");

  const int nfx = hier.nfx, ncx = hier.ncx, ratio = hier.ratio;
  const double x0 = hier.box.x0, y0 = hier.box.y0, h = hier.h;

  // Rasterize: a fine triangle belongs to the domain iff its barycenter does.
  hier.fine_inside.assign(static_cast<size_t>(2 * nfx * nfx), 0);
  for (int b = 0; b < nfx; ++b)
    for (int a = 0; a < nfx; ++a) {
      const Vec2 lower{x0 + (a + 2.0 / 3.0) * h, y0 + (b + 1.0 / 3.0) * h};
      const Vec2 upper{x0 + (a + 1.0 / 3.0) * h, y0 + (b + 2.0 / 3.0) * h};
      hier.fine_inside[static_cast<size_t>(tri_id(nfx, a, b, 0))] = shape.inside_raw(lower);
      hier.fine_inside[static_cast<size_t>(tri_id(nfx, a, b, 1))] = shape.inside_raw(upper);
    }

  // Classify coarse cells by their fine children.
  std::vector<int> in_count(static_cast<size_t>(2 * ncx * ncx), 0);
  for (int t = 0; t < 2 * nfx * nfx; ++t)
    if (hier.fine_inside[static_cast<size_t>(t)])
      ++in_count[static_cast<size_t>(hier.owner_coarse_tri(t))];
  hier.coarse_class.resize(static_cast<size_t>(2 * ncx * ncx));
  const int children = ratio * ratio;
  for (int t = 0; t < 2 * ncx * ncx; ++t) {
    const int in = in_count[static_cast<size_t>(t)];
    hier.coarse_class[static_cast<size_t>(t)] =
        in == 0 ? CellClass::Outside : (in == children ? CellClass::Interior : CellClass::Cut);
  }

  // Compact coarse nodes and their incident active cells.
  const int cw = ncx + 1;
  std::vector<char> cmark(static_cast<size_t>(cw * cw), 0);
  for (int t = 0; t < 2 * ncx * ncx; ++t)
    if (hier.cell_active(t))
      for (int g : hier.coarse_tri_grid_nodes(t)) cmark[static_cast<size_t>(g)] = 1;
  hier.coarse_node_id.assign(static_cast<size_t>(cw * cw), -1);
  for (int g = 0; g < cw * cw; ++g)
    if (cmark[static_cast<size_t>(g)]) {
      hier.coarse_node_id[static_cast<size_t>(g)] = hier.n_coarse_nodes();
      hier.coarse_node_grid.push_back(g);
    }
  hier.coarse_node_cells.resize(static_cast<size_t>(hier.n_coarse_nodes()));
  for (int t = 0; t < 2 * ncx * ncx; ++t)
    if (hier.cell_active(t))
      for (int g : hier.coarse_tri_grid_nodes(t))
        hier.coarse_node_cells[static_cast<size_t>(hier.coarse_node_id[static_cast<size_t>(g)])]
            .push_back(t);

  hier.coarse_dirichlet.resize(static_cast<size_t>(hier.n_coarse_nodes()));
  for (int c = 0; c < hier.n_coarse_nodes(); ++c) {
    const int g = hier.coarse_node_grid[static_cast<size_t>(c)];
    const int i = g % cw, j = g / cw;
    hier.coarse_dirichlet[static_cast<size_t>(c)] =
        node_on_dirichlet(shape, hier.fine_inside, nfx, x0, y0, h, i * ratio, j * ratio);
  }
  // Interpolation nodes: non-Dirichlet nodes that lie in the closed domain,
  // i.e. touch an inside fine triangle. Corners of cut cells that fall
  // outside the domain carry no nodal value: the fine mesh never slaves to
  // them, and their clipped hat trace can even vanish outright (a cut face
  // one fine cell away from a coarse lattice line), so keeping them would
  // make both the reference and the multiscale systems singular.
  for (int c = 0; c < hier.n_coarse_nodes(); ++c) {
    if (hier.coarse_dirichlet[static_cast<size_t>(c)]) continue;
    const int g = hier.coarse_node_grid[static_cast<size_t>(c)];
    const int a = (g % cw) * ratio, b = (g / cw) * ratio;
    const int cand[6][3] = {{a, b, 0},     {a, b, 1},         {a - 1, b, 0},
                            {a, b - 1, 1}, {a - 1, b - 1, 0}, {a - 1, b - 1, 1}};
    for (const auto& tc : cand)
      if (fine_status(hier.fine_inside, nfx, tc[0], tc[1], tc[2])) {
        hier.free_coarse_nodes.push_back(c);
        break;
      }
  }

  // Enrichment zone: closure layers around the cut cells plus extras.
  std::vector<int> seeds;
  for (int t = 0; t < 2 * ncx * ncx; ++t)
    if (hier.coarse_class[static_cast<size_t>(t)] == CellClass::Cut) seeds.push_back(t);
  if (zone.extra_box) {
    for (int t = 0; t < 2 * ncx * ncx; ++t) {
      if (!hier.cell_active(t)) continue;
      const auto corners = hier.coarse_tri_corners(t);
      const Vec2 bc{(corners[0].x + corners[1].x + corners[2].x) / 3.0,
                    (corners[0].y + corners[1].y + corners[2].y) / 3.0};
      if (zone.extra_box->contains(bc)) seeds.push_back(t);
    }
  }
  for (int t : zone.extra_seed_cells) seeds.push_back(t);
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  hier.zone_cells = seeds.empty() ? seeds : hier.cell_patch(seeds, zone.layers);
  hier.coarse_zone.assign(static_cast<size_t>(2 * ncx * ncx), 0);
  for (int t : hier.zone_cells) hier.coarse_zone[static_cast<size_t>(t)] = 1;

  // Fine nodes and triangles covering the zone.
  const int fw = nfx + 1;
  std::vector<char> fmark(static_cast<size_t>(fw * fw), 0);
  for (int t = 0; t < 2 * nfx * nfx; ++t) {
    if (!hier.fine_inside[static_cast<size_t>(t)]) continue;
    if (!hier.coarse_zone[static_cast<size_t>(hier.owner_coarse_tri(t))]) continue;
    hier.zone_fine_tris.push_back(t);
    for (int g : hier.fine_tri_grid_nodes(t)) fmark[static_cast<size_t>(g)] = 1;
  }
  hier.fine_node_id.assign(static_cast<size_t>(fw * fw), -1);
  for (int g = 0; g < fw * fw; ++g)
    if (fmark[static_cast<size_t>(g)]) {
      hier.fine_node_id[static_cast<size_t>(g)] = hier.n_fine_nodes();
      hier.fine_node_grid.push_back(g);
    }

  hier.fine_info.resize(static_cast<size_t>(hier.n_fine_nodes()));
  for (int f = 0; f < hier.n_fine_nodes(); ++f) {
    const int g = hier.fine_node_grid[static_cast<size_t>(f)];
    const int a = g % fw, b = g / fw;
    auto& info = hier.fine_info[static_cast<size_t>(f)];
    info.coarse_pos = (a % ratio == 0) && (b % ratio == 0);
    info.dirichlet = node_on_dirichlet(shape, hier.fine_inside, nfx, x0, y0, h, a, b);
  }
  // Interface nodes: zone fine nodes that also touch inside fine cells owned
  // by active cells outside the zone (conformity couples them to the coarse
  // trace there).
  for (int t = 0; t < 2 * nfx * nfx; ++t) {
    if (!hier.fine_inside[static_cast<size_t>(t)]) continue;
    if (hier.coarse_zone[static_cast<size_t>(hier.owner_coarse_tri(t))]) continue;
    for (int g : hier.fine_tri_grid_nodes(t)) {
      const int f = hier.fine_node_id[static_cast<size_t>(g)];
      if (f >= 0) hier.fine_info[static_cast<size_t>(f)].interface = true;
    }
  }

  // Boundary edges, split by whether the inside triangle belongs to the zone.
  const double diag_len = h * std::sqrt(2.0);
  for (int t = 0; t < 2 * nfx * nfx; ++t) {
    if (!hier.fine_inside[static_cast<size_t>(t)]) continue;
    const TriRef r = tri_ref(nfx, t);
    const bool zone_owned = hier.coarse_zone[static_cast<size_t>(hier.owner_coarse_tri(t))] != 0;
    // Edge table: endpoints (grid coords) and facing triangle.
    int edges[3][7];
    if (r.u == 0) {
      const int e0[7] = {r.a, r.b, r.a + 1, r.b, r.a, r.b - 1, 1};          // bottom
      const int e1[7] = {r.a + 1, r.b, r.a + 1, r.b + 1, r.a + 1, r.b, 1};  // right
      const int e2[7] = {r.a, r.b, r.a + 1, r.b + 1, r.a, r.b, 1};          // diagonal
      std::copy(e0, e0 + 7, edges[0]);
      std::copy(e1, e1 + 7, edges[1]);
      std::copy(e2, e2 + 7, edges[2]);
    } else {
      const int e0[7] = {r.a, r.b + 1, r.a + 1, r.b + 1, r.a, r.b + 1, 0};  // top
      const int e1[7] = {r.a, r.b, r.a, r.b + 1, r.a - 1, r.b, 0};          // left
      const int e2[7] = {r.a, r.b, r.a + 1, r.b + 1, r.a, r.b, 0};          // diagonal
      std::copy(e0, e0 + 7, edges[0]);
      std::copy(e1, e1 + 7, edges[1]);
      std::copy(e2, e2 + 7, edges[2]);
    }
    for (int e = 0; e < 3; ++e) {
      if (fine_status(hier.fine_inside, nfx, edges[e][4], edges[e][5], edges[e][6])) continue;
      const Vec2 pa{x0 + edges[e][0] * h, y0 + edges[e][1] * h};
      const Vec2 pb{x0 + edges[e][2] * h, y0 + edges[e][3] * h};
      const bool diagonal = (edges[e][0] != edges[e][2]) && (edges[e][1] != edges[e][3]);
      const double len = diagonal ? diag_len : h;
      const BcTag tag = shape.tag(pa, pb);
      if (zone_owned) {
        ZoneBoundaryEdge be;
        be.a = hier.fine_node_id[static_cast<size_t>(edges[e][1] * fw + edges[e][0])];
        be.b = hier.fine_node_id[static_cast<size_t>(edges[e][3] * fw + edges[e][2])];
        be.pa = pa;
        be.pb = pb;
        be.len = len;
        be.tag = tag;
        hier.zone_boundary_edges.push_back(be);
      } else {
        hier.out_boundary_edges.push_back({pa, pb, len, tag, hier.owner_coarse_tri(t)});
      }
    }
  }
  return hier;
}

namespace {

SimplicialMesh rasterize(const Box& bounds, double h,
                         const std::function<bool(Vec2)>& pred) {
  const int wx = static_cast<int>(std::lround(bounds.width() / h));
  const int wy = static_cast<int>(std::lround(bounds.height() / h));
  if (std::abs(bounds.width() - wx * h) > 1e-9 * h || std::abs(bounds.height() - wy * h) > 1e-9 * h)
    throw ResolutionError("mesh bounds are not aligned with the lattice");
  const int nw = wx + 1;
  std::vector<int> node_id(static_cast<size_t>(nw * (wy + 1)), -1);
  std::vector<std::array<int, 3>> tris_grid;
  for (int b = 0; b < wy; ++b)
    for (int a = 0; a < wx; ++a) {
      const Vec2 lower{bounds.x0 + (a + 2.0 / 3.0) * h, bounds.y0 + (b + 1.0 / 3.0) * h};
      const Vec2 upper{bounds.x0 + (a + 1.0 / 3.0) * h, bounds.y0 + (b + 2.0 / 3.0) * h};
      if (pred(lower))
        tris_grid.push_back({b * nw + a, b * nw + a + 1, (b + 1) * nw + a + 1});
      if (pred(upper))
        tris_grid.push_back({b * nw + a, (b + 1) * nw + a + 1, (b + 1) * nw + a});
    }
  for (const auto& t : tris_grid)
    for (int g : t) node_id[static_cast<size_t>(g)] = 0;
  SimplicialMesh mesh;
  for (int g = 0; g < nw * (wy + 1); ++g)
    if (node_id[static_cast<size_t>(g)] == 0) {
      node_id[static_cast<size_t>(g)] = static_cast<int>(mesh.nodes.size());
      mesh.nodes.push_back({bounds.x0 + (g % nw) * h, bounds.y0 + (g / nw) * h});
    }
  for (const auto& t : tris_grid)
    mesh.tris.push_back({node_id[static_cast<size_t>(t[0])], node_id[static_cast<size_t>(t[1])],
                         node_id[static_cast<size_t>(t[2])]});
  return mesh;
}

}  // namespace

SimplicialMesh mesh_from_boxes(const std::vector<Box>& boxes, double h) {
  if (boxes.empty()) throw DimensionMismatch("mesh_from_boxes: no boxes");
  Box bounds = boxes[0];
  for (const Box& b : boxes) {
    bounds.x0 = std::min(bounds.x0, b.x0);
    bounds.y0 = std::min(bounds.y0, b.y0);
    bounds.x1 = std::max(bounds.x1, b.x1);
    bounds.y1 = std::max(bounds.y1, b.y1);
  }
  return rasterize(bounds, h, [&boxes](Vec2 p) {
    for (const Box& b : boxes)
      if (b.contains(p)) return true;
    return false;
  });
}

SimplicialMesh mesh_from_shape(const DomainShape& shape, double h) {
  return rasterize(shape.bounding, h, [&shape](Vec2 p) { return shape.inside_raw(p); });
}

std::vector<std::pair<int, int>> boundary_edges(const SimplicialMesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : mesh.tris)
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<size_t>(e)], b = t[static_cast<size_t>((e + 1) % 3)];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  std::vector<std::pair<int, int>> out;
  for (const auto& [edge, c] : count)
    if (c == 1) out.push_back(edge);
  return out;
}

}  // namespace lodcut
