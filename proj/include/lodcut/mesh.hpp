#pragma once

// Two-level background meshes over a shape's bounding box. The coarse level
// is a uniform lattice of squares split along the lower-left to upper-right
// diagonal; the fine level refines each coarse square by a power of two and
// is split the same way, so coarse edges are unions of fine edges and every
// coarse hat is exactly representable on the fine mesh.
//
// The domain itself is the union of fine triangles whose barycenter passes
// the shape's point test; every "is this inside" question anywhere in the
// library is answered by that rasterization, never by ad-hoc geometry.

#include "lodcut/geometry.hpp"

#include <array>
#include <optional>
#include <vector>

namespace lodcut {

enum class CellClass : char { Interior, Cut, Outside };

// How the enrichment zone is grown: closure layers around the cut cells,
// plus an optional box of cells (singular corners) and explicit seed cells
// (used by tests to build zones on resolved domains).
struct ZoneSpec {
  int layers = 2;
  std::optional<Box> extra_box;
  std::vector<int> extra_seed_cells;
};

struct FineNodeInfo {
  bool coarse_pos = false;  // coincides with a coarse lattice node
  bool interface = false;   // also borders inside fine cells of non-zone active cells
  bool dirichlet = false;   // sits on a Dirichlet piece of the rasterized boundary
};

// A fine boundary edge inside the zone, with compact fine node ids.
struct ZoneBoundaryEdge {
  int a = 0, b = 0;
  Vec2 pa, pb;
  double len = 0;
  BcTag tag;
};

// A fine boundary edge outside the zone. Carries the owning coarse cell so
// boundary terms can be accumulated onto coarse hats exactly.
struct OutZoneBoundaryEdge {
  Vec2 pa, pb;
  double len = 0;
  BcTag tag;
  int coarse_tri = -1;
};

struct MeshHierarchy {
  DomainShape shape;
  int m = 0, n = 0, ratio = 1;
  double H = 0, h = 0;
  Box box;
  int ncx = 0;  // coarse squares per side
  int nfx = 0;  // fine squares per side

  // Triangle ids: 2*(row*width + col) + u with u=0 lower, u=1 upper.
  std::vector<char> fine_inside;
  std::vector<CellClass> coarse_class;
  std::vector<char> coarse_zone;
  std::vector<int> zone_cells;  // ascending coarse tri ids

  // Compact coarse nodes over active cells, assigned in grid order (y, then x).
  std::vector<int> coarse_node_id;    // grid id -> compact id or -1
  std::vector<int> coarse_node_grid;  // compact id -> grid id
  std::vector<char> coarse_dirichlet;
  std::vector<std::vector<int>> coarse_node_cells;  // incident active tris
  std::vector<int> free_coarse_nodes;               // interpolation nodes, ascending

  // Compact fine nodes over the zone, assigned in grid order.
  std::vector<int> fine_node_id;
  std::vector<int> fine_node_grid;
  std::vector<FineNodeInfo> fine_info;
  std::vector<int> zone_fine_tris;  // ascending fine tri ids

  std::vector<ZoneBoundaryEdge> zone_boundary_edges;
  std::vector<OutZoneBoundaryEdge> out_boundary_edges;

  int n_coarse_tris() const { return 2 * ncx * ncx; }
  int n_fine_tris() const { return 2 * nfx * nfx; }
  int n_coarse_nodes() const { return static_cast<int>(coarse_node_grid.size()); }
  int n_fine_nodes() const { return static_cast<int>(fine_node_grid.size()); }
  int n_free() const { return static_cast<int>(free_coarse_nodes.size()); }

  bool cell_active(int t) const { return coarse_class[t] != CellClass::Outside; }

  std::array<int, 3> coarse_tri_grid_nodes(int t) const;
  std::array<int, 3> fine_tri_grid_nodes(int t) const;
  Vec2 coarse_grid_pos(int grid) const;
  Vec2 fine_grid_pos(int grid) const;
  std::array<Vec2, 3> coarse_tri_corners(int t) const;
  std::array<Vec2, 3> fine_tri_corners(int t) const;

  int owner_coarse_tri(int fine_tri) const;

  // Barycentric coordinates of p inside coarse tri t, ordered like the
  // corner list. Exact for points on the fine lattice.
  std::array<double, 3> coarse_barycentric(int t, Vec2 p) const;

  // First inside fine triangle around fine grid node (a, b) owned by a zone
  // cell, or -1. Fixed scan order keeps results deterministic.
  int incident_zone_tri(int a, int b) const;

  // L-fold closure of the seed cells under shared-vertex adjacency,
  // intersected with the active cells. Seeds must be active.
  std::vector<int> cell_patch(const std::vector<int>& seeds, int layers) const;

  // Patch of a coarse node: its incident active cells, then `layers` closures.
  std::vector<int> node_patch(int coarse_compact, int layers) const;

  // Active cells sharing no vertex with any interior cell.
  std::vector<int> interior_vertex_violations() const;
};

MeshHierarchy build_hierarchy(const DomainShape& shape, int m, int n, const ZoneSpec& zone = {});

// Flat simplicial mesh used by the Poincare estimators and their tests.
struct SimplicialMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
};

// Rasterizes a box union (or a full shape) on a lattice of spacing h using
// the same barycenter rule as the hierarchy.
SimplicialMesh mesh_from_boxes(const std::vector<Box>& boxes, double h);
SimplicialMesh mesh_from_shape(const DomainShape& shape, double h);

// Edges incident to exactly one triangle, as sorted node-id pairs.
std::vector<std::pair<int, int>> boundary_edges(const SimplicialMesh& mesh);

}  // namespace lodcut
