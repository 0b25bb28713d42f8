#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "lodcut/experiments.hpp"

using namespace lodcut;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SpMat identity_extension(const MeshHierarchy& hier) {
  SpMat e(hier.n_coarse_nodes(), hier.n_free());
  std::vector<Triplet> trips;
  for (int i = 0; i < hier.n_free(); ++i)
    trips.emplace_back(hier.free_coarse_nodes[static_cast<size_t>(i)], i, 1.0);
  e.setFromTriplets(trips.begin(), trips.end());
  return e;
}

VecX coarse_values(const MeshHierarchy& hier, const std::function<double(Vec2)>& u) {
  VecX c = VecX::Zero(hier.n_coarse_nodes());
  for (int i = 0; i < hier.n_coarse_nodes(); ++i)
    c(i) = u(hier.coarse_grid_pos(hier.coarse_node_grid[static_cast<size_t>(i)]));
  return c;
}

int free_index_of_grid(const MeshHierarchy& hier, int gi, int gj) {
  const int grid = gj * (hier.ncx + 1) + gi;
  const int compact = hier.coarse_node_id[static_cast<size_t>(grid)];
  REQUIRE(compact >= 0);
  const auto it = std::lower_bound(hier.free_coarse_nodes.begin(), hier.free_coarse_nodes.end(),
                                   compact);
  REQUIRE(it != hier.free_coarse_nodes.end());
  REQUIRE(*it == compact);
  return static_cast<int>(it - hier.free_coarse_nodes.begin());
}

std::vector<std::pair<int, int>> bottom_gamma(const SimplicialMesh& mesh) {
  std::vector<std::pair<double, int>> bottom;
  for (size_t i = 0; i < mesh.nodes.size(); ++i)
    if (std::abs(mesh.nodes[i].y) < 1e-12) bottom.push_back({mesh.nodes[i].x, static_cast<int>(i)});
  std::sort(bottom.begin(), bottom.end());
  std::vector<std::pair<int, int>> gamma;
  for (size_t i = 0; i + 1 < bottom.size(); ++i) {
    const int a = bottom[i].second, b = bottom[i + 1].second;
    gamma.push_back({std::min(a, b), std::max(a, b)});
  }
  return gamma;
}

// Plain FEM with homogeneous Dirichlet data on every boundary node.
VecX dirichlet_fem(const SimplicialMesh& mesh, const std::function<double(Vec2)>& f,
                   const std::vector<int>& interior, const SpMat& K) {
  VecX b = VecX::Zero(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (const auto& tri : mesh.tris) {
    const std::array<Vec2, 3> corners = {mesh.nodes[static_cast<size_t>(tri[0])],
                                         mesh.nodes[static_cast<size_t>(tri[1])],
                                         mesh.nodes[static_cast<size_t>(tri[2])]};
    const Eigen::Vector3d be = p1_load(corners, f);
    for (int v = 0; v < 3; ++v) b(tri[static_cast<size_t>(v)]) += be(v);
  }
  const int ni = static_cast<int>(interior.size());
  MatX kff(ni, ni);
  VecX bf(ni);
  for (int a = 0; a < ni; ++a) {
    bf(a) = b(interior[static_cast<size_t>(a)]);
    for (int c = 0; c < ni; ++c)
      kff(a, c) = K.coeff(interior[static_cast<size_t>(a)], interior[static_cast<size_t>(c)]);
  }
  const VecX uf = kff.ldlt().solve(bf);
  VecX u = VecX::Zero(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (int a = 0; a < ni; ++a) u(interior[static_cast<size_t>(a)]) = uf(a);
  return u;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("element matrices on the reference triangle") {
    const std::array<Vec2, 3> tri = {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}};
    CHECK(tri_area(tri) == doctest::Approx(0.5).epsilon(1e-14));

    Eigen::Matrix3d k_ref;
    k_ref << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    k_ref *= 0.5;
    CHECK((p1_stiffness(tri) - k_ref).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::Matrix3d m_ref;
    m_ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    m_ref *= 0.5 / 12.0;
    CHECK((p1_mass(tri) - m_ref).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::Matrix2d r_ref;
    r_ref << 2, 1, 1, 2;
    r_ref *= 3.0 * 0.25 / 6.0;
    CHECK((robin_edge_matrix(0.25, 3.0) - r_ref).cwiseAbs().maxCoeff() < 1e-14);

    // f == 1 integrates each hat to area/3.
    const Eigen::Vector3d b1 = p1_load(tri, {});
    CHECK((b1 - Eigen::Vector3d::Constant(0.5 / 3)).cwiseAbs().maxCoeff() < 1e-14);

    // f = x*y against the three hats of this triangle, integrated exactly.
    const Eigen::Vector3d bxy = p1_load(tri, [](Vec2 p) { return p.x * p.y; });
    CHECK(bxy(0) == doctest::Approx(1.0 / 40).epsilon(1e-13));
    CHECK(bxy(1) == doctest::Approx(1.0 / 30).epsilon(1e-13));
    CHECK(bxy(2) == doctest::Approx(1.0 / 15).epsilon(1e-13));
  }

  TEST_CASE("fractal tree spawns three children per frontier square") {
    for (int levels : {0, 1, 2, 3}) {
      ShapeParams params;
      params.fractal_levels = levels;
      const double h = std::ldexp(1.0, -(levels + 2));
      const DomainShape s = build_shape(ShapeKind::Fractal, params, h);
      size_t expect = 1, layer = 1;
      for (int l = 0; l < levels; ++l) {
        layer *= 3;
        expect += layer;
      }
      CHECK(s.boxes.size() == expect);
      CHECK(s.bounding.x0 == -1.0);
      CHECK(s.bounding.x1 == 2.0);
    }
    // Level-one children sit centered on the west, north, and east faces.
    ShapeParams params;
    params.fractal_levels = 1;
    const DomainShape s = build_shape(ShapeKind::Fractal, params, 0.25);
    REQUIRE(s.boxes.size() == 4);
    CHECK(s.boxes[1].x0 == doctest::Approx(-0.5));
    CHECK(s.boxes[1].y0 == doctest::Approx(0.25));
    CHECK(s.boxes[2].x0 == doctest::Approx(0.25));
    CHECK(s.boxes[2].y0 == doctest::Approx(1.0));
    CHECK(s.boxes[3].x0 == doctest::Approx(1.0));
    CHECK(s.boxes[3].y0 == doctest::Approx(0.25));
  }

  TEST_CASE("boundary parts per shape") {
    const DomainShape square = build_shape(ShapeKind::UnitSquare, {}, 0.25);
    CHECK(square.boundary_part({0, 0}, {0.25, 0}) == BoundaryPart::Special);
    CHECK(square.boundary_part({0, 0}, {0, 0.25}) == BoundaryPart::Outer);

    ShapeParams fp;
    fp.fractal_levels = 1;
    const DomainShape fractal = build_shape(ShapeKind::Fractal, fp, 0.25);
    CHECK(fractal.boundary_part({0.25, 0}, {0.5, 0}) == BoundaryPart::Outer);
    CHECK(fractal.boundary_part({0, 0.25}, {0, 0.5}) == BoundaryPart::Outer);
    CHECK(fractal.boundary_part({1, 0}, {1, 0.25}) == BoundaryPart::Outer);
    CHECK(fractal.boundary_part({0, 1}, {0.25, 1}) == BoundaryPart::Special);
    CHECK(fractal.boundary_part({-0.5, 0.25}, {-0.5, 0.5}) == BoundaryPart::Special);

    ShapeParams sp;
    sp.teeth_exponent = 2;
    sp.tooth_length = 0.25;
    const DomainShape saw = build_shape(ShapeKind::SawTooth, sp, 0.0625);
    CHECK(saw.boundary_part({0, 0}, {0.25, 0}) == BoundaryPart::Outer);
    CHECK(saw.boundary_part({0.875, 0}, {1, 0}) == BoundaryPart::Outer);
    CHECK(saw.boundary_part({0, 0.5}, {0, 0.75}) == BoundaryPart::Outer);
    CHECK(saw.boundary_part({1, 0}, {1, 0.25}) == BoundaryPart::Special);
    CHECK(saw.boundary_part({0.75, 0.25}, {0.75, 0.5}) == BoundaryPart::Special);

    ShapeParams cp;
    cp.cut.kind = CutKind::Horizontal;
    cp.cut.r = 0.25;
    const DomainShape cut = build_shape(ShapeKind::CutLShape, cp, 0.0625);
    CHECK(cut.boundary_part({0.75, 0.5}, {0.75, 1}) == BoundaryPart::Special);
    CHECK(cut.boundary_part({0.5, 0}, {0.5, 0.25}) == BoundaryPart::Outer);
    CHECK(cut.boundary_part({0.5, 0.5}, {0.75, 0.5}) == BoundaryPart::Outer);
    CHECK(cut.boundary_part({0, 0}, {0.25, 0}) == BoundaryPart::Outer);

    ShapeParams bp;
    bp.cut.kind = CutKind::Circular;
    bp.cut.r = 0.25;
    const DomainShape ball = build_shape(ShapeKind::CutLShape, bp, 0.0625);
    CHECK(ball.boundary_part({0.4375, 0.4375}, {0.4375, 0.5}) == BoundaryPart::Special);
    CHECK(ball.boundary_part({0, 0.5}, {0, 0.75}) == BoundaryPart::Outer);
    CHECK(ball.removed.has_value());
  }

  TEST_CASE("construction lengths must sit on the fine lattice") {
    ShapeParams p;
    p.slit_width = 0.3;
    CHECK_THROWS_AS(build_shape(ShapeKind::Slit, p, 1.0 / 32), ResolutionError);
    p.slit_width = 1.0 / 64;
    CHECK_THROWS_AS(build_shape(ShapeKind::Slit, p, 1.0 / 32), ResolutionError);
    p.slit_width = 0;  // fills in one fine cell
    CHECK(build_shape(ShapeKind::Slit, p, 1.0 / 32).params.slit_width ==
          doctest::Approx(1.0 / 32));

    ShapeParams c;
    c.cut.kind = CutKind::Horizontal;
    c.cut.r = 0.5;
    CHECK_THROWS_AS(build_shape(ShapeKind::CutLShape, c, 1.0 / 32), ResolutionError);
    c.cut.kind = CutKind::Circular;
    c.cut.r = 0.5;
    CHECK_THROWS_AS(build_shape(ShapeKind::CutLShape, c, 1.0 / 32), ResolutionError);
    c.cut.r = 1.0 / 64;
    CHECK_THROWS_AS(build_shape(ShapeKind::CutLShape, c, 1.0 / 32), ResolutionError);

    ShapeParams f;
    f.fractal_levels = 1;
    CHECK_THROWS_AS(build_shape(ShapeKind::Fractal, f, 0.5), ResolutionError);
  }
}

TEST_SUITE("mesh") {
  TEST_CASE("resolved unit square hierarchy") {
    const DomainShape shape = build_shape(ShapeKind::UnitSquare, {}, 1.0 / 16);
    const MeshHierarchy hier = build_hierarchy(shape, 2, 4);
    CHECK(hier.ncx == 4);
    CHECK(hier.nfx == 16);
    CHECK(hier.ratio == 4);
    for (int t = 0; t < hier.n_coarse_tris(); ++t)
      CHECK(hier.coarse_class[static_cast<size_t>(t)] == CellClass::Interior);
    CHECK(hier.zone_cells.empty());
    CHECK(hier.n_coarse_nodes() == 25);
    CHECK(hier.n_free() == 9);  // all boundary nodes are Dirichlet by default
    CHECK(hier.n_fine_nodes() == 0);
    CHECK(hier.interior_vertex_violations().empty());
  }

  TEST_CASE("slit column is cut and swallowed by the zone") {
    ShapeParams params;
    const DomainShape shape = build_shape(ShapeKind::Slit, params, 1.0 / 32);
    const MeshHierarchy hier = build_hierarchy(shape, 3, 5);
    int cut_cells = 0;
    for (int t = 0; t < hier.n_coarse_tris(); ++t) {
      if (hier.coarse_class[static_cast<size_t>(t)] == CellClass::Cut) {
        ++cut_cells;
        CHECK(hier.coarse_zone[static_cast<size_t>(t)] == 1);
      }
      if (hier.coarse_zone[static_cast<size_t>(t)] == 1)
        CHECK(hier.coarse_class[static_cast<size_t>(t)] != CellClass::Outside);
    }
    CHECK(cut_cells > 0);
    // The slot lives in coarse column 4; the cell right of the slit mouth is cut.
    CHECK(hier.coarse_class[static_cast<size_t>(2 * (1 * 8 + 4))] == CellClass::Cut);
    CHECK(hier.coarse_class[0] == CellClass::Interior);
    CHECK(hier.interior_vertex_violations().empty());
  }

  TEST_CASE("coarse barycentric coordinates are exact on the lattice") {
    const DomainShape shape = build_shape(ShapeKind::UnitSquare, {}, 1.0 / 16);
    const MeshHierarchy hier = build_hierarchy(shape, 2, 4);
    for (int t : {0, 1, 13}) {
      const auto corners = hier.coarse_tri_corners(t);
      for (int v = 0; v < 3; ++v) {
        const auto bary = hier.coarse_barycentric(t, corners[static_cast<size_t>(v)]);
        for (int w = 0; w < 3; ++w)
          CHECK(bary[static_cast<size_t>(w)] == doctest::Approx(v == w ? 1.0 : 0.0).epsilon(1e-14));
      }
      const Vec2 mid = (corners[0] + corners[1] + corners[2]) * (1.0 / 3);
      const auto bary = hier.coarse_barycentric(t, mid);
      CHECK(bary[0] + bary[1] + bary[2] == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(std::min({bary[0], bary[1], bary[2]}) > 0.0);
    }
  }

  TEST_CASE("zone fine triangles sit inside their owner cells") {
    ShapeParams params;
    const DomainShape shape = build_shape(ShapeKind::Slit, params, 1.0 / 32);
    const MeshHierarchy hier = build_hierarchy(shape, 3, 5);
    REQUIRE(!hier.zone_fine_tris.empty());
    for (size_t s = 0; s < hier.zone_fine_tris.size(); s += 7) {
      const int ft = hier.zone_fine_tris[s];
      const int owner = hier.owner_coarse_tri(ft);
      REQUIRE(owner >= 0);
      CHECK(hier.coarse_zone[static_cast<size_t>(owner)] == 1);
      for (const Vec2& p : hier.fine_tri_corners(ft)) {
        const auto bary = hier.coarse_barycentric(owner, p);
        CHECK(std::min({bary[0], bary[1], bary[2]}) >= -1e-12);
        CHECK(bary[0] + bary[1] + bary[2] == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("interpolation reproduces linears and the partition of unity") {
    ShapeParams params;
    const DomainShape shape = build_shape(ShapeKind::Slit, params, 1.0 / 32);
    const MeshHierarchy hier = build_hierarchy(shape, 3, 5);
    const SpMat pi = assemble_interpolation(hier);
    REQUIRE(pi.rows() == hier.n_fine_nodes());
    REQUIRE(pi.cols() == hier.n_coarse_nodes());

    const VecX ones = pi * VecX::Ones(hier.n_coarse_nodes());
    CHECK((ones - VecX::Ones(hier.n_fine_nodes())).lpNorm<Eigen::Infinity>() < 1e-12);

    const VecX c = coarse_values(hier, [](Vec2 p) { return p.x + 2 * p.y; });
    const VecX w = pi * c;
    double worst = 0;
    for (int i = 0; i < hier.n_fine_nodes(); ++i) {
      const Vec2 p = hier.fine_grid_pos(hier.fine_node_grid[static_cast<size_t>(i)]);
      worst = std::max(worst, std::abs(w(i) - (p.x + 2 * p.y)));
      if (hier.fine_info[static_cast<size_t>(i)].coarse_pos) {
        // Row of a coarse lattice position is the delta at that coarse node.
        CHECK(VecX(pi.row(i)).lpNorm<Eigen::Infinity>() == doctest::Approx(1.0).epsilon(1e-13));
      }
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("box meshes and boundary edges") {
    const SimplicialMesh mesh = mesh_from_boxes({{0, 0, 1, 1}}, 0.25);
    CHECK(mesh.nodes.size() == 25);
    CHECK(mesh.tris.size() == 32);
    CHECK(boundary_edges(mesh).size() == 16);
  }
}

TEST_SUITE("assembly") {
  TEST_CASE("composite energy of an interpolated linear") {
    const DomainShape shape = build_shape(ShapeKind::UnitSquare, {}, 1.0 / 16);
    ZoneSpec zone;
    zone.layers = 1;
    zone.extra_seed_cells = {0};
    const MeshHierarchy hier = build_hierarchy(shape, 2, 4, zone);
    REQUIRE(!hier.zone_cells.empty());
    REQUIRE(hier.zone_cells.size() < 32);  // genuinely mixed representation
    const CompositeMatrices mats = assemble(hier, {});
    const SpMat pi = assemble_interpolation(hier);

    Field v;
    v.c = coarse_values(hier, [](Vec2 p) { return p.x + 2 * p.y; });
    v.w = pi * v.c;
    CHECK(energy_sq(mats, v) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(l2_sq(mats, v) == doctest::Approx(8.0 / 3).epsilon(1e-12));
  }

  TEST_CASE("robin energy agrees between the coarse and fine routes") {
    DomainShape shape = build_shape(ShapeKind::UnitSquare, {}, 1.0 / 16);
    shape.special_bc = BcTag::robin(3.0);  // bottom face
    ZoneSpec empty_zone;
    const MeshHierarchy coarse_route = build_hierarchy(shape, 2, 4, empty_zone);
    REQUIRE(coarse_route.zone_cells.empty());
    ZoneSpec bottom_zone;
    bottom_zone.layers = 0;
    bottom_zone.extra_seed_cells = {0, 2, 4, 6};  // lower triangles of the bottom row
    const MeshHierarchy fine_route = build_hierarchy(shape, 2, 4, bottom_zone);
    REQUIRE(!fine_route.zone_cells.empty());

    // energy of x + 2y: |grad|^2 over the square plus kappa * int_bottom x^2.
    const double expect = 5.0 + 3.0 / 3.0;
    for (const MeshHierarchy& hier : {coarse_route, fine_route}) {
      const CompositeMatrices mats = assemble(hier, {});
      Field v;
      v.c = coarse_values(hier, [](Vec2 p) { return p.x + 2 * p.y; });
      v.w = assemble_interpolation(hier) * v.c;
      CHECK(energy_sq(mats, v) == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("neumann cut stiffness equals the cut-aware coarse form") {
    ShapeParams params;
    params.cut.kind = CutKind::Horizontal;
    params.cut.r = 7.0 / 32;
    DomainShape shape = build_shape(ShapeKind::CutLShape, params, 1.0 / 32);
    shape.outer_bc = BcTag::neumann();
    shape.special_bc = BcTag::neumann();
    const MeshHierarchy hier = build_hierarchy(shape, 3, 5);
    const CompositeMatrices mats = assemble(hier, {});
    const SpMat pi = assemble_interpolation(hier);
    const SpMat e = identity_extension(hier);
    const SpMat w0 = make_uncorrected_basis(hier, pi);

    const SpMat khat = SpMat(e.transpose()) * mats.Kc * e +
                       SpMat(w0.transpose()) * mats.Kf * w0;
    std::vector<int> active;
    for (int t = 0; t < hier.n_coarse_tris(); ++t)
      if (hier.cell_active(t)) active.push_back(t);
    const SpMat kcut = assemble_coarse_cut_aware(hier, active);
    const SpMat kref = SpMat(e.transpose()) * kcut * e;

    const double scale = MatX(kref).cwiseAbs().maxCoeff();
    CHECK(MatX(khat - kref).cwiseAbs().maxCoeff() < 1e-12 * scale);
  }

  TEST_CASE("uncorrected solve is zone independent") {
    ShapeParams params;
    params.cut.kind = CutKind::Horizontal;
    params.cut.r = 7.0 / 32;
    const DomainShape shape = build_shape(ShapeKind::CutLShape, params, 1.0 / 32);
    VecX uhat[2];
    int variant = 0;
    for (int layers : {2, 0}) {
      ZoneSpec zone;
      zone.layers = layers;
      const MeshHierarchy hier = build_hierarchy(shape, 3, 5, zone);
      const CompositeMatrices mats = assemble(hier, {});
      const SpMat pi = assemble_interpolation(hier);
      const LodSolution sol = solve_lod(hier, mats, make_uncorrected_basis(hier, pi));
      uhat[variant++] = sol.uhat;
    }
    REQUIRE(uhat[0].size() == uhat[1].size());
    CHECK((uhat[0] - uhat[1]).lpNorm<Eigen::Infinity>() <
          1e-10 * uhat[0].lpNorm<Eigen::Infinity>());
  }
}

TEST_SUITE("clement") {
  TEST_CASE("coarse hats are reproduced and the operator is a projection") {
    ShapeParams params;
    const DomainShape shape = build_shape(ShapeKind::Slit, params, 1.0 / 16);
    const MeshHierarchy hier = build_hierarchy(shape, 2, 4);
    const SpMat pi = assemble_interpolation(hier);
    const ClementOperator clem = build_clement(hier);

    for (int i = 0; i < hier.n_free(); ++i) {
      Field hat;
      hat.c = VecX::Zero(hier.n_coarse_nodes());
      hat.c(hier.free_coarse_nodes[static_cast<size_t>(i)]) = 1.0;
      hat.w = pi * hat.c;
      const VecX y = clem.apply(hat);
      for (int j = 0; j < hier.n_free(); ++j)
        CHECK(y(j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }

    std::mt19937 rng(20240229u);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Field v;
    v.c = VecX::Zero(hier.n_coarse_nodes());
    v.w = VecX::Zero(hier.n_fine_nodes());
    for (Eigen::Index i = 0; i < v.c.size(); ++i) v.c(i) = uni(rng);
    for (Eigen::Index i = 0; i < v.w.size(); ++i) v.w(i) = uni(rng);
    const VecX y = clem.apply(v);
    Field vh;
    vh.c = VecX::Zero(hier.n_coarse_nodes());
    for (int i = 0; i < hier.n_free(); ++i)
      vh.c(hier.free_coarse_nodes[static_cast<size_t>(i)]) = y(i);
    vh.w = pi * vh.c;
    CHECK((clem.apply(vh) - y).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_SUITE("corrector") {
  TEST_CASE("whole-zone correctors are constrained and energy orthogonal") {
    ProblemSpec spec;
    spec.kind = ShapeKind::UnitSquare;
    spec.m = 2;
    spec.n = 4;
    spec.extra_box = Box{0.25, 0.25, 0.75, 0.75};
    const Problem prob = build_problem(spec);
    const MeshHierarchy& hier = prob.hier;
    const CorrectorBasis basis = build_basis(hier, prob.mats.Kf, prob.Pi, prob.clem, -1, 1);

    std::vector<int> free_fine;
    for (int g = 0; g < hier.n_fine_nodes(); ++g) {
      const FineNodeInfo& info = hier.fine_info[static_cast<size_t>(g)];
      if (!info.dirichlet && !info.interface) free_fine.push_back(g);
    }
    const int nf = static_cast<int>(free_fine.size());
    MatX lam(hier.n_free(), nf);
    for (int j = 0; j < nf; ++j)
      lam.col(j) = VecX(prob.clem.lambda_w.col(free_fine[static_cast<size_t>(j)]));
    const Eigen::FullPivLU<MatX> lu(lam);
    const MatX kernel = lu.kernel();
    REQUIRE(kernel.cols() > 0);

    for (int i = 0; i < hier.n_free(); i += 3) {
      const int x = hier.free_coarse_nodes[static_cast<size_t>(i)];
      const VecX qhat = VecX(basis.W.col(i)) - VecX(prob.Pi.col(x));
      const double scale = std::max(1.0, qhat.lpNorm<Eigen::Infinity>());
      CHECK((prob.clem.lambda_w * qhat).lpNorm<Eigen::Infinity>() < 1e-10 * scale);

      const VecX bw = VecX(basis.W.col(i));
      VecX bc = VecX::Zero(hier.n_coarse_nodes());
      bc(x) = 1.0;
      const double b_energy = std::sqrt(bc.dot(prob.mats.Kc * bc) + bw.dot(prob.mats.Kf * bw));
      for (int kcol = 0; kcol < kernel.cols(); kcol += 11) {
        VecX z = VecX::Zero(hier.n_fine_nodes());
        for (int j = 0; j < nf; ++j) z(free_fine[static_cast<size_t>(j)]) = kernel(j, kcol);
        const double z_energy = std::sqrt(z.dot(prob.mats.Kf * z));
        if (z_energy == 0) continue;
        CHECK(std::abs(bw.dot(prob.mats.Kf * z)) < 1e-9 * b_energy * z_energy);
      }
    }
  }

  TEST_CASE("correctors vanish away from the zone") {
    ProblemSpec spec;
    spec.kind = ShapeKind::UnitSquare;
    spec.m = 3;
    spec.n = 5;
    spec.k = 1;
    spec.extra_seed_cells = {0};
    const Problem prob = build_problem(spec);
    const MeshHierarchy& hier = prob.hier;
    const CorrectorBasis basis = build_basis(hier, prob.mats.Kf, prob.Pi, prob.clem, 2, 1);
    CHECK(basis.skipped > 0);

    const SpMat w0 = make_uncorrected_basis(hier, prob.Pi);
    const int far = free_index_of_grid(hier, 6, 6);
    CHECK(VecX(basis.W.col(far) - w0.col(far)).lpNorm<Eigen::Infinity>() == 0.0);

    const int near = free_index_of_grid(hier, 2, 2);
    const VecX qhat = VecX(basis.W.col(near) - w0.col(near));
    CHECK(qhat.lpNorm<Eigen::Infinity>() > 1e-6);
    CHECK((prob.clem.lambda_w * VecX(basis.W.col(near) -
                                     VecX(prob.Pi.col(hier.free_coarse_nodes[static_cast<size_t>(
                                         near)]))))
              .lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_SUITE("solver") {
  TEST_CASE("reference solve equals plain fine FEM when the zone covers everything") {
    ProblemSpec spec;
    spec.kind = ShapeKind::UnitSquare;
    spec.m = 2;
    spec.n = 4;
    spec.extra_box = Box{0.0, 0.0, 1.0, 1.0};
    const Problem prob = build_problem(spec);
    const MeshHierarchy& hier = prob.hier;
    REQUIRE(hier.zone_cells.size() == static_cast<size_t>(hier.n_coarse_tris()));
    const ReferenceSolution ref = solve_reference(hier, prob.mats);
    CHECK(ref.stats.residual < 1e-10);
    CHECK(relative_energy_error(prob.mats, ref.u, ref.u) == 0.0);

    const SimplicialMesh mesh = mesh_from_boxes({{0, 0, 1, 1}}, 1.0 / 16);
    SpMat K, M;
    assemble_p1(mesh, &K, &M);
    std::vector<int> interior;
    std::map<std::pair<long long, long long>, int> by_pos;
    for (size_t i = 0; i < mesh.nodes.size(); ++i) {
      const Vec2 p = mesh.nodes[i];
      by_pos[{std::llround(p.x * 16), std::llround(p.y * 16)}] = static_cast<int>(i);
      if (p.x > 1e-12 && p.x < 1 - 1e-12 && p.y > 1e-12 && p.y < 1 - 1e-12)
        interior.push_back(static_cast<int>(i));
    }
    const VecX u_fem = dirichlet_fem(mesh, {}, interior, K);

    double worst = 0;
    for (int i = 0; i < hier.n_fine_nodes(); ++i) {
      const Vec2 p = hier.fine_grid_pos(hier.fine_node_grid[static_cast<size_t>(i)]);
      const auto it = by_pos.find({std::llround(p.x * 16), std::llround(p.y * 16)});
      REQUIRE(it != by_pos.end());
      worst = std::max(worst, std::abs(ref.u.w(i) - u_fem(it->second)));
    }
    CHECK(worst < 1e-10);
  }

  TEST_CASE("center value of the unit square solution") {
    ProblemSpec spec;
    spec.kind = ShapeKind::UnitSquare;
    spec.m = 2;
    spec.n = 6;
    spec.extra_box = Box{0.0, 0.0, 1.0, 1.0};
    const Problem prob = build_problem(spec);
    const ReferenceSolution ref = solve_reference(prob.hier, prob.mats);
    const int grid = 32 * (prob.hier.nfx + 1) + 32;
    const int center = prob.hier.fine_node_id[static_cast<size_t>(grid)];
    REQUIRE(center >= 0);
    // Series value of the continuous solution at the center.
    CHECK(ref.u.w(center) == doctest::Approx(0.0736713).epsilon(7e-3));
    CHECK(std::abs(ref.u.w(center) - 0.0736713) < 5e-4);
  }
}

TEST_SUITE("analysis") {
  TEST_CASE("condition number of the discrete laplacian") {
    for (int n : {100, 2500}) {
      SpMat K(n, n);
      std::vector<Triplet> trips;
      for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, i, 2.0);
        if (i + 1 < n) {
          trips.emplace_back(i, i + 1, -1.0);
          trips.emplace_back(i + 1, i, -1.0);
        }
      }
      K.setFromTriplets(trips.begin(), trips.end());
      const ConditionReport rep = condition_number(K);
      const double lmin = 2.0 - 2.0 * std::cos(M_PI / (n + 1));
      const double lmax = 2.0 - 2.0 * std::cos(n * M_PI / (n + 1));
      CHECK(rep.dense == (n <= 2000));
      // The iterative path stalls near the clustered top of this spectrum;
      // a few digits is all the downstream slope fits need.
      CHECK(rep.cond == doctest::Approx(lmax / lmin).epsilon(n <= 2000 ? 1e-8 : 1e-4));
    }
  }

  TEST_CASE("condition number is scale invariant") {
    SpMat K(50, 50);
    std::vector<Triplet> trips;
    for (int i = 0; i < 50; ++i) {
      trips.emplace_back(i, i, 2.0);
      if (i + 1 < 50) {
        trips.emplace_back(i, i + 1, -1.0);
        trips.emplace_back(i + 1, i, -1.0);
      }
    }
    K.setFromTriplets(trips.begin(), trips.end());
    const SpMat K3 = 3.0 * K;
    CHECK(condition_number(K3).cond ==
          doctest::Approx(condition_number(K).cond).epsilon(1e-10));
  }

  TEST_CASE("fitted slopes recover synthetic laws") {
    const std::vector<double> H = {0.25, 0.125, 0.0625};
    std::vector<double> cond(3);
    for (size_t i = 0; i < 3; ++i) cond[i] = 7.0 / (H[i] * H[i]);
    CHECK(condition_scaling(H, cond) == doctest::Approx(2.0).epsilon(1e-12));

    const std::vector<double> xs = {1.0, 2.0, 4.0, 8.0};
    std::vector<double> ys(4);
    for (size_t i = 0; i < 4; ++i) ys[i] = 3.0 * std::pow(xs[i], 1.5);
    CHECK(loglog_slope(xs, ys) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK_THROWS_AS(loglog_slope({1.0, -2.0}, {1.0, 1.0}), DimensionMismatch);
  }

  TEST_CASE("localization error decays with patch size") {
    ProblemSpec spec;
    spec.kind = ShapeKind::UnitSquare;
    spec.m = 4;
    spec.n = 6;
    spec.extra_box = Box{0.25, 0.25, 0.75, 0.75};
    const Problem prob = build_problem(spec);
    const int probe = free_index_of_grid(prob.hier, 8, 8);
    const DecayReport rep =
        measure_decay(prob.hier, prob.mats.Kf, prob.Pi, prob.clem, probe, 2);
    REQUIRE(!rep.resolved);
    REQUIRE(rep.err.size() == 2);
    CHECK(rep.err[0] > 0);
    CHECK(rep.err[1] > 0);
    CHECK(rep.err[1] < rep.err[0]);
    CHECK(rep.slope < 0);
  }

  TEST_CASE("path bound on the reference element") {
    SimplicialMesh mesh;
    mesh.nodes = {{0, 0}, {1, 0}, {1, 1}};
    mesh.tris = {{0, 1, 2}};
    const PFPathBound path = pf_path_bound(mesh, {{0, 1}});
    CHECK(path.s_max == 1);
    CHECK(path.r_max == 1);
    CHECK(path.eta == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(path.gamma_len == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(path.diam == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(path.bound == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  }

  TEST_CASE("path lengths on the square grow linearly") {
    const SimplicialMesh mesh = mesh_from_boxes({{0, 0, 1, 1}}, 0.125);
    const PFPathBound path = pf_path_bound(mesh, bottom_gamma(mesh));
    // Worst element is an upper triangle of the top row: one diagonal step
    // per row plus one horizontal step per row.
    CHECK(path.s_max == 16);
    CHECK(path.r_max >= 1);
  }

  TEST_CASE("rayleigh constant on the unit square") {
    const SimplicialMesh mesh = mesh_from_boxes({{0, 0, 1, 1}}, 1.0 / 32);
    const PFRayleigh ray = pf_rayleigh(mesh, boundary_edges(mesh));
    // Smallest constrained eigenvalue is pi^2 (eigenfunction cos(pi x) has
    // zero boundary average), so c = 1 / (sqrt(2) pi).
    CHECK(std::abs(ray.constant - 0.225079) < 4e-3);
    CHECK(ray.lambda_min > 0);
  }

  TEST_CASE("rayleigh constant is scale invariant") {
    const SimplicialMesh small = mesh_from_boxes({{0, 0, 1, 1}}, 0.125);
    const SimplicialMesh big = mesh_from_boxes({{0, 0, 2, 2}}, 0.25);
    const double c_small = pf_rayleigh(small, boundary_edges(small)).constant;
    const double c_big = pf_rayleigh(big, boundary_edges(big)).constant;
    CHECK(c_small == doctest::Approx(c_big).epsilon(1e-9));
  }

  TEST_CASE("sawtooth path lengths scale with the tooth count") {
    ExperimentConfig cfg;
    cfg.pf_shapes = "sawtooth";
    const ExperimentReport rep = run_pf(cfg);
    double lo = 1e300, hi = 0;
    for (int ks = 2; ks <= 4; ++ks) {
      const double s = rep.scalars.at("sawtooth.s_max." + std::to_string(ks));
      const double scaled = s / std::ldexp(1.0, ks);
      lo = std::min(lo, scaled);
      hi = std::max(hi, scaled);
    }
    CHECK(hi / lo < 2.0);
  }
}

TEST_SUITE("io") {
  TEST_CASE("fixed formatting") {
    CHECK(fmt_g(0.1) == "0.1");
    CHECK(fmt_g(2.0) == "2");
    CHECK(fmt_g(1.0 / 3) == "0.333333333333");
    CHECK(fmt_g(1.5e-13) == "1.5e-13");
  }

  TEST_CASE("csv bytes are exactly the cells") {
    const std::string path = "/tmp/lodcut_unit_io.csv";
    write_csv(path, {"a", "b"}, {{"1", "0.5"}, {"2", "xy"}});
    CHECK(slurp(path) == "a,b\n1,0.5\n2,xy\n");
    CHECK_THROWS_AS(write_csv(path, {"a", "b"}, {{"1"}}), DimensionMismatch);
  }

  TEST_CASE("matrix market symmetric output keeps the lower triangle") {
    SpMat a(2, 2);
    std::vector<Triplet> trips = {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}};
    a.setFromTriplets(trips.begin(), trips.end());
    const std::string path = "/tmp/lodcut_unit_io.mtx";
    write_matrix_market(path, a, true);
    const std::string body = slurp(path);
    CHECK(body == "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 2\n");
  }
}

TEST_SUITE("config") {
  TEST_CASE("full round trip") {
    const std::string text =
        "# comment\n"
        "experiment = cut_table\n"
        "m = 3\n"
        "n = 6  # trailing comment\n"
        "k = 3\n"
        "L = 4\n"
        "f = xy\n"
        "bc_outer = neumann\n"
        "bc_special = robin:10\n"
        "out = /tmp/somewhere\n"
        "workers = 2\n"
        "include_naive = false\n"
        "assumption = warn\n"
        "tooth_length = 0.125\n"
        "dump_matrices = true\n";
    const ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.experiment == "cut_table");
    REQUIRE(cfg.m_list.size() == 1);
    CHECK(cfg.m_list[0] == 3);
    CHECK(cfg.n == 6);
    CHECK(cfg.k == 3);
    CHECK(cfg.L == 4);
    CHECK(cfg.f == "xy");
    CHECK(cfg.bc_outer == "neumann");
    CHECK(cfg.bc_special == "robin:10");
    CHECK(cfg.out == "/tmp/somewhere");
    CHECK(cfg.workers == 2);
    CHECK(cfg.include_naive == false);
    CHECK(cfg.assumption == "warn");
    CHECK(cfg.tooth_length == doctest::Approx(0.125));
    CHECK(cfg.dump_matrices == true);

    const ExperimentConfig sweep = parse_config_text("experiment = fractal\nm = 1,2,3\n");
    CHECK(sweep.m_list == std::vector<int>{1, 2, 3});
  }

  TEST_CASE("strict parse errors") {
    CHECK_THROWS(parse_config_text("experiment = fractal\nm = 3\nbogus = 1\n"));
    CHECK_THROWS(parse_config_text("experiment = fractal\nm = 3\nm = 4\n"));
    CHECK_THROWS(parse_config_text("experiment = fractal\nm = x\n"));
    CHECK_THROWS(parse_config_text("experiment = fractal\nm = 3\ninclude_naive = maybe\n"));
    CHECK_THROWS(parse_config_text("experiment = fractal\nm = 3\nbc_outer = slippery\n"));
    CHECK_THROWS(parse_config_text("experiment = warp\nm = 3\n"));
    CHECK_THROWS(parse_config_text("experiment = fractal\nm = 3\nf = sin\n"));
    CHECK_THROWS(parse_config_text("m = 3\n"));
    CHECK_THROWS(parse_config_text("experiment = fractal\n"));  // missing m
    CHECK_THROWS(parse_config_text("experiment = fractal\nm = 3\nn 7\n"));
    CHECK_NOTHROW(parse_config_text("experiment = pf\n"));
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("localization layers follow the ceiling rule") {
    CHECK(localization_layers(1, -1) == 2);
    CHECK(localization_layers(2, -1) == 3);
    CHECK(localization_layers(3, -1) == 5);
    CHECK(localization_layers(4, -1) == 6);
    CHECK(localization_layers(5, -1) == 8);
    CHECK(localization_layers(5, 4) == 4);
  }

  TEST_CASE("boundary tags parse") {
    CHECK(parse_bc("dirichlet").is_dirichlet());
    CHECK(parse_bc("neumann").kind == BcTag::Robin);
    CHECK(parse_bc("neumann").kappa == 0.0);
    CHECK(parse_bc("robin:2.5").kappa == doctest::Approx(2.5));
    CHECK_THROWS(parse_bc("free"));
  }

  TEST_CASE("named loads") {
    CHECK(!make_load("one"));
    CHECK(make_load("xy")({2, 3}) == doctest::Approx(6.0));
    CHECK(make_load("zero")({2, 3}) == 0.0);
    CHECK_THROWS(make_load("sin"));
  }

  TEST_CASE("experiments reject a fine lattice at or below the coarse one") {
    ExperimentConfig cfg;
    cfg.experiment = "corner";
    cfg.m_list = {3};
    cfg.n = 3;
    CHECK_THROWS(run_experiment(cfg));
  }
}
