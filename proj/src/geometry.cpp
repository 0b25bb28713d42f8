#include "lodcut/geometry.hpp"

#include <cmath>

namespace lodcut {

namespace {

constexpr double kEps = 1e-9;

bool on_lattice(double v, double h) {
  const double w = v / h;
  return std::abs(w - std::round(w)) <= 1e-9 * std::max(1.0, std::abs(w));
}

void require_lattice(double v, double h, const char* what) {
  if (!on_lattice(v, h))
    throw ResolutionError(std::string("fine spacing does not resolve ") + what);
}

bool near(double a, double b) { return std::abs(a - b) <= kEps; }

// The six boundary faces of the plain L-shape [0,1]^2 minus [0.5,1]x[0,0.5).
std::vector<Segment> lshape_segments() {
  return {
      {{0.0, 0.0}, {0.5, 0.0}},  // bottom
      {{0.0, 0.0}, {0.0, 1.0}},  // left
      {{0.0, 1.0}, {1.0, 1.0}},  // top
      {{1.0, 0.5}, {1.0, 1.0}},  // right (upper arm)
      {{0.5, 0.0}, {0.5, 0.5}},  // re-entrant vertical
      {{0.5, 0.5}, {1.0, 0.5}},  // re-entrant horizontal
  };
}

std::vector<Box> lshape_boxes() {
  return {{0.0, 0.0, 0.5, 1.0}, {0.5, 0.5, 1.0, 1.0}};
}

// Fractal tree: each square spawns three half-size children on the sides
// away from its parent. Directions 0=N, 1=E, 2=S, 3=W (clockwise).
struct FractalSquare {
  double x, y, s;
  int dir;
};

Box place_child(const FractalSquare& p, int dd, int* out_dir) {
  const double s2 = p.s / 2;
  *out_dir = dd;
  switch (dd) {
    case 0: return {p.x + p.s / 4, p.y + p.s, p.x + p.s / 4 + s2, p.y + p.s + s2};
    case 1: return {p.x + p.s, p.y + p.s / 4, p.x + p.s + s2, p.y + p.s / 4 + s2};
    case 2: return {p.x + p.s / 4, p.y - s2, p.x + p.s / 4 + s2, p.y};
    default: return {p.x - s2, p.y + p.s / 4, p.x, p.y + p.s / 4 + s2};
  }
}

std::vector<Box> fractal_boxes(int levels) {
  std::vector<FractalSquare> frontier = {{0.0, 0.0, 1.0, 0}};
  std::vector<Box> out = {{0.0, 0.0, 1.0, 1.0}};
  for (int lvl = 0; lvl < levels; ++lvl) {
    std::vector<FractalSquare> next;
    next.reserve(frontier.size() * 3);
    for (const FractalSquare& sq : frontier) {
      const int dirs[3] = {(sq.dir + 3) % 4, sq.dir, (sq.dir + 1) % 4};
      for (int dd : dirs) {
        int child_dir = 0;
        const Box b = place_child(sq, dd, &child_dir);
        out.push_back(b);
        next.push_back({b.x0, b.y0, b.width(), child_dir});
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

bool Segment::carries(Vec2 p, Vec2 q, double eps) const {
  if (near(a.x, b.x)) {  // vertical
    const double lo = std::min(a.y, b.y) - eps, hi = std::max(a.y, b.y) + eps;
    return std::abs(p.x - a.x) <= eps && std::abs(q.x - a.x) <= eps &&
           p.y >= lo && p.y <= hi && q.y >= lo && q.y <= hi;
  }
  const double lo = std::min(a.x, b.x) - eps, hi = std::max(a.x, b.x) + eps;
  return std::abs(p.y - a.y) <= eps && std::abs(q.y - a.y) <= eps &&
         p.x >= lo && p.x <= hi && q.x >= lo && q.x <= hi;
}

bool DomainShape::inside_raw(Vec2 p) const {
  bool in = false;
  for (const Box& b : boxes) {
    if (b.contains(p)) {
      in = true;
      break;
    }
  }
  if (!in) return false;
  if (removed) {
    const Vec2 d = p - removed->c;
    if (d.dot(d) < removed->r * removed->r) return false;
  }
  return true;
}

BoundaryPart DomainShape::boundary_part(Vec2 a, Vec2 b) const {
  switch (kind) {
    case ShapeKind::UnitSquare:
      // The bottom face is the designated special part; by default it carries
      // the same tag as the rest, so plain Poisson runs are unaffected.
      return (near(a.y, 0.0) && near(b.y, 0.0)) ? BoundaryPart::Special : BoundaryPart::Outer;
    case ShapeKind::LShape:
    case ShapeKind::Slit:
      return BoundaryPart::Outer;
    case ShapeKind::Fractal:
    case ShapeKind::CutLShape:
      for (const Segment& s : outer_segments)
        if (s.carries(a, b)) return BoundaryPart::Outer;
      return BoundaryPart::Special;
    case ShapeKind::SawTooth: {
      if (near(a.y, 0.0) && near(b.y, 0.0)) return BoundaryPart::Outer;
      if (near(a.y, 1.0) && near(b.y, 1.0)) return BoundaryPart::Outer;
      const double body_right = 1.0 - params.tooth_length;
      return (std::min(a.x, b.x) >= body_right - kEps) ? BoundaryPart::Special
                                                       : BoundaryPart::Outer;
    }
  }
  return BoundaryPart::Outer;
}

DomainShape build_shape(ShapeKind kind, const ShapeParams& params, double h) {
  if (h <= 0) throw ResolutionError("fine spacing must be positive");
  require_lattice(1.0, h, "the unit length");

  DomainShape s;
  s.kind = kind;
  s.params = params;
  s.bounding = {0.0, 0.0, 1.0, 1.0};

  switch (kind) {
    case ShapeKind::UnitSquare:
      s.boxes = {{0.0, 0.0, 1.0, 1.0}};
      break;

    case ShapeKind::LShape:
      require_lattice(0.5, h, "the re-entrant corner");
      s.boxes = lshape_boxes();
      break;

    case ShapeKind::Slit: {
      require_lattice(0.5, h, "the slit mouth");
      double w = params.slit_width > 0 ? params.slit_width : h;
      require_lattice(w, h, "the slit width");
      if (w < h - kEps || w > 0.25)
        throw ResolutionError("slit width must lie in [h, 0.25]");
      s.params.slit_width = w;
      s.boxes = {{0.0, 0.0, 0.5, 1.0}, {0.5 + w, 0.0, 1.0, 1.0}, {0.5, 0.5, 0.5 + w, 1.0}};
      break;
    }

    case ShapeKind::Fractal: {
      if (params.fractal_levels < 0) throw ResolutionError("fractal levels must be >= 0");
      const double finest = std::ldexp(1.0, -(params.fractal_levels + 1));
      require_lattice(finest, h, "the finest fractal square");
      s.boxes = fractal_boxes(params.fractal_levels);
      s.bounding = {-1.0, -1.0, 2.0, 2.0};
      s.outer_segments = {{{0.0, 0.0}, {1.0, 0.0}},
                          {{0.0, 0.0}, {0.0, 1.0}},
                          {{1.0, 0.0}, {1.0, 1.0}}};
      break;
    }

    case ShapeKind::SawTooth: {
      if (params.teeth_exponent < 1) throw ResolutionError("teeth exponent must be >= 1");
      const double tl = params.tooth_length;
      if (tl <= 0 || tl >= 1) throw ResolutionError("tooth length must lie in (0, 1)");
      const double eta = std::ldexp(1.0, -params.teeth_exponent);
      require_lattice(eta, h, "the tooth height");
      require_lattice(tl, h, "the tooth length");
      s.boxes = {{0.0, 0.0, 1.0 - tl, 1.0}};
      const int rows = 1 << params.teeth_exponent;
      for (int j = 0; j < rows; j += 2)
        s.boxes.push_back({1.0 - tl, j * eta, 1.0, (j + 1) * eta});
      break;
    }

    case ShapeKind::CutLShape: {
      require_lattice(0.5, h, "the re-entrant corner");
      const double r = params.cut.r;
      require_lattice(r, h, "the cut radius");
      if (r < h - kEps) throw ResolutionError("cut radius must be >= h");
      s.outer_segments = lshape_segments();
      if (params.cut.kind == CutKind::Horizontal) {
        if (r > 0.5 - h + kEps)
          throw ResolutionError("straight cut must leave part of the upper arm");
        s.boxes = {{0.0, 0.0, 0.5, 1.0}, {0.5, 0.5, 1.0 - r, 1.0}};
      } else {
        if (r >= 0.5) throw ResolutionError("circular cut must stay inside the domain");
        s.boxes = lshape_boxes();
        s.removed = Ball{{0.5, 0.5}, r};
      }
      break;
    }
  }
  return s;
}

}  // namespace lodcut
