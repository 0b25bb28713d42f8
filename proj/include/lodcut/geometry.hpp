#pragma once

// Domain shapes. A shape is a union of axis-aligned boxes, optionally minus
// one open ball, together with a rule that splits its boundary into an
// "outer" part and a "special" part (saw teeth, fractal arms, cut faces).
// Everything mesh-related (rasterization, cell classification) lives in
// mesh.hpp; this layer only answers point and segment queries.

#include "lodcut/common.hpp"

#include <optional>
#include <vector>

namespace lodcut {

enum class ShapeKind { UnitSquare, LShape, Slit, Fractal, SawTooth, CutLShape };

enum class CutKind { Horizontal, Circular };

struct CutSpec {
  CutKind kind = CutKind::Horizontal;
  double r = 0.0;  // Horizontal: clip to x <= 1-r. Circular: remove ball of radius r.
};

struct BcTag {
  enum Kind { Dirichlet, Robin } kind = Dirichlet;
  double kappa = 0.0;  // Robin weight; kappa == 0 is a pure Neumann face.

  static BcTag dirichlet() { return {}; }
  static BcTag robin(double kappa) { return {Robin, kappa}; }
  static BcTag neumann() { return {Robin, 0.0}; }
  bool is_dirichlet() const { return kind == Dirichlet; }
};

enum class BoundaryPart { Outer, Special };

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(Vec2 p, double eps = 1e-12) const {
    return p.x >= x0 - eps && p.x <= x1 + eps && p.y >= y0 - eps && p.y <= y1 + eps;
  }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double diagonal() const { return std::sqrt(width() * width() + height() * height()); }
};

struct Ball {
  Vec2 c;
  double r = 0;
};

// Axis-aligned boundary segment, used to classify edges into parts.
struct Segment {
  Vec2 a, b;

  bool carries(Vec2 p, Vec2 q, double eps = 1e-9) const;
};

struct ShapeParams {
  int fractal_levels = 0;      // Fractal
  int teeth_exponent = 0;      // SawTooth: 2^k teeth rows
  double tooth_length = 0.25;  // SawTooth
  CutSpec cut;                 // CutLShape
  double slit_width = 0.0;     // Slit; 0 means "one fine cell", filled at build time
};

struct DomainShape {
  ShapeKind kind = ShapeKind::UnitSquare;
  ShapeParams params;
  std::vector<Box> boxes;       // union of closed boxes
  std::optional<Ball> removed;  // subtracted open ball (rasterized by the mesh)
  Box bounding;                 // background box containing the shape

  // Boundary condition assignment; experiments override these.
  BcTag outer_bc = BcTag::dirichlet();
  BcTag special_bc = BcTag::dirichlet();

  // Membership test for points away from box edges and the ball circle
  // (barycenters and quarter-offset points by construction never land there).
  bool inside_raw(Vec2 p) const;

  // Classifies a boundary edge given its endpoints.
  BoundaryPart boundary_part(Vec2 a, Vec2 b) const;

  BcTag tag(Vec2 a, Vec2 b) const {
    return boundary_part(a, b) == BoundaryPart::Outer ? outer_bc : special_bc;
  }

  bool any_dirichlet() const { return outer_bc.is_dirichlet() || special_bc.is_dirichlet(); }

 private:
  friend DomainShape build_shape(ShapeKind, const ShapeParams&, double);
  std::vector<Segment> outer_segments;  // Fractal, CutLShape
};

// Builds a shape and validates that all construction lengths sit on the fine
// lattice of spacing h (throws ResolutionError otherwise).
DomainShape build_shape(ShapeKind kind, const ShapeParams& params, double h);

}  // namespace lodcut
