#pragma once
//
// Sound-soft obstacle boundaries: parametric closed curves sampled into
// collocation nodes, plus the interior curve carrying the MFS charges.
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "wgimg/error.hpp"
#include "wgimg/waveguide.hpp"

namespace wgimg {

struct Circle {
  Point center;
  double radius = 0.1;

  friend bool operator==(const Circle&, const Circle&) = default;
};

/// Axis-aligned square. Corners are rounded by the superellipse exponent of
/// ObstacleOptions so the boundary stays analytic.
struct Square {
  Point center;
  double side = 0.02;

  friend bool operator==(const Square&, const Square&) = default;
};

/// Rhombus with diagonals along range and cross-range, corners rounded as for Square.
struct Rhombus {
  Point center;
  double half_diag_x = 0.15;
  double half_diag_xp = 0.1;

  friend bool operator==(const Rhombus&, const Rhombus&) = default;
};

using ShapeSpec = std::variant<Circle, Square, Rhombus>;

struct ObstacleOptions {
  int n_boundary = 192;
  int n_source = 96;
  /// Charge curve offset as a fraction of the obstacle diameter.
  double source_offset = 0.1;
  /// Superellipse exponent used for Square and Rhombus corners (even, >= 2).
  double corner_exponent = 4.0;
  /// Charge offset is capped at this fraction of the local curvature radius (0 disables).
  double curvature_fraction = 0.5;
};

/// Discretization that meets a 1e-6 boundary residual for the shape's
/// default size at up to 50 propagating modes. The rounded rhombus tips are
/// tight, so the rhombus needs a denser grid and charges closer to the boundary.
inline ObstacleOptions default_obstacle_options(const ShapeSpec& s) {
  ObstacleOptions o;
  if (std::holds_alternative<Square>(s)) {
    o.n_boundary = 256;
    o.n_source = 128;
  } else if (std::holds_alternative<Rhombus>(s)) {
    o.n_boundary = 480;
    o.n_source = 240;
    o.source_offset = 0.04;
    o.curvature_fraction = 0.3;
  }
  return o;
}

inline Point shape_center(const ShapeSpec& s) {
  return std::visit([](const auto& v) { return v.center; }, s);
}

inline std::string shape_name(const ShapeSpec& s) {
  struct Namer {
    std::string operator()(const Circle&) const { return "circle"; }
    std::string operator()(const Square&) const { return "square"; }
    std::string operator()(const Rhombus&) const { return "rhombus"; }
  };
  return std::visit(Namer{}, s);
}

namespace detail {

inline double superellipse_radius(double t, double p) {
  return std::pow(std::pow(std::abs(std::cos(t)), p) + std::pow(std::abs(std::sin(t)), p), -1.0 / p);
}

/// Point of the closed curve at parameter t in [0, 2 pi).
inline Point curve_point(const ShapeSpec& shape, double t, double p) {
  struct Eval {
    double t, p;
    Point operator()(const Circle& c) const {
      return {c.center.x + c.radius * std::cos(t), c.center.xp + c.radius * std::sin(t)};
    }
    Point operator()(const Square& s) const {
      const double r = superellipse_radius(t, p) * 0.5 * s.side;
      return {s.center.x + r * std::cos(t), s.center.xp + r * std::sin(t)};
    }
    Point operator()(const Rhombus& s) const {
      // a square in (u, v) = (x/a + xp/b, x/a - xp/b) is the rhombus |x/a| + |xp/b| <= 1
      const double r = superellipse_radius(t, p);
      const double u = r * std::cos(t);
      const double v = r * std::sin(t);
      return {s.center.x + 0.5 * s.half_diag_x * (u + v), s.center.xp + 0.5 * s.half_diag_xp * (u - v)};
    }
  };
  return std::visit(Eval{t, p}, shape);
}

inline double polygon_signed_area(const std::vector<Point>& poly) {
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Point& u = poly[i];
    const Point& v = poly[(i + 1) % n];
    a += u.x * v.xp - v.x * u.xp;
  }
  return 0.5 * a;
}

inline bool point_in_polygon(const std::vector<Point>& poly, const Point& q) {
  bool inside = false;
  for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.xp > q.xp) != (b.xp > q.xp)) {
      const double xc = a.x + (q.xp - a.xp) * (b.x - a.x) / (b.xp - a.xp);
      if (q.x < xc) inside = !inside;
    }
  }
  return inside;
}

inline double segment_distance(const Point& q, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.xp - a.xp;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((q.x - a.x) * dx + (q.xp - a.xp) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(q.x - (a.x + t * dx), q.xp - (a.xp + t * dy));
}

inline double polygon_distance(const std::vector<Point>& poly, const Point& q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) best = std::min(best, segment_distance(q, poly[i], poly[(i + 1) % n]));
  return best;
}

inline bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
  auto orient = [](const Point& p, const Point& q, const Point& r) {
    return (q.x - p.x) * (r.xp - p.xp) - (q.xp - p.xp) * (r.x - p.x);
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

inline bool polygon_is_simple(const std::vector<Point>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

// Dense parameter table for arc-length sampling.
struct ArcTable {
  std::vector<double> t;
  std::vector<double> s;
  double length = 0.0;
};

inline ArcTable arc_table(const ShapeSpec& shape, double p, int n_dense) {
  ArcTable tab;
  tab.t.resize(static_cast<std::size_t>(n_dense + 1));
  tab.s.resize(static_cast<std::size_t>(n_dense + 1));
  Point prev = curve_point(shape, 0.0, p);
  for (int i = 0; i <= n_dense; ++i) {
    const double t = 2.0 * kPi * i / n_dense;
    const Point cur = curve_point(shape, t, p);
    tab.t[static_cast<std::size_t>(i)] = t;
    tab.s[static_cast<std::size_t>(i)] = i == 0 ? 0.0 : tab.s[static_cast<std::size_t>(i - 1)] + distance(prev, cur);
    prev = cur;
  }
  tab.length = tab.s.back();
  return tab;
}

/// Curve parameters of n points equispaced in arc length, starting at t = 0.
inline std::vector<double> equispaced_parameters(const ArcTable& tab, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  std::size_t seg = 0;
  for (int i = 0; i < n; ++i) {
    const double target = tab.length * i / n;
    while (seg + 1 < tab.s.size() && tab.s[seg + 1] < target) ++seg;
    const double s0 = tab.s[seg], s1 = tab.s[std::min(seg + 1, tab.s.size() - 1)];
    const double frac = s1 > s0 ? (target - s0) / (s1 - s0) : 0.0;
    out[static_cast<std::size_t>(i)] = tab.t[seg] + frac * (tab.t[std::min(seg + 1, tab.t.size() - 1)] - tab.t[seg]);
  }
  return out;
}

}  // namespace detail

/// Sampled boundary of one obstacle together with its MFS charge locations.
class ObstacleBoundary {
 public:
  const ShapeSpec& shape() const { return shape_; }
  const std::vector<Point>& boundary_nodes() const { return boundary_; }
  const std::vector<Point>& source_nodes() const { return sources_; }
  double diameter() const { return diameter_; }
  double source_offset() const { return offset_; }
  double corner_exponent() const { return p_; }

  /// Nodes equispaced in arc length with `refinement` times the collocation density.
  std::vector<Point> check_nodes(int refinement) const {
    const auto tab = detail::arc_table(shape_, p_, dense_count(static_cast<int>(boundary_.size()) * refinement));
    std::vector<Point> out;
    for (double t : detail::equispaced_parameters(tab, static_cast<int>(boundary_.size()) * refinement)) {
      out.push_back(detail::curve_point(shape_, t, p_));
    }
    return out;
  }

  /// Point-in-polygon test against the sampled boundary.
  bool inside(const Point& q) const { return detail::point_in_polygon(boundary_, q); }

  double min_x() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : boundary_) m = std::min(m, b.x);
    return m;
  }

 private:
  friend ObstacleBoundary make_obstacle(const ShapeSpec&, const ObstacleOptions&);

  static int dense_count(int n) { return std::max(8192, 16 * n); }

  ShapeSpec shape_;
  std::vector<Point> boundary_;
  std::vector<Point> sources_;
  double diameter_ = 0.0;
  double offset_ = 0.0;
  double p_ = 4.0;
};

inline ObstacleBoundary make_obstacle(const ShapeSpec& shape, const ObstacleOptions& opts = {}) {
  require(opts.n_boundary >= 0 && opts.n_source >= 0, ErrorKind::InvalidArgument, "node counts must be >= 0");
  require(opts.n_source <= opts.n_boundary, ErrorKind::InvalidArgument,
          "collocation must be overdetermined (n_source <= n_boundary)");
  require(opts.corner_exponent >= 2.0, ErrorKind::InvalidArgument, "corner exponent must be >= 2");
  struct Check {
    void operator()(const Circle& c) const {
      require(c.radius > 0, ErrorKind::GeometryError, "circle radius must be positive");
    }
    void operator()(const Square& s) const {
      require(s.side > 0, ErrorKind::GeometryError, "square side must be positive");
    }
    void operator()(const Rhombus& r) const {
      require(r.half_diag_x > 0 && r.half_diag_xp > 0, ErrorKind::GeometryError, "rhombus diagonals must be positive");
    }
  };
  std::visit(Check{}, shape);

  ObstacleBoundary ob;
  ob.shape_ = shape;
  ob.p_ = opts.corner_exponent;
  if (opts.n_boundary == 0) return ob;

  const double p = opts.corner_exponent;
  const auto tab = detail::arc_table(shape, p, ObstacleBoundary::dense_count(opts.n_boundary));
  for (double t : detail::equispaced_parameters(tab, opts.n_boundary)) {
    ob.boundary_.push_back(detail::curve_point(shape, t, p));
  }

  std::vector<Point> dense;
  dense.reserve(tab.t.size());
  for (std::size_t i = 0; i + 1 < tab.t.size(); i += 4) dense.push_back(detail::curve_point(shape, tab.t[i], p));
  double diam = 0.0;
  for (std::size_t i = 0; i < dense.size(); ++i)
    for (std::size_t j = i + 1; j < dense.size(); ++j) diam = std::max(diam, distance(dense[i], dense[j]));
  ob.diameter_ = diam;
  ob.offset_ = opts.source_offset * diam;

  if (opts.n_source == 0) return ob;
  require(opts.source_offset > 0.0, ErrorKind::GeometryError, "source offset must be positive");

  // Inward normal offset, capped at a fraction of the local radius of
  // curvature so the charge curve stays inside tight rounded corners.
  const double orientation = detail::polygon_signed_area(ob.boundary_) > 0 ? 1.0 : -1.0;
  const double h = 1e-4;
  std::vector<double> offsets;
  for (double t : detail::equispaced_parameters(tab, opts.n_source)) {
    const Point a = detail::curve_point(shape, t - h, p);
    const Point c = detail::curve_point(shape, t, p);
    const Point b = detail::curve_point(shape, t + h, p);
    const double dx = (b.x - a.x) / (2 * h), dy = (b.xp - a.xp) / (2 * h);
    const double ddx = (b.x - 2 * c.x + a.x) / (h * h), ddy = (b.xp - 2 * c.xp + a.xp) / (h * h);
    const double speed = std::hypot(dx, dy);
    const double curvature = std::abs(dx * ddy - dy * ddx) / (speed * speed * speed);
    double off = ob.offset_;
    if (opts.curvature_fraction > 0 && curvature > 0) off = std::min(off, opts.curvature_fraction / curvature);
    // outward normal of a counter-clockwise curve is the tangent rotated clockwise
    const double nx = orientation * dy / speed, ny = -orientation * dx / speed;
    ob.sources_.push_back({c.x - off * nx, c.xp - off * ny});
    offsets.push_back(off);
  }

  if (!detail::polygon_is_simple(ob.sources_)) {
    fail(ErrorKind::GeometryError, "charge curve self-intersects; reduce source_offset");
  }
  for (std::size_t i = 0; i < ob.sources_.size(); ++i) {
    const Point& s = ob.sources_[i];
    if (!ob.inside(s) || detail::polygon_distance(dense, s) < 0.9 * offsets[i]) {
      fail(ErrorKind::GeometryError, "charge curve leaves the obstacle or comes too close to its boundary");
    }
  }
  return ob;
}

/// Obstacles must lie strictly inside the waveguide, strictly right of the
/// array range and be mutually disjoint.
inline void validate_obstacles(const std::vector<ObstacleBoundary>& obstacles, double width, double x_A) {
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    for (const auto& b : obstacles[i].boundary_nodes()) {
      if (!(b.x < 0.0 && b.x > x_A && b.xp > 0.0 && b.xp < width)) {
        fail(ErrorKind::GeometryError, "obstacle " + std::to_string(i) +
                                           " must lie strictly inside the waveguide, right of the array");
      }
    }
    for (std::size_t j = 0; j < obstacles.size(); ++j) {
      if (i == j) continue;
      for (const auto& b : obstacles[i].boundary_nodes()) {
        if (obstacles[j].inside(b)) {
          fail(ErrorKind::GeometryError, "obstacles " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
        }
      }
    }
  }
}

/// Centroid of the union of obstacle interiors, by area-weighted polygon centroids.
inline Point obstacles_centroid(const std::vector<ObstacleBoundary>& obstacles) {
  double area = 0.0, cx = 0.0, cy = 0.0;
  for (const auto& ob : obstacles) {
    const auto& poly = ob.boundary_nodes();
    double a = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
      const Point& u = poly[i];
      const Point& v = poly[(i + 1) % n];
      const double cr = u.x * v.xp - v.x * u.xp;
      a += 0.5 * cr;
      sx += (u.x + v.x) * cr / 6.0;
      sy += (u.xp + v.xp) * cr / 6.0;
    }
    const double sign = a < 0 ? -1.0 : 1.0;  // orientation differs between shapes
    area += sign * a;
    cx += sign * sx;
    cy += sign * sy;
  }
  if (area == 0.0) return {};
  return {cx / area, cy / area};
}

}  // namespace wgimg
