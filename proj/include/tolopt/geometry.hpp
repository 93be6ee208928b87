#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tolopt {

using Point = Eigen::Vector2d;

/// Closed blade curve sampled at ordered points, counterclockwise from the trailing edge.
///
/// Arc-length coordinate: s is normalized by half the perimeter, s = 0 at the leading edge,
/// s < 0 on the side traversed first (the pressure side) and s > 0 on the suction side. The
/// trailing-edge seam sits at both ends of [s_min, s_min + 2]. Quadrature weights are in
/// physical arc length and sum to the perimeter.
struct BladeSurface
{
  std::vector<Point> points;
  std::vector<Point> normals;   ///< unit outward normals
  Eigen::VectorXd s;
  Eigen::VectorXd quad_weights;
  std::size_t le_index = 0;
  double perimeter = 0.0;

  std::size_t size() const { return points.size(); }
  double s_min() const { return s[0]; }
  double s_max() const { return s[0] + 2.0; }
  const Point& leading_edge() const { return points[le_index]; }
  const Point& trailing_edge() const { return points.front(); }
};

/// Nominal-geometry design variables: five Chebyshev camber amplitudes (chord units) and a
/// stagger rotation about the leading edge (radians).
struct DesignVector
{
  static constexpr int n_chebyshev = 5;
  static constexpr int size = n_chebyshev + 1;

  std::array<double, n_chebyshev> chebyshev{};
  double stagger = 0.0;

  Eigen::VectorXd to_vector() const;
  static DesignVector from_vector(const Eigen::VectorXd& v);
};

/// Builds a surface from raw points: arc length, central-difference normals, leading edge at the
/// point farthest from the trailing-edge point (points[0]), periodic trapezoid weights.
BladeSurface parameterize(const std::vector<Point>& points);

/// Same as parameterize but with the leading-edge index imposed (used after design changes so the
/// coordinate system moves smoothly with the design).
BladeSurface parameterize(const std::vector<Point>& points, std::size_t le_index);

/// Reads "x y" lines, '#' comments ignored.
std::vector<Point> read_blade_points(const std::string& path);
std::vector<Point> read_blade_points(std::istream& in);

/// True if any two non-adjacent segments of the closed polyline intersect.
bool self_intersects(const std::vector<Point>& points);

/// Chordwise coordinate t in [0,1]: projection on the leading-edge to trailing-edge segment.
Eigen::VectorXd chordwise_coordinate(const BladeSurface& surface);

/// Unit normal to the chord line pointing to the suction side.
Point chord_normal(const BladeSurface& surface);

/// Camber modes T_k(2t - 1) displace every point along the chord normal, so paired
/// pressure/suction points receive equal and opposite normal-direction offsets and thickness is
/// kept; the stagger angle then rotates the blade about its leading edge.
BladeSurface apply_design(const BladeSurface& base, const DesignVector& d);

/// x_m = x_d + e n. Coordinates, normals and weights of the nominal surface are kept.
BladeSurface apply_error(const BladeSurface& nominal, const Eigen::VectorXd& e, double sanity_bound = 0.05);

/// Reference frame for the asymmetry metric: the chord line through `origin` with unit `normal`
/// pointing to the suction side.
struct ChordFrame
{
  Point origin;
  Point normal;
};

/// Weighted leading-edge averages. Node weights are smooth_taper(|s|, window / 2, 3 window / 2), so
/// the metrics stay smooth when a design change slides nodes along s.
struct LeShapeMetrics
{
  double kappa_le = 0.0; ///< weighted mean three-point curvature
  double asym = 0.0;     ///< suction minus pressure weighted mean offset from the chord line
};

/// 1 for x <= a, 0 for x >= b, quintic (C2) blend in between.
double smooth_taper(double x, double a, double b);

/// Leading-edge metrics of `surface`. The chord frame defaults to the surface's own chord line.
LeShapeMetrics le_shape_metrics(const BladeSurface& surface, double window,
                                const std::optional<ChordFrame>& frame = std::nullopt);

/// Metrics of nominal + e n evaluated without materializing the realized surface.
LeShapeMetrics le_shape_metrics(const BladeSurface& nominal, const Eigen::VectorXd& e, double window,
                                const ChordFrame& frame);

ChordFrame chord_frame(const BladeSurface& surface);

/// Signed curvature of the circle through three points (positive for a counterclockwise turn).
double three_point_curvature(const Point& a, const Point& b, const Point& c);

} // namespace tolopt
