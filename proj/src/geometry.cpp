#include "tolopt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tolopt/error.hpp"

namespace tolopt {

Eigen::VectorXd DesignVector::to_vector() const
{
  Eigen::VectorXd v(size);
  for (int k = 0; k < n_chebyshev; ++k)
    v[k] = chebyshev[static_cast<std::size_t>(k)];
  v[n_chebyshev] = stagger;
  return v;
}

DesignVector DesignVector::from_vector(const Eigen::VectorXd& v)
{
  if (v.size() != size)
    throw std::invalid_argument("design vector must have 6 entries");
  DesignVector d;
  for (int k = 0; k < n_chebyshev; ++k)
    d.chebyshev[static_cast<std::size_t>(k)] = v[k];
  d.stagger = v[n_chebyshev];
  return d;
}

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2)
{
  auto orient = [](const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); };
  auto on_segment = [](const Point& a, const Point& b, const Point& c) {
    return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= c.y() && c.y() <= std::max(a.y(), b.y());
  };
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

double signed_area(const std::vector<Point>& pts)
{
  double a = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j)
    a += cross(pts[j], pts[(j + 1) % pts.size()]);
  return 0.5 * a;
}

} // namespace

bool self_intersects(const std::vector<Point>& pts)
{
  const std::size_t m = pts.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point& a = pts[i];
    const Point& b = pts[(i + 1) % m];
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1)
        continue; // adjacent through the closure
      if (segments_intersect(a, b, pts[j], pts[(j + 1) % m]))
        return true;
    }
  }
  return false;
}

BladeSurface parameterize(const std::vector<Point>& points, std::size_t le_index)
{
  const std::size_t m = points.size();
  if (m < 32)
    throw config_error("blade needs at least 32 points, got " + std::to_string(m));
  if (le_index == 0 || le_index >= m)
    throw std::invalid_argument("leading-edge index must lie strictly inside the point list");

  BladeSurface out;
  out.points = points;
  out.le_index = le_index;

  std::vector<double> seg(m);
  for (std::size_t j = 0; j < m; ++j) {
    seg[j] = (points[(j + 1) % m] - points[j]).norm();
    if (!(seg[j] > 0.0))
      throw config_error("duplicate consecutive blade points at index " + std::to_string(j));
    if (!std::isfinite(seg[j]))
      throw config_error("non-finite blade coordinates");
  }
  if (signed_area(points) <= 0.0)
    throw config_error("blade points must be ordered counterclockwise");

  double perimeter = 0.0;
  std::vector<double> arc(m);
  for (std::size_t j = 0; j < m; ++j) {
    arc[j] = perimeter;
    perimeter += seg[j];
  }
  out.perimeter = perimeter;

  const double half = 0.5 * perimeter;
  out.s.resize(static_cast<Eigen::Index>(m));
  out.quad_weights.resize(static_cast<Eigen::Index>(m));
  out.normals.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out.s[jj] = (arc[j] - arc[le_index]) / half;
    out.quad_weights[jj] = 0.5 * (seg[j] + seg[(j + m - 1) % m]);
    const Point tangent = points[(j + 1) % m] - points[(j + m - 1) % m];
    out.normals[j] = Point(tangent.y(), -tangent.x()).normalized();
  }
  return out;
}

BladeSurface parameterize(const std::vector<Point>& points)
{
  if (points.size() < 32)
    throw config_error("blade needs at least 32 points, got " + std::to_string(points.size()));
  if (self_intersects(points))
    throw config_error("blade polyline self-intersects");
  std::size_t le = 1;
  double best = -1.0;
  for (std::size_t j = 1; j < points.size(); ++j) {
    const double dist = (points[j] - points[0]).norm();
    if (dist > best) {
      best = dist;
      le = j;
    }
  }
  return parameterize(points, le);
}

std::vector<Point> read_blade_points(std::istream& in)
{
  std::vector<Point> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream ss(line);
    double x = 0.0, y = 0.0;
    if (!(ss >> x >> y))
      throw config_error("malformed blade line " + std::to_string(lineno) + ": '" + line + "'");
    pts.emplace_back(x, y);
  }
  return pts;
}

std::vector<Point> read_blade_points(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw config_error("cannot open blade file: " + path);
  return read_blade_points(in);
}

Eigen::VectorXd chordwise_coordinate(const BladeSurface& surface)
{
  const Point le = surface.leading_edge();
  const Point chord = surface.trailing_edge() - le;
  const double len2 = chord.squaredNorm();
  Eigen::VectorXd t(static_cast<Eigen::Index>(surface.size()));
  for (std::size_t j = 0; j < surface.size(); ++j)
    t[static_cast<Eigen::Index>(j)] = (surface.points[j] - le).dot(chord) / len2;
  return t;
}

Point chord_normal(const BladeSurface& surface)
{
  // pressure side is traversed first (counterclockwise), i.e. it lies to the left of LE->TE
  const Point c = (surface.trailing_edge() - surface.leading_edge()).normalized();
  return {c.y(), -c.x()};
}

ChordFrame chord_frame(const BladeSurface& surface)
{
  return {surface.leading_edge(), chord_normal(surface)};
}

BladeSurface apply_design(const BladeSurface& base, const DesignVector& d)
{
  for (double a : d.chebyshev)
    if (!std::isfinite(a))
      throw std::invalid_argument("non-finite design amplitude");
  if (!std::isfinite(d.stagger))
    throw std::invalid_argument("non-finite stagger");

  const Eigen::VectorXd t = chordwise_coordinate(base);
  const Point n = chord_normal(base);
  std::vector<Point> pts = base.points;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double x = 2.0 * std::clamp(t[static_cast<Eigen::Index>(j)], 0.0, 1.0) - 1.0;
    // Chebyshev recurrence T_0..T_4 at x
    double tkm1 = 1.0, tk = x, offset = d.chebyshev[0];
    offset += d.chebyshev[1] * x;
    for (int k = 2; k < DesignVector::n_chebyshev; ++k) {
      const double next = 2.0 * x * tk - tkm1;
      tkm1 = tk;
      tk = next;
      offset += d.chebyshev[static_cast<std::size_t>(k)] * tk;
    }
    pts[j] += offset * n;
  }

  if (d.stagger != 0.0) {
    const Point pivot = pts[base.le_index];
    const double c = std::cos(d.stagger), s = std::sin(d.stagger);
    for (Point& p : pts) {
      const Point r = p - pivot;
      p = pivot + Point(c * r.x() - s * r.y(), s * r.x() + c * r.y());
    }
  }

  if (self_intersects(pts))
    throw numerical_error("design perturbation makes the blade self-intersect");
  return parameterize(pts, base.le_index);
}

BladeSurface apply_error(const BladeSurface& nominal, const Eigen::VectorXd& e, double sanity_bound)
{
  if (static_cast<std::size_t>(e.size()) != nominal.size())
    throw std::invalid_argument("error field length does not match the surface");
  const double emax = e.cwiseAbs().maxCoeff();
  if (!(emax <= sanity_bound))
    throw numerical_error("error field magnitude " + std::to_string(emax) + " exceeds sanity bound");
  BladeSurface out = nominal;
  for (std::size_t j = 0; j < out.size(); ++j)
    out.points[j] += e[static_cast<Eigen::Index>(j)] * nominal.normals[j];
  return out;
}

double three_point_curvature(const Point& a, const Point& b, const Point& c)
{
  const Point u = b - a, v = c - b, w = c - a;
  return 2.0 * cross(u, v) / (u.norm() * v.norm() * w.norm());
}

namespace {

template <typename PointAt>
LeShapeMetrics le_metrics_impl(const BladeSurface& grid, double window, const ChordFrame& frame, PointAt point)
{
  const std::size_t m = grid.size();
  const double inner = 0.5 * window, outer = 1.5 * window;
  double ksum = 0.0, wsum = 0.0, suction = 0.0, ws = 0.0, pressure = 0.0, wp = 0.0;
  std::size_t count = 0;
  // walk outward from the leading edge; the weights vanish smoothly beyond 1.5 window
  auto visit = [&](std::size_t j) {
    const double sj = grid.s[static_cast<Eigen::Index>(j)];
    const double wt = smooth_taper(std::abs(sj), inner, outer);
    const Point pj = point(j);
    ksum += wt * three_point_curvature(point((j + m - 1) % m), pj, point((j + 1) % m));
    wsum += wt;
    ++count;
    const double h = (pj - frame.origin).dot(frame.normal);
    if (sj > 0.0) {
      suction += wt * h;
      ws += wt;
    } else if (sj < 0.0) {
      pressure += wt * h;
      wp += wt;
    }
  };
  visit(grid.le_index);
  for (std::size_t j = grid.le_index + 1; j < m && grid.s[static_cast<Eigen::Index>(j)] < outer; ++j)
    visit(j);
  for (std::size_t j = grid.le_index; j-- > 0 && grid.s[static_cast<Eigen::Index>(j)] > -outer;)
    visit(j);

  if (count < 3 || !(ws > 0.0) || !(wp > 0.0))
    throw std::invalid_argument("leading-edge window holds fewer than 3 points");
  LeShapeMetrics out;
  out.kappa_le = ksum / wsum;
  // pressure-side offsets are negative along the suction-pointing normal
  out.asym = suction / ws + pressure / wp;
  if (!std::isfinite(out.kappa_le) || !std::isfinite(out.asym))
    throw numerical_error("non-finite leading-edge metrics");
  return out;
}

} // namespace

double smooth_taper(double x, double a, double b)
{
  if (x <= a)
    return 1.0;
  if (x >= b)
    return 0.0;
  const double t = (x - a) / (b - a);
  return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

LeShapeMetrics le_shape_metrics(const BladeSurface& surface, double window, const std::optional<ChordFrame>& frame)
{
  const ChordFrame f = frame ? *frame : chord_frame(surface);
  return le_metrics_impl(surface, window, f, [&](std::size_t j) -> Point { return surface.points[j]; });
}

LeShapeMetrics le_shape_metrics(const BladeSurface& nominal, const Eigen::VectorXd& e, double window,
                                const ChordFrame& frame)
{
  return le_metrics_impl(nominal, window, frame, [&](std::size_t j) -> Point {
    return nominal.points[j] + e[static_cast<Eigen::Index>(j)] * nominal.normals[j];
  });
}

} // namespace tolopt
