#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tolopt/geometry.hpp"

namespace tolopt::test {

inline std::string data_path(const std::string& name) { return std::string(TOLOPT_DATA_DIR) + "/" + name; }

/// Counterclockwise circle starting at angle 0 (the "trailing edge" is the point (r, 0)).
inline std::vector<Point> circle(std::size_t n, double r = 1.0, Point c = Point(0, 0))
{
  std::vector<Point> p;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    p.push_back(c + r * Point(std::cos(t), std::sin(t)));
  }
  return p;
}

/// NACA-style section on cosine-spaced x, counterclockwise from the trailing edge. Upper and
/// lower points share x, so with camber = 0 the sides mirror each other about y = 0. A closed
/// trailing edge puts point 0 on the chord line.
inline std::vector<Point> naca(int half = 100, double thickness = 0.10, double camber = 0.0, bool closed_te = false)
{
  const double c4 = closed_te ? -0.1015 : -0.1036;
  std::vector<double> x(static_cast<std::size_t>(half) + 1);
  for (int k = 0; k <= half; ++k)
    x[static_cast<std::size_t>(k)] = 0.5 * (1.0 - std::cos(std::numbers::pi * k / half));
  auto yt = [&](double xx) {
    return 5.0 * thickness *
           (0.2969 * std::sqrt(xx) - 0.1260 * xx - 0.3516 * xx * xx + 0.2843 * xx * xx * xx + c4 * xx * xx * xx * xx);
  };
  auto yc = [&](double xx) { return 4.0 * camber * xx * (1.0 - xx); };
  std::vector<Point> p;
  for (int k = half; k >= 0; --k) {
    const double xx = x[static_cast<std::size_t>(k)];
    p.emplace_back(xx, yc(xx) + yt(xx));
  }
  for (int k = 1; k < half; ++k) {
    const double xx = x[static_cast<std::size_t>(k)];
    p.emplace_back(xx, yc(xx) - yt(xx));
  }
  if (closed_te)
    p.front().y() = 0.0;
  return p;
}

/// max |a - b| / max(|a|, |b|) over entries with max(|a|, |b|) > floor.
template <typename V>
double max_rel_error(const V& a, const V& b, double floor = 0.0)
{
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (scale > floor)
      worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

} // namespace tolopt::test
