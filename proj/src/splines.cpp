#include "tolopt/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tolopt {

KnotVector::KnotVector(std::vector<double> knots) : knots_(std::move(knots))
{
  if (knots_.size() < 2 * (degree + 1))
    throw std::invalid_argument("knot vector needs at least 8 knots for a clamped cubic");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw std::invalid_argument("knot vector must be nondecreasing");
  for (int k = 1; k <= degree; ++k) {
    if (knots_[k] != knots_.front() || knots_[knots_.size() - 1 - k] != knots_.back())
      throw std::invalid_argument("knot vector must be clamped (end knots repeated degree+1 times)");
  }
  if (!(knots_.front() < knots_.back()))
    throw std::invalid_argument("degenerate knot domain");
}

std::vector<double> KnotVector::interior() const
{
  return {knots_.begin() + degree + 1, knots_.end() - degree - 1};
}

std::size_t KnotVector::span(double s) const
{
  if (s < lo() || s > hi())
    throw std::out_of_range("s = " + std::to_string(s) + " outside spline domain");
  const std::size_t n = n_basis();
  if (s >= knots_[n])
    return n - 1;
  // last k with t_k <= s, restricted to [degree, n-1]
  auto it = std::upper_bound(knots_.begin() + degree, knots_.begin() + n, s);
  return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

KnotVector make_knots(double s_min, double s_max, std::size_t n_basis, const KnotRefinement& refinement)
{
  if (!(s_min < s_max))
    throw std::invalid_argument("degenerate knot domain: s_min >= s_max");
  if (n_basis < 4)
    throw std::invalid_argument("n_basis must be at least 4 for a cubic basis");
  if (!(refinement.radius > 0.0) || !(refinement.density_ratio >= 1.0))
    throw std::invalid_argument("refinement needs radius > 0 and density_ratio >= 1");
  if (refinement.center < s_min || refinement.center > s_max)
    throw std::invalid_argument("refinement center outside the domain");

  const std::size_t n_int = n_basis - 4;
  if (n_int == 0 && refinement.density_ratio > 1.0)
    throw std::invalid_argument("n_basis too small for requested refinement (no interior knots)");

  // piecewise-constant density: breakpoints of the refined window clipped to the domain
  const double a = std::max(s_min, refinement.center - refinement.radius);
  const double b = std::min(s_max, refinement.center + refinement.radius);
  const double r = refinement.density_ratio;
  const double mass_left = a - s_min;
  const double mass_mid = r * (b - a);
  const double total = mass_left + mass_mid + (s_max - b);

  auto invert = [&](double m) {
    if (m <= mass_left)
      return s_min + m;
    if (m <= mass_left + mass_mid)
      return a + (m - mass_left) / r;
    return b + (m - mass_left - mass_mid);
  };

  std::vector<double> knots(4, s_min);
  for (std::size_t k = 1; k <= n_int; ++k)
    knots.push_back(invert(total * static_cast<double>(k) / static_cast<double>(n_int + 1)));
  knots.insert(knots.end(), 4, s_max);
  return KnotVector(std::move(knots));
}

namespace {

double cox_de_boor(const std::vector<double>& t, std::size_t i, int p, double s, std::size_t span)
{
  if (p == 0)
    return i == span ? 1.0 : 0.0;
  double value = 0.0;
  const double left_den = t[i + p] - t[i];
  if (left_den > 0.0)
    value += (s - t[i]) / left_den * cox_de_boor(t, i, p - 1, s, span);
  const double right_den = t[i + p + 1] - t[i + 1];
  if (right_den > 0.0)
    value += (t[i + p + 1] - s) / right_den * cox_de_boor(t, i + 1, p - 1, s, span);
  return value;
}

} // namespace

double basis_value(const KnotVector& kv, std::size_t i, double s)
{
  if (i >= kv.n_basis())
    throw std::out_of_range("basis index out of range");
  const std::size_t span = kv.span(s);
  if (i + KnotVector::degree < span || i > span)
    return 0.0;
  return cox_de_boor(kv.knots(), i, KnotVector::degree, s, span);
}

LocalBasis local_basis(const KnotVector& kv, double s)
{
  constexpr int p = KnotVector::degree;
  const auto& t = kv.knots();
  const std::size_t k = kv.span(s);

  // triangular evaluation of the p+1 nonzero functions on span k
  std::array<double, p + 1> left{}, right{};
  LocalBasis out;
  out.first = k - p;
  out.values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = s - t[k + 1 - j];
    right[j] = t[k + j] - s;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out.values[r] / (right[r + 1] + left[j - r]);
      out.values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out.values[j] = saved;
  }
  return out;
}

double eval_spline(const Eigen::VectorXd& coeffs, const KnotVector& kv, double s)
{
  if (static_cast<std::size_t>(coeffs.size()) != kv.n_basis())
    throw std::invalid_argument("coefficient count does not match the basis size");
  const LocalBasis lb = local_basis(kv, s);
  double value = 0.0;
  for (std::size_t r = 0; r < 4; ++r)
    value += coeffs[static_cast<Eigen::Index>(lb.first + r)] * lb.values[r];
  return value;
}

Eigen::MatrixXd basis_matrix(const KnotVector& kv, const Eigen::VectorXd& s)
{
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(s.size(), static_cast<Eigen::Index>(kv.n_basis()));
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const LocalBasis lb = local_basis(kv, s[j]);
    for (std::size_t r = 0; r < 4; ++r)
      B(j, static_cast<Eigen::Index>(lb.first + r)) = lb.values[r];
  }
  return B;
}

} // namespace tolopt
