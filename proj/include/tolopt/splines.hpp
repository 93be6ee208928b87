#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace tolopt {

/// Clamped cubic knot vector over an arc-length domain.
class KnotVector
{
public:
  static constexpr int degree = 3;

  /// Takes the full knot sequence (end knots repeated degree+1 times).
  explicit KnotVector(std::vector<double> knots);

  const std::vector<double>& knots() const { return knots_; }
  std::size_t n_basis() const { return knots_.size() - degree - 1; }
  double lo() const { return knots_.front(); }
  double hi() const { return knots_.back(); }
  std::vector<double> interior() const;

  /// Index k of the span [t_k, t_{k+1}) containing s; the right end maps to the last nonempty span.
  std::size_t span(double s) const;

private:
  std::vector<double> knots_;
};

struct KnotRefinement
{
  double center = 0.0;
  double radius = 1.0;
  double density_ratio = 1.0;
};

/// Interior knots placed by inverting the cumulative of a piecewise-constant density that is
/// `density_ratio` times larger inside |s - center| < radius than outside.
KnotVector make_knots(double s_min, double s_max, std::size_t n_basis, const KnotRefinement& refinement = {});

/// Cox-de Boor value of basis i at s. Throws std::out_of_range outside the knot domain.
double basis_value(const KnotVector& kv, std::size_t i, double s);

/// The (at most) four nonzero basis values at s; values[k] belongs to basis `first + k`.
struct LocalBasis
{
  std::size_t first = 0;
  std::array<double, 4> values{};
};
LocalBasis local_basis(const KnotVector& kv, double s);

double eval_spline(const Eigen::VectorXd& coeffs, const KnotVector& kv, double s);

/// Dense collocation matrix B(j, i) = B_i(s_j).
Eigen::MatrixXd basis_matrix(const KnotVector& kv, const Eigen::VectorXd& s);

} // namespace tolopt
