#pragma once

#include <iosfwd>

#include <Eigen/Core>

#include "tolopt/geometry.hpp"
#include "tolopt/splines.hpp"

namespace tolopt {

/// Standard-deviation field sigma(s) = sum_i c_i B_i(s) with 0 <= c_i <= sigma_max.
class ToleranceField
{
public:
  ToleranceField(Eigen::VectorXd coeffs, KnotVector kv, double sigma_max);

  /// sigma_i = value for every coefficient.
  static ToleranceField uniform(const KnotVector& kv, double value, double sigma_max);

  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  const KnotVector& knots() const { return kv_; }
  double sigma_max() const { return sigma_max_; }
  std::size_t n_basis() const { return kv_.n_basis(); }

  double operator()(double s) const { return eval_spline(coeffs_, kv_, s); }
  Eigen::VectorXd on_grid(const Eigen::VectorXd& s) const;

  ToleranceField with_coeffs(Eigen::VectorXd coeffs) const { return {std::move(coeffs), kv_, sigma_max_}; }

private:
  Eigen::VectorXd coeffs_;
  KnotVector kv_;
  double sigma_max_;
};

/// a_i = sum_j w_j B_i(s_j), so that V(sigma) = a . sigma exactly.
Eigen::VectorXd variability_coefficients(const KnotVector& kv, const BladeSurface& surface);

/// V = sum_j w_j sigma(s_j)
double total_variability(const ToleranceField& tol, const BladeSurface& surface);

/// Integrated relative difference of the two fields' reductions below sigma_max, in [0, 1].
double scheme_error(const ToleranceField& a, const ToleranceField& b, const BladeSurface& surface);

/// e(s_j) = sigma(s_j) e~(s_j)
Eigen::VectorXd scale_field(const Eigen::VectorXd& e_tilde, const ToleranceField& tol, const Eigen::VectorXd& s);

/// "s,sigma" rows at the surface grid.
void write_sigma_profile(std::ostream& out, const ToleranceField& tol, const BladeSurface& surface);

} // namespace tolopt
