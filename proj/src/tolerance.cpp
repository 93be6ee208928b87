#include "tolopt/tolerance.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "tolopt/error.hpp"
#include "tolopt/randfield.hpp"

namespace tolopt {

ToleranceField::ToleranceField(Eigen::VectorXd coeffs, KnotVector kv, double sigma_max)
    : coeffs_(std::move(coeffs)), kv_(std::move(kv)), sigma_max_(sigma_max)
{
  if (static_cast<std::size_t>(coeffs_.size()) != kv_.n_basis())
    throw std::invalid_argument("tolerance coefficient count does not match the basis size");
  if (!(sigma_max_ > 0.0))
    throw std::invalid_argument("sigma_max must be positive");
  if ((coeffs_.array() < 0.0).any() || (coeffs_.array() > sigma_max_).any() || !coeffs_.allFinite())
    throw std::invalid_argument("tolerance coefficients must lie in [0, sigma_max]");
}

ToleranceField ToleranceField::uniform(const KnotVector& kv, double value, double sigma_max)
{
  return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(kv.n_basis()), value), kv, sigma_max};
}

Eigen::VectorXd ToleranceField::on_grid(const Eigen::VectorXd& s) const
{
  Eigen::VectorXd out(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j)
    out[j] = eval_spline(coeffs_, kv_, s[j]);
  return out;
}

Eigen::VectorXd variability_coefficients(const KnotVector& kv, const BladeSurface& surface)
{
  return basis_matrix(kv, surface.s).transpose() * surface.quad_weights;
}

double total_variability(const ToleranceField& tol, const BladeSurface& surface)
{
  return variability_coefficients(tol.knots(), surface).dot(tol.coeffs());
}

double scheme_error(const ToleranceField& a, const ToleranceField& b, const BladeSurface& surface)
{
  if (a.sigma_max() != b.sigma_max())
    throw std::invalid_argument("scheme_error needs a common sigma_max");
  const Eigen::VectorXd sa = a.on_grid(surface.s);
  const Eigen::VectorXd sb = b.on_grid(surface.s);
  const double num = surface.quad_weights.dot((sa - sb).cwiseAbs());
  const Eigen::VectorXd ra = (a.sigma_max() - sa.array()).matrix();
  const Eigen::VectorXd rb = (b.sigma_max() - sb.array()).matrix();
  const double den = surface.quad_weights.dot(ra + rb);
  if (!(den > 0.0))
    throw numerical_error("scheme_error undefined: neither field drops below sigma_max");
  return num / den;
}

Eigen::VectorXd scale_field(const Eigen::VectorXd& e_tilde, const ToleranceField& tol, const Eigen::VectorXd& s)
{
  return scale_field(e_tilde, tol.on_grid(s));
}

void write_sigma_profile(std::ostream& out, const ToleranceField& tol, const BladeSurface& surface)
{
  out << "s,sigma\n";
  const Eigen::VectorXd sig = tol.on_grid(surface.s);
  for (Eigen::Index j = 0; j < sig.size(); ++j)
    out << surface.s[j] << ',' << sig[j] << '\n';
}

} // namespace tolopt
