#include "tolopt/perf.hpp"

#include <cmath>
#include <stdexcept>

#include "tolopt/error.hpp"

namespace tolopt {

double dot(const DesignCoeffs& c, const DesignVector& d)
{
  double v = c[DesignVector::n_chebyshev] * d.stagger;
  for (int k = 0; k < DesignVector::n_chebyshev; ++k)
    v += c[static_cast<std::size_t>(k)] * d.chebyshev[static_cast<std::size_t>(k)];
  return v;
}

namespace {

double logistic(double z)
{
  if (z >= 0.0)
    return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

double softplus(double x, double eta)
{
  const double u = x / eta;
  return eta * (u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)));
}

} // namespace

void SurrogateCascadeConfig::validate() const
{
  if (!(tau > 0.0))
    throw config_error("surrogate tau must be positive");
  if (!(omega_sep >= 0.0))
    throw config_error("surrogate omega_sep must be nonnegative");
  if (!(asym_smoothing > 0.0) || !(le_weight_width > 0.0) || !(le_weight_cutoff > 0.0) || !(le_window > 0.0))
    throw config_error("surrogate widths must be positive");
  if (!(c_rough >= 0.0) || !(c_alpha >= 0.0) || !(design_quadratic >= 0.0) || !(omega0 >= 0.0))
    throw config_error("surrogate loss coefficients must be nonnegative");
  const double scalars[] = {omega0, c_alpha, alpha_opt0, kappa_crit, kappa_incidence, asym_gain, turning0};
  for (double v : scalars)
    if (!std::isfinite(v))
      throw config_error("surrogate constants must be finite");
}

SurrogateCascade::SurrogateCascade(SurrogateCascadeConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

double SurrogateCascade::alpha_opt(const DesignVector& d) const
{
  return cfg_.alpha_opt0 + dot(cfg_.alpha_opt_coeffs, d);
}

double SurrogateCascade::switch_argument(const BladeSurface& nominal, const Eigen::VectorXd& e,
                                         const DesignVector& d, double alpha) const
{
  const LeShapeMetrics metrics = le_shape_metrics(nominal, e, cfg_.le_window, chord_frame(nominal));
  const double da = alpha - alpha_opt(d);
  const double kappa_crit = cfg_.kappa_crit + dot(cfg_.kappa_crit_coeffs, d) - cfg_.kappa_incidence * da * da;
  return (metrics.kappa_le - kappa_crit) / cfg_.tau;
}

PerfValue SurrogateCascade::evaluate(const BladeSurface& nominal, const Eigen::VectorXd& e, const DesignVector& d,
                                     double alpha) const
{
  const double da = alpha - alpha_opt(d);
  double loss = cfg_.omega0 + cfg_.c_alpha * da * da;

  if (cfg_.design_quadratic > 0.0) {
    const Eigen::VectorXd v = d.to_vector();
    double dist2 = 0.0;
    for (int k = 0; k < DesignVector::size; ++k) {
      const double diff = v[k] - cfg_.design_ref[static_cast<std::size_t>(k)];
      dist2 += diff * diff;
    }
    loss += cfg_.design_quadratic * dist2;
  }

  if (cfg_.omega_sep > 0.0) {
    const LeShapeMetrics metrics = le_shape_metrics(nominal, e, cfg_.le_window, chord_frame(nominal));
    const double kappa_crit = cfg_.kappa_crit + dot(cfg_.kappa_crit_coeffs, d) - cfg_.kappa_incidence * da * da;
    const double z = (metrics.kappa_le - kappa_crit) / cfg_.tau;
    const double amp = 1.0 + softplus(cfg_.asym_gain * metrics.asym * alpha, cfg_.asym_smoothing);
    loss += cfg_.omega_sep * logistic(z) * amp;
  }

  if (cfg_.c_rough > 0.0) {
    // compact weight: only nodes within the cutoff contribute
    const double reach = cfg_.le_weight_cutoff * cfg_.le_weight_width;
    const double inv2w2 = 0.5 / (cfg_.le_weight_width * cfg_.le_weight_width);
    double rough = 0.0;
    auto add = [&](std::size_t j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double sj = nominal.s[jj];
      const double g = std::exp(-sj * sj * inv2w2) * smooth_taper(std::abs(sj), 0.5 * reach, reach);
      rough += nominal.quad_weights[jj] * g * e[jj] * e[jj];
    };
    add(nominal.le_index);
    for (std::size_t j = nominal.le_index + 1; j < nominal.size() && nominal.s[static_cast<Eigen::Index>(j)] < reach; ++j)
      add(j);
    for (std::size_t j = nominal.le_index; j-- > 0 && nominal.s[static_cast<Eigen::Index>(j)] > -reach;)
      add(j);
    loss += cfg_.c_rough * rough;
  }

  if (!std::isfinite(loss))
    throw numerical_error("surrogate produced a non-finite loss");
  return {loss, cfg_.turning0 + dot(cfg_.turning_coeffs, d)};
}

QuadraticModel::QuadraticModel(QuadraticModelConfig cfg) : cfg_(std::move(cfg))
{
  if ((cfg_.node_weights.array() < 0.0).any())
    throw config_error("quadratic model weights must be nonnegative");
}

PerfValue QuadraticModel::evaluate(const BladeSurface& nominal, const Eigen::VectorXd& e, const DesignVector& d,
                                   double alpha) const
{
  if (cfg_.node_weights.size() != e.size() || e.size() != static_cast<Eigen::Index>(nominal.size()))
    throw std::invalid_argument("quadratic model weight count does not match the grid");
  const double da = alpha - cfg_.alpha0;
  const double loss = cfg_.omega0 + cfg_.node_weights.dot(e.cwiseAbs2()) + cfg_.c_alpha * da * da;
  return {loss, cfg_.turning0 + dot(cfg_.turning_coeffs, d)};
}

FieldSensitivity loss_field_sensitivity(const PerformanceModel& model, const BladeSurface& nominal,
                                        const Eigen::VectorXd& e, const DesignVector& d, double alpha, double delta)
{
  if (!(delta > 0.0))
    throw std::invalid_argument("finite-difference step must be positive");
  const Eigen::Index m = e.size();
  FieldSensitivity out{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  Eigen::VectorXd work = e;
  for (Eigen::Index j = 0; j < m; ++j) {
    work[j] = e[j] + delta;
    const PerfValue up = model.evaluate(nominal, work, d, alpha);
    work[j] = e[j] - delta;
    const PerfValue down = model.evaluate(nominal, work, d, alpha);
    work[j] = e[j];
    out.loss[j] = (up.loss - down.loss) / (2.0 * delta);
    out.turning[j] = (up.turning - down.turning) / (2.0 * delta);
    if (!std::isfinite(out.loss[j]) || !std::isfinite(out.turning[j]))
      throw numerical_error("non-finite model output at perturbed node " + std::to_string(j));
  }
  return out;
}

DesignStencil make_design_stencil(const BladeSurface& base, const DesignVector& d, double delta)
{
  if (!(delta > 0.0))
    throw std::invalid_argument("finite-difference step must be positive");
  DesignStencil st;
  st.delta = delta;
  const Eigen::VectorXd v = d.to_vector();
  for (int k = 0; k < DesignVector::size; ++k) {
    Eigen::VectorXd vp = v, vm = v;
    vp[k] += delta;
    vm[k] -= delta;
    st.d_plus.push_back(DesignVector::from_vector(vp));
    st.d_minus.push_back(DesignVector::from_vector(vm));
    st.plus.push_back(apply_design(base, st.d_plus.back()));
    st.minus.push_back(apply_design(base, st.d_minus.back()));
  }
  return st;
}

DesignSensitivity loss_design_sensitivity(const PerformanceModel& model, const DesignStencil& stencil,
                                          const Eigen::VectorXd& e, double alpha)
{
  DesignSensitivity out{Eigen::VectorXd(DesignVector::size), Eigen::VectorXd(DesignVector::size)};
  for (int k = 0; k < DesignVector::size; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const PerfValue up = model.evaluate(stencil.plus[kk], e, stencil.d_plus[kk], alpha);
    const PerfValue down = model.evaluate(stencil.minus[kk], e, stencil.d_minus[kk], alpha);
    out.loss[k] = (up.loss - down.loss) / (2.0 * stencil.delta);
    out.turning[k] = (up.turning - down.turning) / (2.0 * stencil.delta);
    if (!std::isfinite(out.loss[k]) || !std::isfinite(out.turning[k]))
      throw numerical_error("non-finite model output at perturbed design variable " + std::to_string(k));
  }
  return out;
}

DesignSensitivity loss_design_sensitivity(const PerformanceModel& model, const BladeSurface& base,
                                          const DesignVector& d, const Eigen::VectorXd& e, double alpha, double delta)
{
  return loss_design_sensitivity(model, make_design_stencil(base, d, delta), e, alpha);
}

} // namespace tolopt
