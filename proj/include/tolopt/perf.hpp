#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tolopt/geometry.hpp"

namespace tolopt {

struct PerfValue
{
  double loss = 0.0;    ///< loss coefficient
  double turning = 0.0; ///< flow turning (rad)
};

/// Loss and turning of the blade nominal + e n at incidence alpha (rad). `nominal` already carries
/// the design d; d is passed for models with explicit design dependence.
class PerformanceModel
{
public:
  virtual ~PerformanceModel() = default;
  virtual std::string name() const = 0;
  virtual PerfValue evaluate(const BladeSurface& nominal, const Eigen::VectorXd& e, const DesignVector& d,
                             double alpha) const = 0;
};

using DesignCoeffs = std::array<double, DesignVector::size>;

double dot(const DesignCoeffs& c, const DesignVector& d);

/// Constants of the analytic cascade surrogate. Loss:
///
///   omega0
///   + c_alpha (alpha - alpha_opt(d))^2
///   + design_quadratic |d - design_ref|^2
///   + omega_sep S(z) (1 + softplus(asym_gain asym alpha))
///   + c_rough sum_j w_j g(s_j) e_j^2
///
/// with alpha_opt(d) = alpha_opt0 + alpha_opt_coeffs . d, S the logistic function,
/// z = (kappa_le - kappa_crit_eff) / tau and
/// kappa_crit_eff = kappa_crit + kappa_crit_coeffs . d - kappa_incidence (alpha - alpha_opt(d))^2.
/// g(s) = exp(-s^2 / (2 width^2)) smooth_taper(|s|, R / 2, R) with width = le_weight_width and
/// R = le_weight_cutoff width. softplus(x) = eta log(1 + exp(x / eta)) with eta = asym_smoothing.
/// kappa_le and asym come from le_shape_metrics with window le_window, measured against the
/// nominal chord line. Turning = turning0 + turning_coeffs . d.
struct SurrogateCascadeConfig
{
  double omega0 = 2.2e-2;
  double c_alpha = 1.0;
  double alpha_opt0 = 0.0;
  DesignCoeffs alpha_opt_coeffs{};
  double kappa_crit = 100.0;
  DesignCoeffs kappa_crit_coeffs{};
  double kappa_incidence = 0.0;
  double omega_sep = 0.0;
  double tau = 1.0;
  double asym_gain = 0.0;
  double asym_smoothing = 1e-3;
  double c_rough = 0.0;
  double le_weight_width = 0.05;
  double le_weight_cutoff = 3.0;
  double le_window = 0.01;
  double design_quadratic = 0.0;
  DesignCoeffs design_ref{};
  double turning0 = 0.0;
  DesignCoeffs turning_coeffs{};

  void validate() const;
};

class SurrogateCascade final : public PerformanceModel
{
public:
  explicit SurrogateCascade(SurrogateCascadeConfig cfg);
  std::string name() const override { return "surrogate"; }
  PerfValue evaluate(const BladeSurface& nominal, const Eigen::VectorXd& e, const DesignVector& d,
                     double alpha) const override;

  /// Separation-switch argument z at the given state (exposed for diagnostics and tests).
  double switch_argument(const BladeSurface& nominal, const Eigen::VectorXd& e, const DesignVector& d,
                         double alpha) const;
  double alpha_opt(const DesignVector& d) const;
  const SurrogateCascadeConfig& config() const { return cfg_; }

private:
  SurrogateCascadeConfig cfg_;
};

/// omega = omega0 + sum_j a_j e_j^2 + c_alpha (alpha - alpha0)^2, turning linear in d.
struct QuadraticModelConfig
{
  double omega0 = 0.0;
  Eigen::VectorXd node_weights;
  double c_alpha = 0.0;
  double alpha0 = 0.0;
  double turning0 = 0.0;
  DesignCoeffs turning_coeffs{};
};

class QuadraticModel final : public PerformanceModel
{
public:
  explicit QuadraticModel(QuadraticModelConfig cfg);
  std::string name() const override { return "quadratic"; }
  PerfValue evaluate(const BladeSurface& nominal, const Eigen::VectorXd& e, const DesignVector& d,
                     double alpha) const override;
  const QuadraticModelConfig& config() const { return cfg_; }

private:
  QuadraticModelConfig cfg_;
};

struct FieldSensitivity
{
  Eigen::VectorXd loss;
  Eigen::VectorXd turning;
};

/// Central differences of loss and turning with respect to the normal offset at every node.
FieldSensitivity loss_field_sensitivity(const PerformanceModel& model, const BladeSurface& nominal,
                                        const Eigen::VectorXd& e, const DesignVector& d, double alpha,
                                        double delta = 1e-6);

/// Nominal surfaces at d +- delta e_j, built once and reused for every sample path.
struct DesignStencil
{
  double delta = 0.0;
  std::vector<DesignVector> d_plus, d_minus;
  std::vector<BladeSurface> plus, minus;
};

DesignStencil make_design_stencil(const BladeSurface& base, const DesignVector& d, double delta = 1e-6);

struct DesignSensitivity
{
  Eigen::VectorXd loss;
  Eigen::VectorXd turning;
};

/// Central differences in the design variables with the realization e held fixed; e is applied
/// along the normals of each perturbed nominal surface.
DesignSensitivity loss_design_sensitivity(const PerformanceModel& model, const DesignStencil& stencil,
                                          const Eigen::VectorXd& e, double alpha);

DesignSensitivity loss_design_sensitivity(const PerformanceModel& model, const BladeSurface& base,
                                          const DesignVector& d, const Eigen::VectorXd& e, double alpha,
                                          double delta = 1e-6);

} // namespace tolopt
