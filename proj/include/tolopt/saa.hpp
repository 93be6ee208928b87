#pragma once

#include <iosfwd>

#include <Eigen/Core>

#include "tolopt/geometry.hpp"
#include "tolopt/perf.hpp"
#include "tolopt/randfield.hpp"
#include "tolopt/tolerance.hpp"

namespace tolopt {

/// Incidence points (rad) and their weights.
struct MultiPointSpec
{
  Eigen::VectorXd alphas;
  Eigen::VectorXd weights;

  void validate() const;
  Eigen::Index size() const { return alphas.size(); }
};

/// Normalized composite-trapezoid weights for n equispaced points.
Eigen::VectorXd trapezoid_weights(Eigen::Index n_points);

/// J = sum_i w_i omega_i
double weighted_objective(const Eigen::VectorXd& losses, const MultiPointSpec& mp);

struct SaaOptions
{
  unsigned threads = 1;
  double field_delta = 1e-6;  ///< FD step on nodal normal offsets
  double design_delta = 1e-6; ///< FD step on design variables
  bool sigma_gradient = true;
  bool design_gradient = true;
  double sanity_bound = 0.05;
};

struct SAAEstimate
{
  double mean_J = 0.0;
  Eigen::VectorXd grad_sigma;          ///< d mean_J / d sigma_i
  Eigen::VectorXd grad_d;              ///< d mean_J / d d_k
  double mean_turning = 0.0;
  Eigen::VectorXd grad_turning_sigma;
  Eigen::VectorXd grad_turning_d;
  Eigen::VectorXd per_sample_J;
  /// Unweighted sample mean of the loss at each incidence point.
  Eigen::VectorXd mean_loss_per_alpha;
};

/// Sample-average estimate of E[J] and its pathwise gradients over a fixed SampleSet. The design
/// d is applied to `base`; sigma and the K-L modes live on the base grid. The turning reported is
/// the w-weighted turning over the incidence points.
SAAEstimate estimate(const PerformanceModel& model, const BladeSurface& base, const DesignVector& d,
                     const ToleranceField& tol, const KLBasis& kl, const SampleSet& samples, const MultiPointSpec& mp,
                     const SaaOptions& opts = {});

/// Deterministic counterpart (no manufacturing error): one path with e = 0.
SAAEstimate nominal_estimate(const PerformanceModel& model, const BladeSurface& base, const DesignVector& d,
                             const MultiPointSpec& mp, const SaaOptions& opts = {});

/// "sample,J" rows.
void write_per_sample_csv(std::ostream& out, const SAAEstimate& est);

} // namespace tolopt
