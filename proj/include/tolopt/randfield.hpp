#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "tolopt/geometry.hpp"
#include "tolopt/splines.hpp"

namespace tolopt {

/// How the two local correlation lengths are combined in the squared-exponential kernel.
enum class CorrelationForm {
  /// sqrt(2 L L' / (L^2 + L'^2)) exp(-(s - s')^2 / (L^2 + L'^2)); positive definite for any L(s).
  gibbs,
  /// exp(-(s - s')^2 / (2 L L')); not positive definite when L(s) varies, kept for comparison.
  geometric_mean,
};

/// Non-stationary correlation with length L(s) = L0 + (L_LE - L0) exp(-s^2 / w^2). Lengths are
/// in units of the surface coordinate s.
struct CorrelationSpec
{
  double L0 = 0.1;
  double L_LE = 0.01;
  double w = 0.01;
  CorrelationForm form = CorrelationForm::gibbs;

  void validate() const;
};

double correlation_length(const CorrelationSpec& spec, double s);
double correlation(const CorrelationSpec& spec, double s, double s2);

/// Discrete K-L basis of the unit-variance correlation operator on a surface grid.
struct KLBasis
{
  Eigen::VectorXd eigenvalues;   ///< retained, nonincreasing, >= 0
  Eigen::MatrixXd eigenfunctions; ///< phi_i(s_j), column i; weighted-orthonormal
  Eigen::MatrixXd scaled_modes;   ///< phi_i(s_j) sqrt(lambda_i)
  Eigen::VectorXd spectrum;       ///< every eigenvalue of the weighted operator, nonincreasing
  Eigen::VectorXd quad_weights;
  double energy_fraction = 1.0;
  Eigen::Index n_positive = 0;
  Eigen::Index n_significant_negative = 0;

  Eigen::Index n_modes() const { return eigenvalues.size(); }
  Eigen::Index grid_size() const { return eigenfunctions.rows(); }
};

/// Dense correlation matrix rho(s_i, s_j) on the surface grid.
Eigen::MatrixXd correlation_matrix(const BladeSurface& surface, const CorrelationSpec& spec);

/// Solves W^1/2 rho W^1/2 v = lambda v, maps back phi = W^-1/2 v and keeps the smallest leading
/// set of modes holding `energy_fraction` of the positive spectrum.
KLBasis kl_decompose(const BladeSurface& surface, const CorrelationSpec& spec, double energy_fraction = 0.99);

/// Fixed standard-normal draws shared by every SAA evaluation.
struct SampleSet
{
  Eigen::MatrixXd xi; ///< N x n_modes
  std::uint64_t seed = 0;

  Eigen::Index size() const { return xi.rows(); }
  Eigen::Index n_modes() const { return xi.cols(); }
};

/// Draws are generated row by row from one seeded stream, so a larger N extends a smaller one.
SampleSet make_samples(std::uint64_t seed, Eigen::Index n_samples, Eigen::Index n_modes);

void save_samples(const SampleSet& samples, const std::string& path);
SampleSet load_samples(const std::string& path);

/// Cache file name for a (seed, N, modes) key.
std::string sample_cache_name(std::uint64_t seed, Eigen::Index n_samples, Eigen::Index n_modes);

/// Loads the keyed cache under `dir` if present, otherwise generates and writes it.
SampleSet cached_samples(const std::string& dir, std::uint64_t seed, Eigen::Index n_samples, Eigen::Index n_modes);

/// e~(s_j) = sum_i sqrt(lambda_i) phi_i(s_j) xi_i
Eigen::VectorXd sample_unit_field(const KLBasis& kl, const Eigen::VectorXd& xi_row);

/// e(s_j) = sigma(s_j) e~(s_j); sigma given on the grid.
Eigen::VectorXd scale_field(const Eigen::VectorXd& e_tilde, const Eigen::VectorXd& sigma_on_grid);

/// de(s_j)/dsigma_i = e~(s_j) B_i(s_j)
Eigen::VectorXd pathwise_sigma_sensitivity(const Eigen::VectorXd& e_tilde, const KnotVector& kv, std::size_t i,
                                           const Eigen::VectorXd& s);

} // namespace tolopt
