#include "tolopt/saa.hpp"

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tolopt/error.hpp"
#include "tolopt/parallel.hpp"

namespace tolopt {

void MultiPointSpec::validate() const
{
  if (alphas.size() < 1 || alphas.size() != weights.size())
    throw config_error("multipoint spec needs matching, nonempty alphas and weights");
  if ((weights.array() < 0.0).any())
    throw config_error("multipoint weights must be nonnegative");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw config_error("multipoint weights must sum to 1");
}

Eigen::VectorXd trapezoid_weights(Eigen::Index n_points)
{
  if (n_points < 2)
    throw std::invalid_argument("trapezoid rule needs at least two points");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_points, 1.0 / static_cast<double>(n_points - 1));
  w[0] *= 0.5;
  w[n_points - 1] *= 0.5;
  return w;
}

double weighted_objective(const Eigen::VectorXd& losses, const MultiPointSpec& mp)
{
  if (losses.size() != mp.weights.size())
    throw std::invalid_argument("loss count does not match the multipoint weights");
  return mp.weights.dot(losses);
}

namespace {

struct PathResult
{
  double J = 0.0;
  double turning = 0.0;
  Eigen::VectorXd losses;
  Eigen::VectorXd grad_sigma, grad_turning_sigma;
  Eigen::VectorXd grad_d, grad_turning_d;
};

/// Shared path loop. `unit_field(n)` returns e~_n, or nothing for the deterministic path.
template <typename UnitField>
SAAEstimate run_paths(const PerformanceModel& model, const BladeSurface& base, const DesignVector& d,
                      const Eigen::VectorXd* sigma_grid, const Eigen::MatrixXd* basis, Eigen::Index n_paths,
                      const MultiPointSpec& mp, const SaaOptions& opts, UnitField unit_field)
{
  mp.validate();
  const BladeSurface nominal = apply_design(base, d);
  const bool want_sigma = opts.sigma_gradient && basis != nullptr;
  std::optional<DesignStencil> stencil;
  if (opts.design_gradient)
    stencil = make_design_stencil(base, d, opts.design_delta);

  const Eigen::Index m = static_cast<Eigen::Index>(base.size());
  std::vector<PathResult> results(static_cast<std::size_t>(n_paths));

  parallel_for(static_cast<std::size_t>(n_paths), opts.threads, [&](std::size_t n) {
    PathResult& r = results[n];
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    std::optional<Eigen::VectorXd> e_tilde = unit_field(static_cast<Eigen::Index>(n));
    if (e_tilde) {
      e = scale_field(*e_tilde, *sigma_grid);
      if (e.size() > 0 && !(e.cwiseAbs().maxCoeff() <= opts.sanity_bound))
        throw numerical_error("sample " + std::to_string(n) + ": error field exceeds the sanity bound");
    }

    r.losses.resize(mp.size());
    Eigen::VectorXd dJ_de, dT_de;
    if (want_sigma) {
      dJ_de = Eigen::VectorXd::Zero(m);
      dT_de = Eigen::VectorXd::Zero(m);
    }
    if (stencil) {
      r.grad_d = Eigen::VectorXd::Zero(DesignVector::size);
      r.grad_turning_d = Eigen::VectorXd::Zero(DesignVector::size);
    }
    try {
      for (Eigen::Index k = 0; k < mp.size(); ++k) {
        const double alpha = mp.alphas[k];
        const double w = mp.weights[k];
        const PerfValue v = model.evaluate(nominal, e, d, alpha);
        r.losses[k] = v.loss;
        r.turning += w * v.turning;
        // one field sensitivity per (path, incidence), contracted against every basis function below
        if (want_sigma) {
          const FieldSensitivity fs = loss_field_sensitivity(model, nominal, e, d, alpha, opts.field_delta);
          dJ_de += w * fs.loss;
          dT_de += w * fs.turning;
        }
        if (stencil) {
          const DesignSensitivity ds = loss_design_sensitivity(model, *stencil, e, alpha);
          r.grad_d += w * ds.loss;
          r.grad_turning_d += w * ds.turning;
        }
      }
    } catch (const Error& err) {
      throw Error(err.kind(), "sample " + std::to_string(n) + ": " + err.what());
    }
    r.J = weighted_objective(r.losses, mp);
    if (want_sigma) {
      // dJ_n/dsigma_i = sum_j dJ_n/de_n(s_j) e~_n(s_j) B_i(s_j)
      if (e_tilde) {
        r.grad_sigma = basis->transpose() * dJ_de.cwiseProduct(*e_tilde);
        r.grad_turning_sigma = basis->transpose() * dT_de.cwiseProduct(*e_tilde);
      } else {
        r.grad_sigma = Eigen::VectorXd::Zero(basis->cols());
        r.grad_turning_sigma = Eigen::VectorXd::Zero(basis->cols());
      }
    }
  });

  // ordered reduction
  SAAEstimate est;
  est.per_sample_J.resize(n_paths);
  est.mean_loss_per_alpha = Eigen::VectorXd::Zero(mp.size());
  if (want_sigma) {
    est.grad_sigma = Eigen::VectorXd::Zero(basis->cols());
    est.grad_turning_sigma = Eigen::VectorXd::Zero(basis->cols());
  }
  if (stencil) {
    est.grad_d = Eigen::VectorXd::Zero(DesignVector::size);
    est.grad_turning_d = Eigen::VectorXd::Zero(DesignVector::size);
  }
  double sum_J = 0.0, sum_T = 0.0;
  for (Eigen::Index n = 0; n < n_paths; ++n) {
    const PathResult& r = results[static_cast<std::size_t>(n)];
    est.per_sample_J[n] = r.J;
    sum_J += r.J;
    sum_T += r.turning;
    est.mean_loss_per_alpha += r.losses;
    if (want_sigma) {
      est.grad_sigma += r.grad_sigma;
      est.grad_turning_sigma += r.grad_turning_sigma;
    }
    if (stencil) {
      est.grad_d += r.grad_d;
      est.grad_turning_d += r.grad_turning_d;
    }
  }
  const double inv = 1.0 / static_cast<double>(n_paths);
  est.mean_J = sum_J * inv;
  est.mean_turning = sum_T * inv;
  est.mean_loss_per_alpha *= inv;
  if (want_sigma) {
    est.grad_sigma *= inv;
    est.grad_turning_sigma *= inv;
  }
  if (stencil) {
    est.grad_d *= inv;
    est.grad_turning_d *= inv;
  }
  return est;
}

} // namespace

SAAEstimate estimate(const PerformanceModel& model, const BladeSurface& base, const DesignVector& d,
                     const ToleranceField& tol, const KLBasis& kl, const SampleSet& samples, const MultiPointSpec& mp,
                     const SaaOptions& opts)
{
  if (kl.grid_size() != static_cast<Eigen::Index>(base.size()))
    throw std::invalid_argument("K-L basis grid does not match the blade surface");
  if (samples.n_modes() != kl.n_modes())
    throw std::invalid_argument("sample set mode count does not match the K-L basis");
  const Eigen::MatrixXd B = basis_matrix(tol.knots(), base.s);
  const Eigen::VectorXd sigma = B * tol.coeffs();
  return run_paths(model, base, d, &sigma, &B, samples.size(), mp, opts,
                   [&](Eigen::Index n) -> std::optional<Eigen::VectorXd> {
                     return sample_unit_field(kl, samples.xi.row(n).transpose());
                   });
}

SAAEstimate nominal_estimate(const PerformanceModel& model, const BladeSurface& base, const DesignVector& d,
                             const MultiPointSpec& mp, const SaaOptions& opts)
{
  SaaOptions o = opts;
  o.sigma_gradient = false;
  return run_paths(model, base, d, nullptr, nullptr, 1, mp, o,
                   [](Eigen::Index) -> std::optional<Eigen::VectorXd> { return std::nullopt; });
}

void write_per_sample_csv(std::ostream& out, const SAAEstimate& est)
{
  out << "sample,J\n";
  for (Eigen::Index n = 0; n < est.per_sample_J.size(); ++n)
    out << n << ',' << est.per_sample_J[n] << '\n';
}

} // namespace tolopt
