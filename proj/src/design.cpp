#include "tolopt/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "tolopt/error.hpp"

namespace tolopt {

DesignBounds DesignBounds::symmetric(double camber, double stagger)
{
  DesignBounds b;
  b.lower.chebyshev.fill(-camber);
  b.upper.chebyshev.fill(camber);
  b.lower.stagger = -stagger;
  b.upper.stagger = stagger;
  return b;
}

void DesignBounds::validate() const
{
  const Eigen::VectorXd lo = lower.to_vector(), hi = upper.to_vector();
  if (!lo.allFinite() || !hi.allFinite() || (lo.array() > hi.array()).any())
    throw config_error("design bounds must be finite with lower <= upper");
}

namespace {

void check_setup(const StudySetup& setup, bool needs_samples)
{
  if (setup.model == nullptr || setup.base == nullptr)
    throw std::invalid_argument("study setup needs a model and a baseline surface");
  if (needs_samples && (setup.kl == nullptr || setup.samples == nullptr))
    throw std::invalid_argument("study setup needs a K-L basis and a SampleSet");
  setup.mp.validate();
}

/// Memoizes the last point: the line search evaluates a trial point and the solver then asks for
/// its gradients, and every evaluation here produces both.
class CachedObjective
{
public:
  using Fn = std::function<NlpEvaluation(const Eigen::VectorXd&)>;
  explicit CachedObjective(Fn fn) : fn_(std::move(fn)) {}

  NlpEvaluation operator()(const Eigen::VectorXd& x, bool)
  {
    if (!has_ || x.size() != x_.size() || x != x_) {
      value_ = fn_(x);
      x_ = x;
      has_ = true;
    }
    return value_;
  }

private:
  Fn fn_;
  bool has_ = false;
  Eigen::VectorXd x_;
  NlpEvaluation value_;
};

/// Design variables enter the solver as v in [-1, 1] per component, d = mid + half v.
struct DesignScaling
{
  Eigen::VectorXd mid, half;

  explicit DesignScaling(const DesignBounds& b)
  {
    const Eigen::VectorXd lo = b.lower.to_vector(), hi = b.upper.to_vector();
    mid = 0.5 * (lo + hi);
    half = 0.5 * (hi - lo);
  }
  DesignVector design(const Eigen::VectorXd& v) const
  {
    return DesignVector::from_vector(mid + half.cwiseProduct(v));
  }
  Eigen::VectorXd scaled(const DesignVector& d) const
  {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(mid.size());
    const Eigen::VectorXd dv = d.to_vector();
    for (Eigen::Index k = 0; k < v.size(); ++k)
      if (half[k] > 0.0)
        v[k] = std::clamp((dv[k] - mid[k]) / half[k], -1.0, 1.0);
    return v;
  }
  void bounds(Eigen::VectorXd& lo, Eigen::VectorXd& hi, Eigen::Index offset) const
  {
    for (Eigen::Index k = 0; k < half.size(); ++k) {
      lo[offset + k] = half[k] > 0.0 ? -1.0 : 0.0;
      hi[offset + k] = half[k] > 0.0 ? 1.0 : 0.0;
    }
  }
};

double objective_scale(const Eigen::VectorXd& grad)
{
  const double g = grad.lpNorm<Eigen::Infinity>();
  return g > 0.0 && std::isfinite(g) ? 1.0 / g : 1.0;
}

/// Reports objective values in the model's units rather than the solver's scaled ones.
void unscale(OptimizationResult& r, double sf)
{
  r.objective /= sf;
  for (auto& h : r.history) {
    h.objective /= sf;
    h.merit /= sf;
  }
}

double nominal_turning(const StudySetup& setup, const DesignVector& d)
{
  SaaOptions o = setup.saa;
  o.design_gradient = false;
  return nominal_estimate(*setup.model, *setup.base, d, setup.mp, o).mean_turning;
}

void check_turning_feasible(const OptimizationResult& r)
{
  if (r.status != SqpStatus::converged && r.constraint_violation > 1e-6)
    throw infeasible_error("turning target is not attainable within the design bounds");
}

void check_budget(const Eigen::VectorXd& a, double sigma_max, double V_b)
{
  const double cap = sigma_max * a.sum();
  if (!(V_b >= 0.0) || V_b > cap * (1.0 + 1e-12))
    throw infeasible_error("variability budget " + std::to_string(V_b) + " outside [0, " + std::to_string(cap) + "]");
}

} // namespace

ToleranceResult optimize_tolerance(const StudySetup& setup, const DesignVector& d, const KnotVector& kv,
                                   double sigma_max, double V_b)
{
  check_setup(setup, true);
  if (!(sigma_max > 0.0))
    throw config_error("sigma_max must be positive");
  const Eigen::VectorXd a = variability_coefficients(kv, *setup.base);
  check_budget(a, sigma_max, V_b);
  const auto n = static_cast<Eigen::Index>(kv.n_basis());
  const double u0 = std::min(1.0, V_b / (sigma_max * a.sum()));

  auto field = [&](const Eigen::VectorXd& u) {
    return ToleranceField((sigma_max * u).cwiseMax(0.0).cwiseMin(sigma_max), kv, sigma_max);
  };
  SaaOptions o = setup.saa;
  o.sigma_gradient = true;
  o.design_gradient = false;
  auto mean = [&](const Eigen::VectorXd& u) {
    return estimate(*setup.model, *setup.base, d, field(u), *setup.kl, *setup.samples, setup.mp, o);
  };

  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, u0);
  const SAAEstimate first = mean(x0);
  ToleranceResult out{field(x0), {}, first.mean_J};
  if (V_b == 0.0) {
    out.opt.x = x0;
    out.opt.objective = first.mean_J;
    out.opt.status = SqpStatus::converged;
    out.opt.evaluations = 1;
    return out;
  }

  const double sf = objective_scale(sigma_max * first.grad_sigma);
  CachedObjective cached([&](const Eigen::VectorXd& u) {
    const SAAEstimate est = mean(u);
    NlpEvaluation ev;
    ev.f = sf * est.mean_J;
    ev.grad = sf * sigma_max * est.grad_sigma;
    ev.c.resize(0);
    ev.jac.resize(0, n);
    return ev;
  });

  NlpProblem p;
  p.evaluate = std::ref(cached);
  p.linear.push_back({a * (sigma_max / V_b), 1.0}); // relative budget error
  p.lower = Eigen::VectorXd::Zero(n);
  p.upper = Eigen::VectorXd::Ones(n);
  p.x0 = x0;
  out.opt = sqp_solve(p, setup.sqp);
  out.tol = field(out.opt.x);
  unscale(out.opt, sf);
  return out;
}

GeometryResult optimize_geometry(const StudySetup& setup, GeometryMode mode, const DesignBounds& bounds,
                                 const DesignVector& d0, const std::optional<ToleranceField>& tol,
                                 std::optional<double> turning_target)
{
  const bool robust = mode == GeometryMode::robust;
  check_setup(setup, robust);
  bounds.validate();
  if (robust && !tol)
    throw std::invalid_argument("robust geometry optimization needs a tolerance field");

  const DesignScaling scaling(bounds);
  const double target = turning_target ? *turning_target : nominal_turning(setup, d0);
  SaaOptions o = setup.saa;
  o.sigma_gradient = false;
  o.design_gradient = true;
  auto run = [&](const Eigen::VectorXd& v) {
    const DesignVector d = scaling.design(v);
    return robust ? estimate(*setup.model, *setup.base, d, *tol, *setup.kl, *setup.samples, setup.mp, o)
                  : nominal_estimate(*setup.model, *setup.base, d, setup.mp, o);
  };

  const Eigen::Index n = DesignVector::size;
  NlpProblem p;
  p.x0 = scaling.scaled(d0);
  p.lower.resize(n);
  p.upper.resize(n);
  scaling.bounds(p.lower, p.upper, 0);
  const double sf = objective_scale(run(p.x0).grad_d.cwiseProduct(scaling.half));
  CachedObjective cached([&](const Eigen::VectorXd& v) {
    const SAAEstimate est = run(v);
    NlpEvaluation ev;
    ev.f = sf * est.mean_J;
    ev.grad = sf * est.grad_d.cwiseProduct(scaling.half);
    ev.c = Eigen::VectorXd::Constant(1, est.mean_turning - target);
    ev.jac = est.grad_turning_d.cwiseProduct(scaling.half).transpose();
    return ev;
  });
  p.evaluate = std::ref(cached);
  p.n_nonlinear = 1;

  GeometryResult out{d0, sqp_solve(p, setup.sqp), target};
  check_turning_feasible(out.opt);
  out.d = scaling.design(out.opt.x);
  unscale(out.opt, sf);
  return out;
}

SimultaneousResult optimize_simultaneous(const StudySetup& setup, const DesignBounds& bounds, const DesignVector& d0,
                                         const ToleranceField& tol0, double V_b, std::optional<double> turning_target,
                                         Freeze freeze)
{
  check_setup(setup, true);
  bounds.validate();
  const KnotVector& kv = tol0.knots();
  const double sigma_max = tol0.sigma_max();
  const Eigen::VectorXd a = variability_coefficients(kv, *setup.base);
  const bool sigma_free = freeze != Freeze::sigma;
  const bool design_free = freeze != Freeze::design;
  if (sigma_free) {
    check_budget(a, sigma_max, V_b);
    if (V_b == 0.0)
      throw infeasible_error("simultaneous optimization needs a positive variability budget");
  }

  const DesignScaling scaling(bounds);
  const double target = turning_target ? *turning_target : nominal_turning(setup, d0);
  const Eigen::Index nd = DesignVector::size;
  const auto ns = static_cast<Eigen::Index>(kv.n_basis());
  const Eigen::Index n = nd + ns;

  NlpProblem p;
  p.x0.resize(n);
  p.lower.resize(n);
  p.upper.resize(n);
  p.x0.head(nd) = scaling.scaled(d0);
  scaling.bounds(p.lower, p.upper, 0);
  if (!design_free) {
    p.lower.head(nd) = p.x0.head(nd);
    p.upper.head(nd) = p.x0.head(nd);
  }
  if (sigma_free) {
    p.x0.tail(ns).setConstant(std::min(1.0, V_b / (sigma_max * a.sum())));
    p.lower.tail(ns).setZero();
    p.upper.tail(ns).setOnes();
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row.tail(ns) = a * (sigma_max / V_b);
    p.linear.push_back({row, 1.0});
  } else {
    p.x0.tail(ns) = tol0.coeffs() / sigma_max;
    p.lower.tail(ns) = p.x0.tail(ns);
    p.upper.tail(ns) = p.x0.tail(ns);
  }

  auto field = [&](const Eigen::VectorXd& x) {
    return ToleranceField((sigma_max * x.tail(ns)).cwiseMax(0.0).cwiseMin(sigma_max), kv, sigma_max);
  };
  SaaOptions o = setup.saa;
  o.sigma_gradient = sigma_free;
  o.design_gradient = design_free;
  auto run = [&](const Eigen::VectorXd& x) {
    return estimate(*setup.model, *setup.base, scaling.design(x.head(nd)), field(x), *setup.kl, *setup.samples,
                    setup.mp, o);
  };
  auto gradient = [&](const SAAEstimate& est, bool turning) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd& gd = turning ? est.grad_turning_d : est.grad_d;
    const Eigen::VectorXd& gs = turning ? est.grad_turning_sigma : est.grad_sigma;
    if (design_free)
      g.head(nd) = gd.cwiseProduct(scaling.half);
    if (sigma_free)
      g.tail(ns) = sigma_max * gs;
    return g;
  };

  const double sf = objective_scale(gradient(run(p.x0), false));
  CachedObjective cached([&](const Eigen::VectorXd& x) {
    const SAAEstimate est = run(x);
    NlpEvaluation ev;
    ev.f = sf * est.mean_J;
    ev.grad = sf * gradient(est, false);
    if (design_free) {
      ev.c = Eigen::VectorXd::Constant(1, est.mean_turning - target);
      ev.jac = gradient(est, true).transpose();
    } else {
      ev.c.resize(0);
      ev.jac.resize(0, n);
    }
    return ev;
  });
  p.evaluate = std::ref(cached);
  p.n_nonlinear = design_free ? 1 : 0;

  OptimizationResult opt = sqp_solve(p, setup.sqp);
  if (design_free)
    check_turning_feasible(opt);
  unscale(opt, sf);
  SimultaneousResult out{scaling.design(opt.x.head(nd)), field(opt.x), std::move(opt), target};
  return out;
}

SequentialResult optimize_sequential(const StudySetup& setup, const DesignBounds& bounds, const DesignVector& d0,
                                     const KnotVector& kv, double sigma_max, double V_b,
                                     std::optional<double> turning_target)
{
  GeometryResult geometry = optimize_geometry(setup, GeometryMode::deterministic, bounds, d0, std::nullopt,
                                              turning_target);
  ToleranceResult tolerance = optimize_tolerance(setup, geometry.d, kv, sigma_max, V_b);
  return {std::move(geometry), std::move(tolerance)};
}

} // namespace tolopt
