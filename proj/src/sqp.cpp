#include "tolopt/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "tolopt/error.hpp"

namespace tolopt {

std::string to_string(SqpStatus status)
{
  switch (status) {
  case SqpStatus::converged: return "converged";
  case SqpStatus::max_iter: return "max_iter";
  case SqpStatus::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

namespace {

enum class Bound : unsigned char { free, lower, upper, fixed };

/// Primal active-set on the bounds from a bound-feasible p satisfying A p = r (rows of A may be
/// empty). Equalities are handled by restricting each step to the null space of the free columns.
int active_set(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, Eigen::VectorXd& p, std::vector<Bound>& state,
               Eigen::VectorXd& lambda, Eigen::VectorXd& z)
{
  const Eigen::Index n = H.rows(), m = A.rows();
  const int max_iter = 20 * static_cast<int>(n + m) + 100;
  const double scale = 1.0 + g.lpNorm<Eigen::Infinity>() + H.lpNorm<Eigen::Infinity>() * (1.0 + p.lpNorm<Eigen::Infinity>());

  bool stationary = false; // p minimizes the QP on the current working set
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Eigen::Index> F;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state[static_cast<std::size_t>(i)] == Bound::free)
        F.push_back(i);
    const auto nF = static_cast<Eigen::Index>(F.size());
    const Eigen::VectorXd G = H * p + g;

    Eigen::VectorXd qF = Eigen::VectorXd::Zero(nF);
    Eigen::MatrixXd AF(m, nF);
    for (Eigen::Index k = 0; k < nF; ++k)
      AF.col(k) = A.col(F[static_cast<std::size_t>(k)]);
    if (nF > 0 && !stationary) {
      Eigen::MatrixXd Z;
      if (m == 0) {
        Z = Eigen::MatrixXd::Identity(nF, nF);
      } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(AF.transpose());
        qr.setThreshold(1e-12);
        const Eigen::Index rank = qr.rank();
        const Eigen::MatrixXd Q = qr.householderQ();
        Z = Q.rightCols(nF - rank);
      }
      if (Z.cols() > 0) {
        Eigen::MatrixXd HF(nF, nF);
        Eigen::VectorXd GF(nF);
        for (Eigen::Index a = 0; a < nF; ++a) {
          GF[a] = G[F[static_cast<std::size_t>(a)]];
          for (Eigen::Index b = 0; b < nF; ++b)
            HF(a, b) = H(F[static_cast<std::size_t>(a)], F[static_cast<std::size_t>(b)]);
        }
        const Eigen::MatrixXd Hr = Z.transpose() * HF * Z;
        const Eigen::VectorXd rhs = -(Z.transpose() * GF);
        Eigen::LLT<Eigen::MatrixXd> llt(Hr);
        const Eigen::VectorXd y = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(rhs))
                                                                : Eigen::VectorXd(Hr.ldlt().solve(rhs));
        qF = Z * y;
      }
    }

    if (stationary || qF.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + p.lpNorm<Eigen::Infinity>())) {
      // stationary on the working set: multipliers from the free rows, then check bound signs
      lambda = Eigen::VectorXd::Zero(m);
      if (m > 0) {
        if (nF > 0) {
          Eigen::VectorXd GF(nF);
          for (Eigen::Index a = 0; a < nF; ++a)
            GF[a] = G[F[static_cast<std::size_t>(a)]];
          lambda = AF.transpose().completeOrthogonalDecomposition().solve(-GF);
        } else {
          lambda = A.transpose().completeOrthogonalDecomposition().solve(-G);
        }
      }
      z = G + A.transpose() * lambda;
      Eigen::Index worst = -1;
      double worst_violation = 1e-12 * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Bound b = state[static_cast<std::size_t>(i)];
        double violation = 0.0;
        if (b == Bound::lower)
          violation = -z[i];
        else if (b == Bound::upper)
          violation = z[i];
        if (violation > worst_violation) {
          worst_violation = violation;
          worst = i;
        }
      }
      if (worst < 0) {
        for (Eigen::Index k = 0; k < nF; ++k)
          z[F[static_cast<std::size_t>(k)]] = 0.0;
        return it;
      }
      state[static_cast<std::size_t>(worst)] = Bound::free;
      stationary = false;
      continue;
    }

    double alpha = 1.0;
    Eigen::Index block = -1;
    Bound block_side = Bound::free;
    for (Eigen::Index k = 0; k < nF; ++k) {
      const Eigen::Index i = F[static_cast<std::size_t>(k)];
      if (qF[k] < 0.0) {
        const double t = (lo[i] - p[i]) / qF[k];
        if (t < alpha) {
          alpha = std::max(t, 0.0);
          block = i;
          block_side = Bound::lower;
        }
      } else if (qF[k] > 0.0) {
        const double t = (hi[i] - p[i]) / qF[k];
        if (t < alpha) {
          alpha = std::max(t, 0.0);
          block = i;
          block_side = Bound::upper;
        }
      }
    }
    for (Eigen::Index k = 0; k < nF; ++k)
      p[F[static_cast<std::size_t>(k)]] += alpha * qF[k];
    if (block >= 0) {
      p[block] = block_side == Bound::lower ? lo[block] : hi[block];
      state[static_cast<std::size_t>(block)] = block_side;
    } else {
      stationary = true; // full step reached the working-set minimizer
    }
  }
  throw numerical_error("QP active-set iteration did not terminate");
}

std::vector<Bound> initial_state(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, Eigen::VectorXd& p)
{
  std::vector<Bound> state(static_cast<std::size_t>(p.size()), Bound::free);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    auto& s = state[static_cast<std::size_t>(i)];
    if (lo[i] >= hi[i]) {
      s = Bound::fixed;
      p[i] = lo[i];
    } else if (p[i] <= lo[i]) {
      s = Bound::lower;
      p[i] = lo[i];
    } else if (p[i] >= hi[i]) {
      s = Bound::upper;
      p[i] = hi[i];
    }
  }
  return state;
}

} // namespace

QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& r, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
  const Eigen::Index n = H.rows(), m = A.rows();
  if ((lo.array() > hi.array()).any())
    throw infeasible_error("QP bounds are inconsistent");
  QpResult out;
  out.p = Eigen::VectorXd::Zero(n).cwiseMax(lo).cwiseMin(hi);
  out.r_used = r;

  if (m > 0) {
    // phase 1: closest point to A p = r inside the box (slightly regularized least squares)
    const Eigen::MatrixXd AtA = A.transpose() * A;
    const double diag = AtA.diagonal().maxCoeff();
    const double eps = diag > 0.0 ? 1e-14 * diag : 1.0;
    const Eigen::MatrixXd H1 = AtA + eps * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd g1 = -(A.transpose() * r);
    std::vector<Bound> st1 = initial_state(lo, hi, out.p);
    Eigen::VectorXd lam1, z1;
    out.iterations += active_set(H1, g1, Eigen::MatrixXd(0, n), lo, hi, out.p, st1, lam1, z1);
    const Eigen::VectorXd achieved = A * out.p;
    if ((achieved - r).lpNorm<Eigen::Infinity>() > 1e-10 * (1.0 + r.lpNorm<Eigen::Infinity>()))
      out.r_used = achieved; // inconsistent linearization: enforce the nearest attainable target
  }

  std::vector<Bound> state = initial_state(lo, hi, out.p);
  out.iterations += active_set(H, g, A, lo, hi, out.p, state, out.lambda, out.z);
  return out;
}

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
  return x.cwiseMax(lo).cwiseMin(hi);
}

struct Point
{
  Eigen::VectorXd x;
  NlpEvaluation ev;
  Eigen::VectorXd c;   // all equality residuals
  Eigen::MatrixXd jac; // all equality gradients
};

} // namespace

OptimizationResult sqp_solve(const NlpProblem& problem, const SqpOptions& opts)
{
  const Eigen::Index n = problem.n();
  const auto m_lin = static_cast<Eigen::Index>(problem.linear.size());
  const Eigen::Index m = m_lin + problem.n_nonlinear;
  if (problem.lower.size() != n || problem.upper.size() != n)
    throw std::invalid_argument("bound vectors do not match the variable count");
  if ((problem.lower.array() > problem.upper.array()).any())
    throw infeasible_error("lower bound exceeds upper bound");

  Eigen::MatrixXd A_lin(m_lin, n);
  Eigen::VectorXd b_lin(m_lin);
  for (Eigen::Index k = 0; k < m_lin; ++k) {
    const auto& lin = problem.linear[static_cast<std::size_t>(k)];
    if (lin.a.size() != n)
      throw std::invalid_argument("linear constraint length does not match the variable count");
    A_lin.row(k) = lin.a.transpose();
    b_lin[k] = lin.rhs;
  }

  OptimizationResult result;
  auto evaluate = [&](const Eigen::VectorXd& x, bool grads) {
    Point pt;
    pt.x = x;
    pt.ev = problem.evaluate(x, grads);
    ++result.evaluations;
    if (!std::isfinite(pt.ev.f) || (grads && !pt.ev.grad.allFinite()))
      throw numerical_error("objective callback returned non-finite values");
    if (pt.ev.c.size() != problem.n_nonlinear)
      throw std::invalid_argument("nonlinear constraint count mismatch");
    pt.c.resize(m);
    pt.c << A_lin * x - b_lin, pt.ev.c;
    if (!pt.c.allFinite())
      throw numerical_error("constraint callback returned non-finite values");
    if (grads) {
      pt.jac.resize(m, n);
      if (problem.n_nonlinear > 0)
        pt.jac << A_lin, pt.ev.jac;
      else
        pt.jac = A_lin;
    }
    return pt;
  };

  const Eigen::VectorXd& lower = problem.lower;
  const Eigen::VectorXd& upper = problem.upper;
  Point cur = evaluate(project(problem.x0, lower, upper), true);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  bool first_update = true;
  double nu = 0.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  auto finish = [&](SqpStatus status, const QpResult& qp, double kkt) {
    result.status = status;
    result.x = cur.x;
    result.objective = cur.ev.f;
    result.multipliers = qp.lambda;
    result.bound_multipliers = qp.z;
    result.kkt_residual = kkt;
    result.constraint_violation = m > 0 ? cur.c.lpNorm<Eigen::Infinity>() : 0.0;
    return result;
  };

  for (int k = 0;; ++k) {
    const QpResult qp = solve_qp(B, cur.ev.grad, cur.jac, -cur.c, lower - cur.x, upper - cur.x);
    const Eigen::VectorXd grad_L = cur.ev.grad + cur.jac.transpose() * qp.lambda;
    const double kkt = (cur.x - project(cur.x - grad_L, lower, upper)).lpNorm<Eigen::Infinity>();
    const double cviol = m > 0 ? cur.c.lpNorm<Eigen::Infinity>() : 0.0;
    const double c1 = cur.c.lpNorm<1>();

    nu = std::max(nu, 1.1 * (m > 0 ? qp.lambda.lpNorm<Eigen::Infinity>() : 0.0));
    const double merit0 = cur.ev.f + nu * c1;
    result.history.push_back({k, cur.ev.f, qp.p.norm(), merit0, kkt, cviol});
    result.iterations = k;

    if (kkt <= opts.tol_kkt && cviol <= opts.tol_con)
      return finish(SqpStatus::converged, qp, kkt);
    if (k >= opts.max_iter)
      return finish(SqpStatus::max_iter, qp, kkt);

    const double predicted_c1 = m > 0 ? (cur.c + cur.jac * qp.p).lpNorm<1>() : 0.0;
    const double slope = cur.ev.grad.dot(qp.p) - nu * (c1 - predicted_c1);

    // the QP lands active variables exactly on their bounds; keep them there at full steps
    auto trial_point = [&](double alpha) {
      Eigen::VectorXd xt = project(cur.x + alpha * qp.p, lower, upper);
      if (alpha == 1.0)
        for (Eigen::Index i = 0; i < n; ++i) {
          if (qp.p[i] == lower[i] - cur.x[i]) xt[i] = lower[i];
          if (qp.p[i] == upper[i] - cur.x[i]) xt[i] = upper[i];
        }
      return xt;
    };

    double alpha = 1.0;
    Eigen::VectorXd x_new;
    bool accepted = false;
    while (alpha >= opts.min_step) {
      x_new = trial_point(alpha);
      const Point trial = evaluate(x_new, false);
      const double merit = trial.ev.f + nu * (m > 0 ? trial.c.lpNorm<1>() : 0.0);
      const double noise = 10.0 * eps * (std::abs(merit0) + 1e-300);
      if (merit <= merit0 + opts.armijo * alpha * slope ||
          (std::abs(opts.armijo * alpha * slope) <= noise && merit <= merit0 + noise)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      return finish(SqpStatus::line_search_failure, qp, kkt);

    Point next = evaluate(x_new, true);
    const Eigen::VectorXd s = next.x - cur.x;
    const Eigen::VectorXd y = (next.ev.grad + next.jac.transpose() * qp.lambda) - grad_L;
    if (s.squaredNorm() > 0.0) {
      const double sy = s.dot(y);
      if (first_update && sy > 0.0) {
        B = Eigen::MatrixXd::Identity(n, n) * (y.squaredNorm() / sy);
        first_update = false;
      }
      // Powell damping keeps B positive definite
      const Eigen::VectorXd Bs = B * s;
      const double sBs = s.dot(Bs);
      if (sBs > 0.0) {
        const double theta = sy >= 0.2 * sBs ? 1.0 : 0.8 * sBs / (sBs - sy);
        const Eigen::VectorXd r = theta * y + (1.0 - theta) * Bs;
        const double sr = s.dot(r);
        if (sr > 0.0)
          B += r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
        B = 0.5 * (B + B.transpose());
      }
    }
    cur = std::move(next);
  }
}

void write_history_csv(std::ostream& out, const OptimizationResult& result)
{
  out << "iteration,objective,kkt_residual,constraint_violation,step_norm,merit\n";
  for (const auto& h : result.history)
    out << h.iter << ',' << h.objective << ',' << h.kkt_residual << ',' << h.constraint_violation << ','
        << h.step_norm << ',' << h.merit << '\n';
}

} // namespace tolopt
