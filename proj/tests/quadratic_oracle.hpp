#pragma once

#include <cmath>
#include <memory>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tolopt/design.hpp"

namespace tolopt::test {

/// Tolerance problem on the quadratic model whose SAA objective is an exact quadratic form:
///
///   mean_J(sigma) = omega0 + sigma^T Q sigma,  Q = B^T diag(a_j v_j) B,
///
/// with v_j the sample mean of e~_j^2 over the fixed SampleSet. The KKT point of
/// min sigma^T Q sigma s.t. a . sigma = V_b, 0 <= sigma <= sigma_max is found independently of the
/// SQP solver: for a multiplier lambda the box QP min sigma^T Q sigma - lambda a . sigma is solved
/// by a primal active-set method, and lambda is located by bisection on the budget.
struct QuadraticOracle
{
  BladeSurface base;
  KLBasis kl;
  KnotVector kv{std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1}};
  SampleSet samples;
  Eigen::VectorXd node_weights;
  std::unique_ptr<QuadraticModel> model;
  Eigen::MatrixXd Q;
  Eigen::VectorXd a;
  double sigma_max = 8e-4;

  QuadraticOracle(BladeSurface surface, std::size_t n_basis, Eigen::Index n_samples)
      : base(std::move(surface))
  {
    CorrelationSpec c;
    c.L0 = 0.1;
    c.L_LE = 0.02;
    c.w = 0.03;
    kl = kl_decompose(base, c, 0.99);
    kv = make_knots(base.s_min(), base.s_max(), n_basis, {0.0, 0.15, 5.0});
    samples = make_samples(314, n_samples, kl.n_modes());
    // LE-concentrated weights with a positive floor so every coefficient is identifiable.
    node_weights =
        (5e3 * base.quad_weights.array() * (0.05 + (-(base.s.array() / 0.05).square()).exp())).matrix();
    QuadraticModelConfig qc;
    qc.omega0 = 0.02;
    qc.node_weights = node_weights;
    model = std::make_unique<QuadraticModel>(qc);

    Eigen::VectorXd v = Eigen::VectorXd::Zero(base.s.size());
    for (Eigen::Index n = 0; n < samples.size(); ++n)
      v += sample_unit_field(kl, samples.xi.row(n).transpose()).cwiseAbs2();
    v /= static_cast<double>(samples.size());
    const Eigen::MatrixXd B = basis_matrix(kv, base.s);
    Q = B.transpose() * node_weights.cwiseProduct(v).asDiagonal() * B;
    a = variability_coefficients(kv, base);
  }

  StudySetup setup() const
  {
    StudySetup s;
    s.model = model.get();
    s.base = &base;
    s.kl = &kl;
    s.samples = &samples;
    s.mp.alphas = Eigen::VectorXd::Zero(1);
    s.mp.weights = Eigen::VectorXd::Ones(1);
    return s;
  }

  /// argmin sigma^T Q sigma - lambda a . sigma over the box.
  Eigen::VectorXd box_minimizer(double lambda) const
  {
    const Eigen::Index n = a.size();
    const Eigen::VectorXd g0 = -lambda * a;
    // state: -1 at lower, +1 at upper, 0 free
    Eigen::VectorXi state = Eigen::VectorXi::Zero(n);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 0.5 * sigma_max);
    for (int it = 0; it < 50 * static_cast<int>(n); ++it) {
      std::vector<Eigen::Index> F;
      for (Eigen::Index i = 0; i < n; ++i)
        if (state[i] == 0)
          F.push_back(i);
      Eigen::VectorXd target = x;
      if (!F.empty()) {
        const auto nF = static_cast<Eigen::Index>(F.size());
        Eigen::MatrixXd QF(nF, nF);
        Eigen::VectorXd rhs(nF);
        for (Eigen::Index r = 0; r < nF; ++r) {
          double fixed = 0.0;
          for (Eigen::Index i = 0; i < n; ++i)
            if (state[i] != 0)
              fixed += Q(F[r], i) * x[i];
          rhs[r] = -0.5 * g0[F[r]] - fixed;
          for (Eigen::Index c = 0; c < nF; ++c)
            QF(r, c) = Q(F[r], F[c]);
        }
        const Eigen::VectorXd xf = QF.llt().solve(rhs);
        for (Eigen::Index r = 0; r < nF; ++r)
          target[F[r]] = xf[r];
      }
      // step toward the subspace minimizer, stopping at the first bound hit
      double t = 1.0;
      Eigen::Index block = -1;
      for (Eigen::Index i : F) {
        const double d = target[i] - x[i];
        if (d < 0.0 && target[i] < 0.0 && -x[i] / d < t) {
          t = -x[i] / d;
          block = i;
        }
        if (d > 0.0 && target[i] > sigma_max && (sigma_max - x[i]) / d < t) {
          t = (sigma_max - x[i]) / d;
          block = i;
        }
      }
      x += t * (target - x);
      if (block >= 0) {
        const bool upper = target[block] > sigma_max;
        x[block] = upper ? sigma_max : 0.0;
        state[block] = upper ? 1 : -1;
        continue;
      }
      // at the subspace minimizer: release the bound with the most negative multiplier
      const Eigen::VectorXd grad = 2.0 * Q * x + g0;
      Eigen::Index worst = -1;
      double worst_val = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double viol = state[i] == -1 ? -grad[i] : state[i] == 1 ? grad[i] : 0.0;
        if (viol > worst_val * (1.0 + 1e-12) + 1e-18) {
          worst_val = viol;
          worst = i;
        }
      }
      if (worst < 0)
        return x;
      state[worst] = 0;
    }
    return x;
  }

  /// KKT solution for the budget V_b.
  Eigen::VectorXd solve(double V_b) const
  {
    double lo = 0.0;
    double hi = 1.0;
    while (a.dot(box_minimizer(hi)) < V_b)
      hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi)
        break;
      (a.dot(box_minimizer(mid)) < V_b ? lo : hi) = mid;
    }
    return box_minimizer(0.5 * (lo + hi));
  }
};

} // namespace tolopt::test
