#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tolopt {

/// Objective and nonlinear equality constraints at one point. Gradients are only filled when
/// requested.
struct NlpEvaluation
{
  double f = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd c;   ///< nonlinear equality residuals, c(x) = 0 at a solution
  Eigen::MatrixXd jac; ///< rows = constraints
};

/// a . x = rhs
struct LinearEquality
{
  Eigen::VectorXd a;
  double rhs = 0.0;
};

/// min f(x) s.t. linear equalities, nonlinear equalities c(x) = 0, lower <= x <= upper.
struct NlpProblem
{
  std::function<NlpEvaluation(const Eigen::VectorXd& x, bool with_gradients)> evaluate;
  Eigen::Index n_nonlinear = 0;
  std::vector<LinearEquality> linear;
  Eigen::VectorXd lower, upper;
  Eigen::VectorXd x0;

  Eigen::Index n() const { return x0.size(); }
};

struct SqpOptions
{
  double tol_kkt = 1e-6;
  double tol_con = 1e-8;
  int max_iter = 200;
  double armijo = 1e-4;
  double min_step = 1e-10;
};

enum class SqpStatus { converged, max_iter, line_search_failure };

std::string to_string(SqpStatus status);

struct SqpIteration
{
  int iter = 0;
  double objective = 0.0;
  double step_norm = 0.0;
  double merit = 0.0;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
};

struct OptimizationResult
{
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Equality multipliers for L = f + lambda^T c: linear constraints first, then nonlinear.
  Eigen::VectorXd multipliers;
  /// Bound multipliers z with grad L = z; z >= 0 at active lower bounds, z <= 0 at active upper.
  Eigen::VectorXd bound_multipliers;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  std::vector<SqpIteration> history;
  SqpStatus status = SqpStatus::max_iter;
  int iterations = 0;
  int evaluations = 0;
};

/// Line-search SQP: damped-BFGS Hessian, active-set QP subproblems on the bounds with the
/// equality constraints eliminated through their null space, l1 merit backtracking.
OptimizationResult sqp_solve(const NlpProblem& problem, const SqpOptions& opts = {});

/// Dense convex QP: min 1/2 p^T H p + g^T p s.t. A p = r, lo <= p <= hi.
struct QpResult
{
  Eigen::VectorXd p;
  Eigen::VectorXd lambda; ///< H p + g + A^T lambda = z
  Eigen::VectorXd z;
  Eigen::VectorXd r_used; ///< equality right-hand side actually enforced (relaxed if inconsistent)
  int iterations = 0;
};

QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& r, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// "iteration,objective,kkt_residual,constraint_violation,step_norm,merit" rows.
void write_history_csv(std::ostream& out, const OptimizationResult& result);

} // namespace tolopt
