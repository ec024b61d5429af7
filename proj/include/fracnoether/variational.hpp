#pragma once

// Fractional variational problems
//
//   I[q] = int_a^b L(t, q(t), RC-D^alpha q(t)) dt
//
// where RC-D^alpha is the Riesz-Caputo derivative on [a, b]. Lagrangians are
// expressions in t, q0.., v0.. with v standing for RC-D^alpha q.

#include <optional>
#include <vector>

#include "fracnoether/expr.hpp"
#include "fracnoether/fracops.hpp"

namespace fracnoether {

class VariationalProblem {
 public:
  VariationalProblem(Grid grid, FracOrder alpha, int n_components, expr::Expr lagrangian, std::vector<double> qa,
                     std::optional<std::vector<double>> qb = std::nullopt);

  const Grid& grid() const { return grid_; }
  FracOrder alpha() const { return alpha_; }
  int n_components() const { return n_; }
  const expr::Expr& lagrangian() const { return lagrangian_; }
  const std::vector<double>& qa() const { return qa_; }
  const std::optional<std::vector<double>>& qb() const { return qb_; }
  expr::VarSet vars() const { return expr::VarSet::variational(n_); }

  /// Same problem on another grid over the same interval.
  VariationalProblem with_grid(const Grid& grid) const;

 private:
  Grid grid_;
  FracOrder alpha_;
  int n_;
  expr::Expr lagrangian_;
  std::vector<double> qa_;
  std::optional<std::vector<double>> qb_;
};

struct SolverDiagnostics {
  int iterations = 0;
  double gradient_norm = 0.0;  // max-norm over free nodes
  bool converged = false;
  std::vector<double> objective_trace;  // initial value, then one per accepted step
};

struct Extremal {
  Trajectory q;
  double objective = 0.0;
  SolverDiagnostics diagnostics;
};

/// Trapezoid quadrature of L(t_i, q_i, RC-D^alpha q_i).
double evaluate_functional(const VariationalProblem& prob, const Trajectory& q);

/// L(t_i, q_i, RC-D^alpha q_i) at every node.
GridFunction lagrangian_samples(const VariationalProblem& prob, const Trajectory& q);

/// Gradient of evaluate_functional with respect to every nodal value,
/// component-major (entry k*N + i is d I / d q_k(t_i)). Uses the transpose of
/// the discrete Riesz-Caputo operator.
std::vector<double> functional_gradient(const VariationalProblem& prob, const Trajectory& q);

/// d2 L - RieszD^alpha(d3 L) per component; endpoint nodes are flagged.
Trajectory el_residual(const VariationalProblem& prob, const Trajectory& q);

/// RC-D^alpha of every component.
Trajectory riesz_caputo_velocity(const VariationalProblem& prob, const Trajectory& q);

/// Straight line between the boundary values (q(b) defaults to q(a)).
Trajectory linear_guess(const VariationalProblem& prob);

struct RitzOptions {
  double gradient_tol = 1e-9;
  int max_iterations = 5000;
};

/// Minimizes the discrete functional over the interior nodal values with
/// BFGS and backtracking (Armijo 1e-4, step halving), seeded with the exact
/// Hessian. Accepted steps never raise the objective by more than a few
/// ulps. Requires q(b).
/// Boundary values of `init` are overwritten. Non-convergence is reported
/// through diagnostics, not thrown.
Extremal solve_ritz(const VariationalProblem& prob, const std::optional<Trajectory>& init = std::nullopt,
                    RitzOptions opts = {});

}  // namespace fracnoether
