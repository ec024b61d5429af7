#pragma once

// Fractional optimal control in Lagrange form:
//
//   minimize  int_a^b L(t, q, u) dt
//   subject to  RC-D^alpha q = phi(t, q, u),  q(a) = q_a.
//
// Expressions use t, q0.., u0.. (and p0.. for Hamiltonian quantities).

#include <optional>
#include <vector>

#include "fracnoether/expr.hpp"
#include "fracnoether/fracops.hpp"
#include "fracnoether/noether.hpp"

namespace fracnoether {

class ControlProblem {
 public:
  ControlProblem(Grid grid, FracOrder alpha, int n, int m, expr::Expr lagrangian, std::vector<expr::Expr> dynamics,
                 std::vector<double> qa, std::optional<std::vector<double>> qb = std::nullopt);

  const Grid& grid() const { return grid_; }
  FracOrder alpha() const { return alpha_; }
  int n() const { return n_; }
  int m() const { return m_; }
  const expr::Expr& lagrangian() const { return lagrangian_; }
  const std::vector<expr::Expr>& dynamics() const { return dynamics_; }
  const std::vector<double>& qa() const { return qa_; }
  /// Fixed terminal state; when present it replaces the closure p(b) = 0.
  const std::optional<std::vector<double>>& qb() const { return qb_; }
  expr::VarSet vars() const { return expr::VarSet::control(n_, m_); }

  ControlProblem with_grid(const Grid& grid) const;
  ControlProblem with_alpha(FracOrder alpha) const;

  /// t does not occur in L or phi.
  bool autonomous() const;

 private:
  Grid grid_;
  FracOrder alpha_;
  int n_;
  int m_;
  expr::Expr lagrangian_;
  std::vector<expr::Expr> dynamics_;
  std::vector<double> qa_;
  std::optional<std::vector<double>> qb_;
};

struct PontryaginTriple {
  Trajectory q;
  Trajectory u;
  Trajectory p;
};

/// Generators of t -> t + eps tau, q -> q + eps xi, u -> u + eps rho,
/// p -> p + eps sigma. Empty rho/sigma mean zero.
struct ControlGenerators {
  expr::Expr tau;
  std::vector<expr::Expr> xi;
  std::vector<expr::Expr> rho;
  std::vector<expr::Expr> sigma;
};

/// H = L + sum_k p_k phi_k.
expr::Expr hamiltonian(const ControlProblem& prob);

struct PontryaginResidual {
  Trajectory state;         // RC-D^alpha q_k - phi_k
  Trajectory costate;       // RieszD^alpha p_k + dH/dq_k
  Trajectory stationarity;  // dH/du_j
};

PontryaginResidual pontryagin_residual(const ControlProblem& prob, const PontryaginTriple& trip);

struct LqOptions {
  int max_n = 4097;
};

/// True when L is quadratic and phi affine in (q, u) (coefficients may
/// depend on t), probed at pseudo-random points.
bool is_linear_quadratic(const ControlProblem& prob);

/// Solves the discrete Pontryagin system of a linear-quadratic problem as
/// one dense linear system. Rows per component: q(a) = q_a and the state
/// equation at every node, the costate equation at nodes 1..N-2 plus the
/// closure p(b) = 0 (or q(b) = q_b when given), and stationarity at every
/// node. Throws ValidationError for non-LQ input or N > opts.max_n, and
/// NumericError when the system is singular.
PontryaginTriple solve_lq(const ControlProblem& prob, LqOptions opts = {});

/// Trapezoid quadrature of H - sum_k p_k RC-D^alpha q_k.
double augmented_functional(const ControlProblem& prob, const PontryaginTriple& trip);

/// Trapezoid quadrature of L along the triple.
double cost(const ControlProblem& prob, const PontryaginTriple& trip);

/// H(t, q, u, p) at every node.
GridFunction hamiltonian_samples(const ControlProblem& prob, const PontryaginTriple& trip);

/// dt_gamma(H - (1 - alpha) p . RC-D^alpha q, tau) - sum_k dt_gamma(p_k, xi_k).
ConservationReport hamiltonian_noether_residual(const ControlProblem& prob, const ControlGenerators& gen,
                                                const PontryaginTriple& trip);

/// H + (alpha - 1) p . RC-D^alpha q at every node. Requires an autonomous problem.
GridFunction autonomous_invariant(const ControlProblem& prob, const PontryaginTriple& trip);

/// The same quantity as an expression, with RC-D^alpha q replaced by phi.
expr::Expr autonomous_invariant_expr(const ControlProblem& prob);

}  // namespace fracnoether
