#pragma once

// Variational invariance checks and fractional Noether conservation laws in
// Lagrangian form, evaluated along sampled trajectories.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracnoether/expr.hpp"
#include "fracnoether/fracops.hpp"
#include "fracnoether/variational.hpp"

namespace fracnoether {

/// Infinitesimal generators of t -> t + eps*tau, q -> q + eps*xi, as
/// expressions in t and q0...
struct SymmetryGenerators {
  expr::Expr tau;
  std::vector<expr::Expr> xi;
};

struct ConservationReport {
  GridFunction residual;
  double interior_norm = 0.0;
  double interior_max = 0.0;
  /// (N, interior_norm) for each grid of a refinement study.
  std::vector<std::pair<int, double>> grid_refinement_trace;
  std::vector<std::string> warnings;
};

/// Width of the excluded boundary layer: max(2, ceil(0.05 N)).
int boundary_layer_width(int n);

/// sqrt(h * sum r_i^2) over unflagged nodes outside the boundary layer.
double interior_norm(const GridFunction& r);
double interior_max(const GridFunction& r);

ConservationReport make_report(GridFunction residual);

/// sum_k d2L_k xi_k + d3L_k RieszCaputoD^alpha(xi_k) along q (tau ignored).
GridFunction invariance_residual(const VariationalProblem& prob, const SymmetryGenerators& gen, const Trajectory& q);

/// sum_k dt_gamma(d3L_k, xi_k, alpha) along q. When `reference_el_norm` is
/// given, a warning is attached if the interior norm of el_residual exceeds
/// ten times it.
ConservationReport momentum_law_residual(const VariationalProblem& prob, const SymmetryGenerators& gen,
                                         const Trajectory& q, std::optional<double> reference_el_norm = std::nullopt);

/// momentum law plus dt_gamma(L - alpha * sum_k d3L_k v_k, tau, alpha).
ConservationReport noether_residual(const VariationalProblem& prob, const SymmetryGenerators& gen,
                                    const Trajectory& q, std::optional<double> reference_el_norm = std::nullopt);

/// Runs `report_on` for each N and returns the last report with the
/// (N, interior_norm) trace of all of them.
ConservationReport refinement_study(const std::vector<int>& ns, const std::function<ConservationReport(int)>& report_on);

struct InvarianceReport {
  enum class Mode { Shift, AffineTime };
  Mode mode = Mode::Shift;
  std::vector<double> eps;
  /// Shift: I[q + eps xi] - I[q]. AffineTime: largest gap between the
  /// original and transformed functionals over the whole interval and its
  /// two halves.
  std::vector<double> delta;
  /// Shift mode only: fitted dI/d eps at 0 and the quadrature of
  /// invariance_residual it should match.
  double slope = 0.0;
  double residual_integral = 0.0;
  double slope_mismatch = 0.0;  // relative
  bool slope_matches = true;
  bool invariant = false;
};

/// Numerical check of variational invariance. tau == 0 uses the shift
/// q + eps xi; tau = c0 + c1 t (no q dependence) maps the grid affinely and
/// compares functionals directly. Any other tau raises UnsupportedError.
InvarianceReport check_invariance_numeric(const VariationalProblem& prob, const SymmetryGenerators& gen,
                                          const Trajectory& q, const std::vector<double>& eps_list);

}  // namespace fracnoether
