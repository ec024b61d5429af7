#pragma once

// Fractional integrals and derivatives of order 0 < alpha <= 1 on a uniform
// grid: left/right Riemann-Liouville integrals and derivatives, left/right
// Caputo derivatives, and their Riesz (two-sided) combinations.
//
// Discretizations:
//   * RL integrals: product trapezoid rule (piecewise-linear interpolant,
//     kernel integrated exactly).
//   * Caputo derivatives: L1 scheme, O(h^(2-alpha)).
//   * RL derivatives: Caputo value plus the exact boundary term
//     f(a) (t-a)^(-alpha) / Gamma(1-alpha).
//   * right-sided operators: mirror images of the left-sided ones.
//   * Riesz kinds: half-sums/half-differences of the one-sided results.
//   * alpha == 1: derivatives are second-order finite differences (right
//     kinds carry -d/dt), integrals the running trapezoid rule.
//
// RL-derivative values at the singular endpoint (t = a for left kinds, t = b
// for right kinds) are replaced by the neighbouring interior value and
// flagged; norms and reports skip flagged nodes.

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

#include "fracnoether/expr.hpp"

namespace fracnoether {

/// Uniform partition of [a, b] with n nodes.
class Grid {
 public:
  Grid(double a, double b, int n);

  double a() const { return a_; }
  double b() const { return b_; }
  int size() const { return n_; }
  double h() const { return (b_ - a_) / (n_ - 1); }
  double node(int i) const { return i == n_ - 1 ? b_ : a_ + i * h(); }
  std::vector<double> nodes() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double a_;
  double b_;
  int n_;
};

/// Fractional order in (0, 1]; alpha == 1 is the classical case.
class FracOrder {
 public:
  explicit FracOrder(double alpha);

  double value() const { return alpha_; }
  bool classical() const { return alpha_ == 1.0; }

 private:
  double alpha_;
};

/// Real samples on a grid plus per-node flags marking values that are
/// placeholders at singular endpoints.
class GridFunction {
 public:
  explicit GridFunction(Grid grid);
  GridFunction(Grid grid, std::vector<double> values);
  GridFunction(Grid grid, std::vector<double> values, std::vector<bool> flagged);

  /// Samples an expression in `t` at every node.
  static GridFunction sample(const Grid& grid, const expr::Expr& f);
  static GridFunction constant(const Grid& grid, double c);

  const Grid& grid() const { return grid_; }
  int size() const { return grid_.size(); }
  std::span<const double> values() const& { return values_; }
  std::vector<double> values() && { return std::move(values_); }
  double operator[](int i) const { return values_[i]; }
  bool flagged(int i) const { return flagged_[i]; }
  const std::vector<bool>& flags() const { return flagged_; }
  bool any_flagged() const;

  /// Throws ValidationError on non-finite samples.
  void require_finite(std::string_view what) const;

 private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<bool> flagged_;
};

/// Component-wise vector-valued samples; every component shares one grid.
using Trajectory = std::vector<GridFunction>;

// Pointwise arithmetic; flags are OR-ed. Operands must share a grid.
GridFunction operator+(const GridFunction& f, const GridFunction& g);
GridFunction operator-(const GridFunction& f, const GridFunction& g);
GridFunction operator*(const GridFunction& f, const GridFunction& g);
GridFunction operator*(double c, const GridFunction& f);

void require_same_grid(const GridFunction& f, const GridFunction& g);

enum class OperatorKind {
  LeftRLIntegral,
  RightRLIntegral,
  RieszIntegral,
  LeftRLDerivative,
  RightRLDerivative,
  LeftCaputo,
  RightCaputo,
  RieszDerivative,
  RieszCaputo,
};

inline constexpr OperatorKind kAllOperatorKinds[] = {
    OperatorKind::LeftRLIntegral,   OperatorKind::RightRLIntegral,  OperatorKind::RieszIntegral,
    OperatorKind::LeftRLDerivative, OperatorKind::RightRLDerivative, OperatorKind::LeftCaputo,
    OperatorKind::RightCaputo,      OperatorKind::RieszDerivative,  OperatorKind::RieszCaputo,
};

/// Kebab-case names used on the command line, e.g. "left-caputo".
std::string_view to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(std::string_view name);

/// Applies the discrete operator at every node.
GridFunction apply(OperatorKind kind, FracOrder alpha, const GridFunction& f);
Trajectory apply(OperatorKind kind, FracOrder alpha, const Trajectory& f);

/// Dense matrix M with apply(kind, alpha, f).values() == M * f (up to
/// rounding). Flagged rows repeat their interior neighbour's row.
Eigen::MatrixXd operator_matrix(OperatorKind kind, FracOrder alpha, const Grid& grid);

/// Nodes that apply(kind, alpha, .) flags on this grid.
std::vector<bool> flagged_nodes(OperatorKind kind, FracOrder alpha, const Grid& grid);

struct OracleOptions {
  double tol = 1e-8;
  int max_levels = 22;
};

/// Evaluates the continuous operator applied to f (an expression in `t`)
/// at the point t of [a, b] by midpoint quadrature on a mesh graded toward
/// the kernel singularity, doubling the panel count until successive
/// estimates differ by less than opts.tol.
double apply_oracle(OperatorKind kind, FracOrder alpha, const expr::Expr& f, double a, double b,
                    double t, OracleOptions opts = {});

/// Fractional product-rule operator  g * RieszD^gamma f + f * RieszCaputoD^gamma g.
GridFunction dt_gamma(const GridFunction& f, const GridFunction& g, FracOrder gamma);

/// Classical first derivative used for alpha == 1 (central differences,
/// second-order one-sided stencils at the ends).
std::vector<double> finite_difference(std::span<const double> f, double h);

/// Trapezoid rule over the whole grid.
double trapezoid(const GridFunction& f);
std::vector<double> trapezoid_weights(const Grid& grid);

}  // namespace fracnoether
