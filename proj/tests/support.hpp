#pragma once

// Shared helpers for the unit and acceptance suites: random expression
// generators and independent numerical oracles. Nothing here calls into
// the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fracnoether/expr.hpp"

namespace fracnoether::testing {

using expr::BinOp;
using expr::Expr;
using expr::Func;

/// Random expression over `names` with non-negative literal constants, built
/// with raw constructors so the tree shape is exactly what was generated.
class ExprGenerator {
 public:
  ExprGenerator(std::uint64_t seed, std::vector<std::string> names) : rng_(seed), names_(std::move(names)) {}

  Expr any(int depth) {
    if (depth <= 0 || coin(0.25)) return leaf();
    const int pick = std::uniform_int_distribution<int>(0, 9)(rng_);
    if (pick < 5) {
      static constexpr BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow};
      const BinOp op = ops[pick];
      if (op == BinOp::Pow) return Expr::binary(op, any(depth - 1), Expr::constant(small_int(0, 3)));
      return Expr::binary(op, any(depth - 1), any(depth - 1));
    }
    static constexpr Func fns[] = {Func::Neg, Func::Sin, Func::Cos, Func::Exp, Func::Abs};
    return Expr::unary(fns[pick - 5], any(depth - 1));
  }

  /// Polynomial in the generator's variables: sums of products with small
  /// integer powers.
  Expr polynomial(int terms, int max_degree) {
    Expr sum = Expr::constant(coefficient());
    for (int k = 0; k < terms; ++k) {
      Expr term = Expr::constant(coefficient());
      const int degree = small_int(1, max_degree);
      for (int d = 0; d < degree; ++d) term = Expr::binary(BinOp::Mul, term, variable());
      sum = Expr::binary(coin(0.5) ? BinOp::Add : BinOp::Sub, sum, term);
    }
    return sum;
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::vector<std::string> names_;

  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  int small_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double coefficient() { return std::round(uniform(0.0, 5.0) * 4.0) / 4.0; }
  Expr variable() { return Expr::variable(names_[small_int(0, static_cast<int>(names_.size()) - 1)]); }
  Expr leaf() {
    if (coin(0.6)) return variable();
    return Expr::constant(coin(0.5) ? small_int(0, 9) : std::round(uniform(0.0, 10.0) * 1000.0) / 1000.0);
  }
};

/// Five-point central difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

/// Adaptive Simpson quadrature on [a, b] for smooth
/// integrands; used to freeze reference integrals.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 40) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6 * (flo + 4 * flm + fmid);
    const double right = (hi - mid) / 6 * (fmid + 4 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
    return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), depth);
}

/// Least-squares slope of log(err) against log(h).
inline double empirical_order(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fracnoether::testing
