#include "fracnoether/fracops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "fracnoether/error.hpp"
#include "fracnoether/special.hpp"

namespace fracnoether {

// ---------------------------------------------------------------------------
// Grid, FracOrder, GridFunction

Grid::Grid(double a, double b, int n) : a_(a), b_(b), n_(n) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
    throw ValidationError("grid interval must satisfy a < b with finite endpoints");
  if (n < 3) throw ValidationError("grid needs at least 3 nodes, got " + std::to_string(n));
}

std::vector<double> Grid::nodes() const {
  std::vector<double> t(n_);
  for (int i = 0; i < n_; ++i) t[i] = node(i);
  return t;
}

FracOrder::FracOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("fractional order must lie in (0, 1], got " + std::to_string(alpha));
}

GridFunction::GridFunction(Grid grid)
    : grid_(grid), values_(grid.size(), 0.0), flagged_(grid.size(), false) {}

GridFunction::GridFunction(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)), flagged_(grid.size(), false) {
  if (static_cast<int>(values_.size()) != grid_.size())
    throw ValidationError("grid function has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(grid_.size()) + " nodes");
}

GridFunction::GridFunction(Grid grid, std::vector<double> values, std::vector<bool> flagged)
    : GridFunction(grid, std::move(values)) {
  if (static_cast<int>(flagged.size()) != grid_.size()) throw ValidationError("flag array length mismatch");
  flagged_ = std::move(flagged);
}

GridFunction GridFunction::sample(const Grid& grid, const expr::Expr& f) {
  const auto vars = expr::VarSet::time_only();
  expr::check_scope(f, vars, "sampled function");
  const expr::Program prog(f, vars);
  std::vector<double> v(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    v[i] = prog(std::span<const double>(&t, 1));
  }
  return GridFunction(grid, std::move(v));
}

GridFunction GridFunction::constant(const Grid& grid, double c) {
  return GridFunction(grid, std::vector<double>(grid.size(), c));
}

bool GridFunction::any_flagged() const {
  return std::find(flagged_.begin(), flagged_.end(), true) != flagged_.end();
}

void GridFunction::require_finite(std::string_view what) const {
  for (int i = 0; i < size(); ++i)
    if (!std::isfinite(values_[i]))
      throw ValidationError(std::string(what) + ": non-finite value at node " + std::to_string(i));
}

void require_same_grid(const GridFunction& f, const GridFunction& g) {
  if (!(f.grid() == g.grid())) throw ValidationError("grid functions live on different grids");
}

namespace {

template <class Op>
GridFunction pointwise(const GridFunction& f, const GridFunction& g, Op op) {
  require_same_grid(f, g);
  std::vector<double> v(f.size());
  std::vector<bool> flags(f.size());
  for (int i = 0; i < f.size(); ++i) {
    v[i] = op(f[i], g[i]);
    flags[i] = f.flagged(i) || g.flagged(i);
  }
  return GridFunction(f.grid(), std::move(v), std::move(flags));
}

}  // namespace

GridFunction operator+(const GridFunction& f, const GridFunction& g) {
  return pointwise(f, g, [](double x, double y) { return x + y; });
}
GridFunction operator-(const GridFunction& f, const GridFunction& g) {
  return pointwise(f, g, [](double x, double y) { return x - y; });
}
GridFunction operator*(const GridFunction& f, const GridFunction& g) {
  return pointwise(f, g, [](double x, double y) { return x * y; });
}
GridFunction operator*(double c, const GridFunction& f) {
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x *= c;
  return GridFunction(f.grid(), std::move(v), f.flags());
}

// ---------------------------------------------------------------------------
// Operator names

namespace {
struct KindName {
  OperatorKind kind;
  std::string_view name;
};
constexpr KindName kKindNames[] = {
    {OperatorKind::LeftRLIntegral, "left-rl-integral"},
    {OperatorKind::RightRLIntegral, "right-rl-integral"},
    {OperatorKind::RieszIntegral, "riesz-integral"},
    {OperatorKind::LeftRLDerivative, "left-rl-derivative"},
    {OperatorKind::RightRLDerivative, "right-rl-derivative"},
    {OperatorKind::LeftCaputo, "left-caputo"},
    {OperatorKind::RightCaputo, "right-caputo"},
    {OperatorKind::RieszDerivative, "riesz-derivative"},
    {OperatorKind::RieszCaputo, "riesz-caputo"},
};
}  // namespace

std::string_view to_string(OperatorKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

OperatorKind operator_kind_from_string(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  std::ostringstream msg;
  msg << "unknown operator kind '" << name << "'; expected one of";
  for (const auto& kn : kKindNames) msg << ' ' << kn.name;
  throw ValidationError(msg.str());
}

// ---------------------------------------------------------------------------
// Discrete kernels (left-sided; right-sided kinds are mirror images)

namespace {

// L1 weights b_j = (j+1)^(1-alpha) - j^(1-alpha).
std::vector<double> l1_weights(int n, double alpha) {
  std::vector<double> b(n);
  const double e = 1.0 - alpha;
  for (int j = 0; j < n; ++j) b[j] = std::pow(j + 1.0, e) - std::pow(static_cast<double>(j), e);
  return b;
}

// Product-trapezoid weights for the left RL integral of order beta:
//   I(t_k) = h^beta / Gamma(beta + 2) * (first[k] f_0 + sum_{j=1}^{k-1} inner[k-j] f_j + f_k).
struct IntegralWeights {
  std::vector<double> first;
  std::vector<double> inner;
  double scale;
};

IntegralWeights integral_weights(int n, double beta, double h) {
  IntegralWeights w;
  w.first.assign(n, 0.0);
  w.inner.assign(n, 0.0);
  const double p = beta + 1.0;
  for (int k = 1; k < n; ++k) {
    const double kd = k;
    w.first[k] = std::pow(kd - 1.0, p) - (kd - beta - 1.0) * std::pow(kd, beta);
    w.inner[k] = std::pow(kd + 1.0, p) - 2.0 * std::pow(kd, p) + std::pow(kd - 1.0, p);
  }
  w.scale = std::pow(h, beta) / gamma(beta + 2.0);
  return w;
}

std::vector<double> left_integral(std::span<const double> f, double h, double beta) {
  const int n = static_cast<int>(f.size());
  const auto w = integral_weights(n, beta, h);
  std::vector<double> out(n, 0.0);
  for (int k = 1; k < n; ++k) {
    double s = w.first[k] * f[0] + f[k];
    for (int j = 1; j < k; ++j) s += w.inner[k - j] * f[j];
    out[k] = w.scale * s;
  }
  return out;
}

std::vector<double> left_caputo(std::span<const double> f, double h, double alpha) {
  const int n = static_cast<int>(f.size());
  const auto b = l1_weights(n, alpha);
  const double scale = 1.0 / (gamma(2.0 - alpha) * std::pow(h, alpha));
  std::vector<double> out(n, 0.0);
  for (int k = 1; k < n; ++k) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += b[j] * (f[k - j] - f[k - j - 1]);
    out[k] = scale * s;
  }
  return out;
}

// f(a) (t - a)^(-alpha) / Gamma(1 - alpha) at node k >= 1
double rl_boundary_coefficient(int k, double h, double alpha) {
  return std::pow(k * h, -alpha) / gamma(1.0 - alpha);
}

std::vector<double> left_rl_derivative(std::span<const double> f, double h, double alpha) {
  auto out = left_caputo(f, h, alpha);
  const int n = static_cast<int>(f.size());
  for (int k = 1; k < n; ++k) out[k] += f[0] * rl_boundary_coefficient(k, h, alpha);
  out[0] = out[1];
  return out;
}

std::vector<double> reversed(std::span<const double> f) { return std::vector<double>(f.rbegin(), f.rend()); }

bool is_left(OperatorKind k) {
  return k == OperatorKind::LeftRLIntegral || k == OperatorKind::LeftRLDerivative || k == OperatorKind::LeftCaputo;
}

OperatorKind mirror_kind(OperatorKind k) {
  switch (k) {
    case OperatorKind::RightRLIntegral: return OperatorKind::LeftRLIntegral;
    case OperatorKind::RightRLDerivative: return OperatorKind::LeftRLDerivative;
    case OperatorKind::RightCaputo: return OperatorKind::LeftCaputo;
    default: return k;
  }
}

std::vector<double> apply_left(OperatorKind kind, double alpha, std::span<const double> f, double h) {
  const bool classical = alpha == 1.0;
  switch (kind) {
    case OperatorKind::LeftRLIntegral:
      return left_integral(f, h, alpha);
    case OperatorKind::LeftCaputo:
      return classical ? finite_difference(f, h) : left_caputo(f, h, alpha);
    case OperatorKind::LeftRLDerivative:
      return classical ? finite_difference(f, h) : left_rl_derivative(f, h, alpha);
    default:
      break;
  }
  throw ValidationError("internal: not a left-sided operator");
}

// Values for one-sided kinds; right kinds evaluate the left kind on the
// reflected samples and reflect back. For alpha == 1 the reflection turns
// d/dt into -d/dt, as required for right-sided kinds.
std::vector<double> apply_one_sided(OperatorKind kind, double alpha, std::span<const double> f, double h) {
  if (is_left(kind)) return apply_left(kind, alpha, f, h);
  const auto g = reversed(f);
  const auto out = apply_left(mirror_kind(kind), alpha, g, h);
  return reversed(out);
}

}  // namespace

std::vector<double> finite_difference(std::span<const double> f, double h) {
  const int n = static_cast<int>(f.size());
  if (n < 3) throw ValidationError("finite differences need at least 3 nodes");
  std::vector<double> d(n);
  for (int i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return d;
}

std::vector<bool> flagged_nodes(OperatorKind kind, FracOrder alpha, const Grid& grid) {
  std::vector<bool> flags(grid.size(), false);
  if (alpha.classical()) return flags;
  const int last = grid.size() - 1;
  switch (kind) {
    case OperatorKind::LeftRLDerivative: flags[0] = true; break;
    case OperatorKind::RightRLDerivative: flags[last] = true; break;
    case OperatorKind::RieszDerivative: flags[0] = flags[last] = true; break;
    default: break;
  }
  return flags;
}

GridFunction apply(OperatorKind kind, FracOrder alpha, const GridFunction& f) {
  f.require_finite(std::string("input to ") + std::string(to_string(kind)));
  const double h = f.grid().h();
  const double a = alpha.value();
  std::vector<double> out;
  switch (kind) {
    case OperatorKind::RieszIntegral: {
      const auto l = apply_one_sided(OperatorKind::LeftRLIntegral, a, f.values(), h);
      const auto r = apply_one_sided(OperatorKind::RightRLIntegral, a, f.values(), h);
      out.resize(l.size());
      for (std::size_t i = 0; i < l.size(); ++i) out[i] = 0.5 * (l[i] + r[i]);
      break;
    }
    case OperatorKind::RieszDerivative:
    case OperatorKind::RieszCaputo: {
      const bool rl = kind == OperatorKind::RieszDerivative;
      const auto l = apply_one_sided(rl ? OperatorKind::LeftRLDerivative : OperatorKind::LeftCaputo, a, f.values(), h);
      const auto r = apply_one_sided(rl ? OperatorKind::RightRLDerivative : OperatorKind::RightCaputo, a, f.values(), h);
      out.resize(l.size());
      for (std::size_t i = 0; i < l.size(); ++i) out[i] = 0.5 * (l[i] - r[i]);
      break;
    }
    default:
      out = apply_one_sided(kind, a, f.values(), h);
      break;
  }
  return GridFunction(f.grid(), std::move(out), flagged_nodes(kind, alpha, f.grid()));
}

Trajectory apply(OperatorKind kind, FracOrder alpha, const Trajectory& f) {
  Trajectory out;
  out.reserve(f.size());
  for (const auto& comp : f) out.push_back(apply(kind, alpha, comp));
  return out;
}

// ---------------------------------------------------------------------------
// Matrix form

namespace {

Eigen::MatrixXd left_matrix(OperatorKind kind, double alpha, int n, double h) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const bool classical = alpha == 1.0;
  if (kind == OperatorKind::LeftRLIntegral) {
    const auto w = integral_weights(n, alpha, h);
    for (int k = 1; k < n; ++k) {
      m(k, 0) += w.scale * w.first[k];
      for (int j = 1; j < k; ++j) m(k, j) += w.scale * w.inner[k - j];
      m(k, k) += w.scale;
    }
    return m;
  }
  if (classical) {
    for (int i = 1; i + 1 < n; ++i) {
      m(i, i + 1) = 1.0 / (2.0 * h);
      m(i, i - 1) = -1.0 / (2.0 * h);
    }
    m(0, 0) = -3.0 / (2.0 * h);
    m(0, 1) = 4.0 / (2.0 * h);
    m(0, 2) = -1.0 / (2.0 * h);
    m(n - 1, n - 1) = 3.0 / (2.0 * h);
    m(n - 1, n - 2) = -4.0 / (2.0 * h);
    m(n - 1, n - 3) = 1.0 / (2.0 * h);
    return m;
  }
  const auto b = l1_weights(n, alpha);
  const double scale = 1.0 / (gamma(2.0 - alpha) * std::pow(h, alpha));
  for (int k = 1; k < n; ++k) {
    for (int j = 0; j < k; ++j) {
      m(k, k - j) += scale * b[j];
      m(k, k - j - 1) -= scale * b[j];
    }
  }
  if (kind == OperatorKind::LeftRLDerivative) {
    for (int k = 1; k < n; ++k) m(k, 0) += rl_boundary_coefficient(k, h, alpha);
    m.row(0) = m.row(1);
  }
  return m;
}

Eigen::MatrixXd one_sided_matrix(OperatorKind kind, double alpha, int n, double h) {
  if (is_left(kind)) return left_matrix(kind, alpha, n, h);
  Eigen::MatrixXd l = left_matrix(mirror_kind(kind), alpha, n, h);
  return l.reverse();  // reverses rows and columns
}

}  // namespace

Eigen::MatrixXd operator_matrix(OperatorKind kind, FracOrder alpha, const Grid& grid) {
  const int n = grid.size();
  const double h = grid.h();
  const double a = alpha.value();
  switch (kind) {
    case OperatorKind::RieszIntegral:
      return 0.5 * (one_sided_matrix(OperatorKind::LeftRLIntegral, a, n, h) +
                    one_sided_matrix(OperatorKind::RightRLIntegral, a, n, h));
    case OperatorKind::RieszDerivative:
      return 0.5 * (one_sided_matrix(OperatorKind::LeftRLDerivative, a, n, h) -
                    one_sided_matrix(OperatorKind::RightRLDerivative, a, n, h));
    case OperatorKind::RieszCaputo:
      return 0.5 * (one_sided_matrix(OperatorKind::LeftCaputo, a, n, h) -
                    one_sided_matrix(OperatorKind::RightCaputo, a, n, h));
    default:
      return one_sided_matrix(kind, a, n, h);
  }
}

// ---------------------------------------------------------------------------
// Quadrature oracle

namespace {

struct Integrand {
  expr::Program program;
  double operator()(double t) const { return program(std::span<const double>(&t, 1)); }
};

// (1/Gamma(beta)) * integral of |t - theta|^(beta - 1) g(theta) over [a, t]
// (left) or [t, b] (right). The substitution theta = t -+ L s^r with
// r = 2 / beta grades the midpoint panels toward theta = t and leaves the
// integrand L^beta r s g(theta(s)) in the unit variable.
double graded_kernel_integral(const Integrand& g, double beta, double a, double b, double t, bool left,
                              const OracleOptions& opts) {
  const double length = left ? t - a : b - t;
  if (length <= 0) return 0.0;
  const double r = 2.0 / beta;
  const double scale = std::pow(length, beta) * r / gamma(beta);
  auto estimate = [&](long panels) {
    const double ds = 1.0 / static_cast<double>(panels);
    double sum = 0.0;
    for (long i = 0; i < panels; ++i) {
      const double s = (static_cast<double>(i) + 0.5) * ds;
      const double theta = left ? t - length * std::pow(s, r) : t + length * std::pow(s, r);
      sum += std::pow(s, r * beta - 1.0) * g(theta);
    }
    return scale * sum * ds;
  };
  double previous = estimate(2);
  for (int level = 2; level <= opts.max_levels; ++level) {
    const double current = estimate(1L << level);
    if (std::abs(current - previous) < opts.tol) return current;
    previous = current;
    if (level == opts.max_levels) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "oracle quadrature did not converge after " << opts.max_levels << " levels (last estimates "
          << previous << ", " << current << ")";
      throw NumericError(msg.str());
    }
  }
  return previous;
}

}  // namespace

double apply_oracle(OperatorKind kind, FracOrder alpha, const expr::Expr& f, double a, double b, double t,
                    OracleOptions opts) {
  if (!(a < b) || t < a || t > b) throw ValidationError("oracle point must lie in [a, b] with a < b");
  const auto vars = expr::VarSet::time_only();
  expr::check_scope(f, vars, "oracle function");
  const Integrand fv{expr::Program(f, vars)};
  const Integrand dfv{expr::Program(expr::diff(f, "t"), vars)};
  const double al = alpha.value();
  const bool classical = alpha.classical();

  auto left_caputo = [&] {
    return classical ? dfv(t) : graded_kernel_integral(dfv, 1.0 - al, a, b, t, true, opts);
  };
  auto right_caputo = [&] {
    return classical ? -dfv(t) : -graded_kernel_integral(dfv, 1.0 - al, a, b, t, false, opts);
  };
  auto left_rl = [&] {
    if (classical) return dfv(t);
    const double fa = fv(a);
    if (t == a) {
      if (fa != 0.0) throw NumericError("left RL derivative is singular at t = a when f(a) != 0");
      return 0.0;
    }
    return left_caputo() + fa * std::pow(t - a, -al) / gamma(1.0 - al);
  };
  auto right_rl = [&] {
    if (classical) return -dfv(t);
    const double fb = fv(b);
    if (t == b) {
      if (fb != 0.0) throw NumericError("right RL derivative is singular at t = b when f(b) != 0");
      return 0.0;
    }
    return right_caputo() + fb * std::pow(b - t, -al) / gamma(1.0 - al);
  };
  auto left_int = [&] { return graded_kernel_integral(fv, al, a, b, t, true, opts); };
  auto right_int = [&] { return graded_kernel_integral(fv, al, a, b, t, false, opts); };

  switch (kind) {
    case OperatorKind::LeftRLIntegral: return left_int();
    case OperatorKind::RightRLIntegral: return right_int();
    case OperatorKind::RieszIntegral: return 0.5 * (left_int() + right_int());
    case OperatorKind::LeftRLDerivative: return left_rl();
    case OperatorKind::RightRLDerivative: return right_rl();
    case OperatorKind::LeftCaputo: return left_caputo();
    case OperatorKind::RightCaputo: return right_caputo();
    case OperatorKind::RieszDerivative: return 0.5 * (left_rl() - right_rl());
    case OperatorKind::RieszCaputo: return 0.5 * (left_caputo() - right_caputo());
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

GridFunction dt_gamma(const GridFunction& f, const GridFunction& g, FracOrder gamma_order) {
  require_same_grid(f, g);
  return g * apply(OperatorKind::RieszDerivative, gamma_order, f) + f * apply(OperatorKind::RieszCaputo, gamma_order, g);
}

std::vector<double> trapezoid_weights(const Grid& grid) {
  std::vector<double> w(grid.size(), grid.h());
  w.front() = w.back() = 0.5 * grid.h();
  return w;
}

double trapezoid(const GridFunction& f) {
  const auto w = trapezoid_weights(f.grid());
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

}  // namespace fracnoether
