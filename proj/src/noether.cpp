#include "fracnoether/noether.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "detail/node_eval.hpp"
#include "fracnoether/error.hpp"

namespace fracnoether {

int boundary_layer_width(int n) { return std::max(2, static_cast<int>(std::ceil(0.05 * n))); }

namespace {

template <class Fn>
void for_interior(const GridFunction& r, Fn fn) {
  const int n = r.size();
  const int w = boundary_layer_width(n);
  for (int i = w; i <= n - 1 - w; ++i)
    if (!r.flagged(i)) fn(r[i]);
}

}  // namespace

double interior_norm(const GridFunction& r) {
  double sum = 0.0;
  for_interior(r, [&](double x) { sum += x * x; });
  return std::sqrt(r.grid().h() * sum);
}

double interior_max(const GridFunction& r) {
  double m = 0.0;
  for_interior(r, [&](double x) { m = std::max(m, std::abs(x)); });
  return m;
}

ConservationReport make_report(GridFunction residual) {
  ConservationReport rep{std::move(residual), 0.0, 0.0, {}, {}};
  rep.interior_norm = interior_norm(rep.residual);
  rep.interior_max = interior_max(rep.residual);
  rep.grid_refinement_trace.emplace_back(rep.residual.size(), rep.interior_norm);
  return rep;
}

ConservationReport refinement_study(const std::vector<int>& ns,
                                    const std::function<ConservationReport(int)>& report_on) {
  if (ns.empty()) throw ValidationError("refinement study needs at least one grid size");
  std::vector<std::pair<int, double>> trace;
  std::optional<ConservationReport> last;
  for (int n : ns) {
    last = report_on(n);
    trace.emplace_back(n, last->interior_norm);
  }
  last->grid_refinement_trace = std::move(trace);
  return std::move(*last);
}

namespace {

std::string qname(int k) { return "q" + std::to_string(k); }
std::string vname(int k) { return "v" + std::to_string(k); }

expr::VarSet generator_vars(int n) {
  std::vector<std::string> names{"t"};
  for (int k = 0; k < n; ++k) names.push_back(qname(k));
  return expr::VarSet(std::move(names));
}

void check_generators(const VariationalProblem& prob, const SymmetryGenerators& gen) {
  if (static_cast<int>(gen.xi.size()) != prob.n_components())
    throw ValidationError("generator xi has " + std::to_string(gen.xi.size()) + " components, expected " +
                          std::to_string(prob.n_components()));
  const auto vars = generator_vars(prob.n_components());
  expr::check_scope(gen.tau, vars, "generator tau");
  for (const auto& x : gen.xi) expr::check_scope(x, vars, "generator xi");
}

// Everything the laws need, sampled along one trajectory.
struct Samples {
  Trajectory v;
  GridFunction lagrangian;
  Trajectory lq;
  Trajectory lv;
  Trajectory xi;
  GridFunction tau;
};

Samples sample(const VariationalProblem& prob, const SymmetryGenerators& gen, const Trajectory& q) {
  check_generators(prob, gen);
  Trajectory v = riesz_caputo_velocity(prob, q);
  detail::NodeEvaluator ev(prob.grid(), prob.vars());
  ev.bind_components("q", q);
  ev.bind_components("v", v);
  Samples s{v, ev.eval(prob.lagrangian(), "lagrangian"), {}, {}, {}, ev.eval(gen.tau, "generator tau")};
  for (int k = 0; k < prob.n_components(); ++k) {
    s.lq.push_back(ev.eval(expr::diff(prob.lagrangian(), qname(k)), "d lagrangian / d " + qname(k)));
    s.lv.push_back(ev.eval(expr::diff(prob.lagrangian(), vname(k)), "d lagrangian / d " + vname(k)));
    s.xi.push_back(ev.eval(gen.xi[k], "generator xi"));
  }
  return s;
}

void maybe_warn(ConservationReport& rep, const VariationalProblem& prob, const Trajectory& q,
                std::optional<double> reference_el_norm) {
  if (!reference_el_norm) return;
  double sum = 0.0;
  for (const auto& r : el_residual(prob, q)) sum += std::pow(interior_norm(r), 2);
  const double el = std::sqrt(sum);
  if (el > 10.0 * *reference_el_norm)
    rep.warnings.push_back("trajectory may not be an extremal: Euler-Lagrange residual norm " + std::to_string(el) +
                           " exceeds ten times the reference " + std::to_string(*reference_el_norm));
}

GridFunction momentum_terms(const VariationalProblem& prob, const Samples& s) {
  GridFunction r = GridFunction::constant(prob.grid(), 0.0);
  for (int k = 0; k < prob.n_components(); ++k) r = r + dt_gamma(s.lv[k], s.xi[k], prob.alpha());
  return r;
}

}  // namespace

GridFunction invariance_residual(const VariationalProblem& prob, const SymmetryGenerators& gen, const Trajectory& q) {
  const Samples s = sample(prob, gen, q);
  GridFunction r = GridFunction::constant(prob.grid(), 0.0);
  for (int k = 0; k < prob.n_components(); ++k)
    r = r + s.lq[k] * s.xi[k] + s.lv[k] * apply(OperatorKind::RieszCaputo, prob.alpha(), s.xi[k]);
  return r;
}

ConservationReport momentum_law_residual(const VariationalProblem& prob, const SymmetryGenerators& gen,
                                         const Trajectory& q, std::optional<double> reference_el_norm) {
  const Samples s = sample(prob, gen, q);
  ConservationReport rep = make_report(momentum_terms(prob, s));
  maybe_warn(rep, prob, q, reference_el_norm);
  return rep;
}

ConservationReport noether_residual(const VariationalProblem& prob, const SymmetryGenerators& gen,
                                    const Trajectory& q, std::optional<double> reference_el_norm) {
  const Samples s = sample(prob, gen, q);
  const double alpha = prob.alpha().value();
  GridFunction energy = s.lagrangian;
  for (int k = 0; k < prob.n_components(); ++k) energy = energy - alpha * (s.lv[k] * s.v[k]);
  ConservationReport rep = make_report(momentum_terms(prob, s) + dt_gamma(energy, s.tau, prob.alpha()));
  maybe_warn(rep, prob, q, reference_el_norm);
  return rep;
}

namespace {

double partial_trapezoid(const GridFunction& f, int lo, int hi) {
  const double h = f.grid().h();
  double sum = 0.0;
  for (int i = lo; i < hi; ++i) sum += 0.5 * h * (f[i] + f[i + 1]);
  return sum;
}

bool is_zero(const expr::Expr& e) { return e.variables().empty() && expr::eval(e, {}) == 0.0; }

// Least-squares fit of d = s*eps + c*eps^2; returns s.
double fitted_slope(const std::vector<double>& eps, const std::vector<double>& d) {
  if (eps.size() == 1) return d[0] / eps[0];
  Eigen::MatrixXd a(eps.size(), 2);
  Eigen::VectorXd b(eps.size());
  for (std::size_t j = 0; j < eps.size(); ++j) {
    a(j, 0) = eps[j];
    a(j, 1) = eps[j] * eps[j];
    b[j] = d[j];
  }
  return a.colPivHouseholderQr().solve(b)[0];
}

InvarianceReport check_shift(const VariationalProblem& prob, const SymmetryGenerators& gen, const Trajectory& q,
                             const std::vector<double>& eps_list) {
  const Samples s = sample(prob, gen, q);
  InvarianceReport rep;
  rep.mode = InvarianceReport::Mode::Shift;
  rep.eps = eps_list;

  const double base = evaluate_functional(prob, q);
  for (double eps : eps_list) {
    Trajectory moved;
    for (int k = 0; k < prob.n_components(); ++k) moved.push_back(q[k] + eps * s.xi[k]);
    rep.delta.push_back(evaluate_functional(prob, moved) - base);
  }
  rep.slope = fitted_slope(rep.eps, rep.delta);

  // Magnitude of the integrand pieces, used to make the comparison relative.
  double scale = 0.0;
  GridFunction r = GridFunction::constant(prob.grid(), 0.0);
  for (int k = 0; k < prob.n_components(); ++k) {
    const GridFunction a = s.lq[k] * s.xi[k];
    const GridFunction b = s.lv[k] * apply(OperatorKind::RieszCaputo, prob.alpha(), s.xi[k]);
    r = r + a + b;
    std::vector<double> mag(prob.grid().size());
    for (int i = 0; i < prob.grid().size(); ++i) mag[i] = std::abs(a[i]) + std::abs(b[i]);
    scale += trapezoid(GridFunction(prob.grid(), std::move(mag)));
  }
  rep.residual_integral = trapezoid(r);
  rep.slope_mismatch = scale > 0 ? std::abs(rep.slope - rep.residual_integral) / scale : 0.0;
  rep.slope_matches = rep.slope_mismatch <= 1e-4;
  rep.invariant = std::abs(rep.slope) <= 1e-8 * std::max(1.0, scale);
  return rep;
}

InvarianceReport check_affine_time(const VariationalProblem& prob, const SymmetryGenerators& gen,
                                   const Trajectory& q, const std::vector<double>& eps_list) {
  for (const auto& name : gen.tau.variables())
    if (name != "t")
      throw UnsupportedError("time transformation with tau depending on " + name +
                             " is not supported; tau must be c0 + c1*t");
  const expr::Expr slope = expr::diff(gen.tau, "t");
  if (!slope.variables().empty())
    throw UnsupportedError("time transformation with non-affine tau is not supported; tau must be c0 + c1*t");

  const Samples s = sample(prob, gen, q);
  const Grid& g = prob.grid();
  const int n = g.size();
  const int mid = (n - 1) / 2;
  const GridFunction before = s.lagrangian;
  const double tau_a = expr::eval(gen.tau, {{"t", g.a()}});
  const double tau_b = expr::eval(gen.tau, {{"t", g.b()}});

  InvarianceReport rep;
  rep.mode = InvarianceReport::Mode::AffineTime;
  rep.eps = eps_list;
  double magnitude = 0.0;
  for (int i = 0; i < n; ++i) magnitude = std::max(magnitude, std::abs(before[i]));
  for (double eps : eps_list) {
    const double a = g.a() + eps * tau_a;
    const double b = g.b() + eps * tau_b;
    if (!(b > a)) throw ValidationError("transformed interval is empty for eps = " + std::to_string(eps));
    const Grid moved_grid(a, b, n);
    Trajectory moved;
    for (int k = 0; k < prob.n_components(); ++k) {
      std::vector<double> vals(n);
      for (int i = 0; i < n; ++i) vals[i] = q[k][i] + eps * s.xi[k][i];
      moved.emplace_back(moved_grid, std::move(vals));
    }
    const VariationalProblem moved_prob(moved_grid, prob.alpha(), prob.n_components(), prob.lagrangian(), prob.qa(),
                                        prob.qb());
    const GridFunction after = lagrangian_samples(moved_prob, moved);
    double gap = 0.0;
    for (auto [lo, hi] : {std::pair{0, n - 1}, std::pair{0, mid}, std::pair{mid, n - 1}})
      gap = std::max(gap, std::abs(partial_trapezoid(after, lo, hi) - partial_trapezoid(before, lo, hi)));
    rep.delta.push_back(gap);
  }
  double worst = 0.0;
  for (double d : rep.delta) worst = std::max(worst, d);
  rep.invariant = worst <= 1e-6 * std::max(1.0, magnitude * (g.b() - g.a()));
  return rep;
}

}  // namespace

InvarianceReport check_invariance_numeric(const VariationalProblem& prob, const SymmetryGenerators& gen,
                                          const Trajectory& q, const std::vector<double>& eps_list) {
  check_generators(prob, gen);
  if (eps_list.empty()) throw ValidationError("eps list is empty");
  for (double e : eps_list)
    if (e == 0.0 || !std::isfinite(e)) throw ValidationError("eps values must be finite and nonzero");
  return is_zero(gen.tau) ? check_shift(prob, gen, q, eps_list) : check_affine_time(prob, gen, q, eps_list);
}

}  // namespace fracnoether
