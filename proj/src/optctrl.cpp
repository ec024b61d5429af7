#include "fracnoether/optctrl.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "detail/node_eval.hpp"
#include "fracnoether/error.hpp"

namespace fracnoether {

namespace {

std::string qname(int k) { return "q" + std::to_string(k); }
std::string uname(int j) { return "u" + std::to_string(j); }
std::string pname(int k) { return "p" + std::to_string(k); }

expr::VarSet state_control_vars(int n, int m) {
  std::vector<std::string> names{"t"};
  for (int k = 0; k < n; ++k) names.push_back(qname(k));
  for (int j = 0; j < m; ++j) names.push_back(uname(j));
  return expr::VarSet(std::move(names));
}

void check_values(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n)
    throw ValidationError(std::string(what) + " has " + std::to_string(v.size()) + " values, expected " +
                          std::to_string(n));
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + " must be finite");
}

}  // namespace

ControlProblem::ControlProblem(Grid grid, FracOrder alpha, int n, int m, expr::Expr lagrangian,
                               std::vector<expr::Expr> dynamics, std::vector<double> qa,
                               std::optional<std::vector<double>> qb)
    : grid_(grid),
      alpha_(alpha),
      n_(n),
      m_(m),
      lagrangian_(std::move(lagrangian)),
      dynamics_(std::move(dynamics)),
      qa_(std::move(qa)),
      qb_(std::move(qb)) {
  if (n_ < 1) throw ValidationError("control problem needs at least one state component");
  if (m_ < 1) throw ValidationError("control problem needs at least one control component");
  const auto vars = state_control_vars(n_, m_);
  expr::check_scope(lagrangian_, vars, "lagrangian");
  if (static_cast<int>(dynamics_.size()) != n_)
    throw ValidationError("dynamics has " + std::to_string(dynamics_.size()) + " components, expected " +
                          std::to_string(n_));
  for (const auto& phi : dynamics_) expr::check_scope(phi, vars, "dynamics");
  check_values(qa_, n_, "boundary qa");
  if (qb_) check_values(*qb_, n_, "boundary qb");
}

ControlProblem ControlProblem::with_grid(const Grid& grid) const {
  return ControlProblem(grid, alpha_, n_, m_, lagrangian_, dynamics_, qa_, qb_);
}

ControlProblem ControlProblem::with_alpha(FracOrder alpha) const {
  return ControlProblem(grid_, alpha, n_, m_, lagrangian_, dynamics_, qa_, qb_);
}

bool ControlProblem::autonomous() const {
  if (lagrangian_.depends_on("t")) return false;
  for (const auto& phi : dynamics_)
    if (phi.depends_on("t")) return false;
  return true;
}

expr::Expr hamiltonian(const ControlProblem& prob) {
  expr::Expr h = prob.lagrangian();
  for (int k = 0; k < prob.n(); ++k) h = h + expr::Expr::variable(pname(k)) * prob.dynamics()[k];
  return h;
}

namespace {

void check_triple(const ControlProblem& prob, const PontryaginTriple& trip) {
  auto check = [&](const Trajectory& f, int dim, const char* what) {
    if (static_cast<int>(f.size()) != dim)
      throw ValidationError(std::string(what) + " has " + std::to_string(f.size()) + " components, expected " +
                            std::to_string(dim));
    for (const auto& c : f) {
      if (!(c.grid() == prob.grid())) throw ValidationError(std::string(what) + " is not on the problem grid");
      c.require_finite(what);
    }
  };
  check(trip.q, prob.n(), "state q");
  check(trip.u, prob.m(), "control u");
  check(trip.p, prob.n(), "costate p");
}

detail::NodeEvaluator bind(const ControlProblem& prob, const PontryaginTriple& trip) {
  check_triple(prob, trip);
  detail::NodeEvaluator ev(prob.grid(), prob.vars());
  ev.bind_components("q", trip.q);
  ev.bind_components("u", trip.u);
  ev.bind_components("p", trip.p);
  return ev;
}

GridFunction dot(const Trajectory& a, const Trajectory& b) {
  GridFunction s = GridFunction::constant(a.front().grid(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) s = s + a[k] * b[k];
  return s;
}

}  // namespace

GridFunction hamiltonian_samples(const ControlProblem& prob, const PontryaginTriple& trip) {
  return bind(prob, trip).eval(hamiltonian(prob), "hamiltonian");
}

PontryaginResidual pontryagin_residual(const ControlProblem& prob, const PontryaginTriple& trip) {
  const auto ev = bind(prob, trip);
  const expr::Expr h = hamiltonian(prob);
  PontryaginResidual r;
  for (int k = 0; k < prob.n(); ++k) {
    r.state.push_back(apply(OperatorKind::RieszCaputo, prob.alpha(), trip.q[k]) -
                      ev.eval(prob.dynamics()[k], "dynamics"));
    r.costate.push_back(apply(OperatorKind::RieszDerivative, prob.alpha(), trip.p[k]) +
                        ev.eval(expr::diff(h, qname(k)), "dH / d" + qname(k)));
  }
  for (int j = 0; j < prob.m(); ++j) r.stationarity.push_back(ev.eval(expr::diff(h, uname(j)), "dH / d" + uname(j)));
  return r;
}

namespace {

// Checks that `e` takes the same value at several random (q, u, p) for
// each probe time.
bool constant_in_state(const expr::Expr& e, const ControlProblem& prob, std::mt19937_64& rng) {
  const auto vars = prob.vars();
  const expr::Program program(e, vars);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> slots(vars.size());
  for (double frac : {0.0, 0.37, 1.0}) {
    const double t = prob.grid().a() + frac * (prob.grid().b() - prob.grid().a());
    double first = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
      slots[0] = t;
      for (std::size_t s = 1; s < slots.size(); ++s) slots[s] = dist(rng);
      double v = 0.0;
      try {
        v = program(slots);
      } catch (const DomainError&) {
        return false;
      }
      if (trial == 0)
        first = v;
      else if (std::abs(v - first) > 1e-10 * (1.0 + std::abs(first)))
        return false;
    }
  }
  return true;
}

}  // namespace

bool is_linear_quadratic(const ControlProblem& prob) {
  std::mt19937_64 rng(0x5eed);
  std::vector<std::string> xs;
  for (int k = 0; k < prob.n(); ++k) xs.push_back(qname(k));
  for (int j = 0; j < prob.m(); ++j) xs.push_back(uname(j));
  for (const auto& a : xs) {
    const expr::Expr la = expr::diff(prob.lagrangian(), a);
    for (const auto& b : xs)
      if (!constant_in_state(expr::diff(la, b), prob, rng)) return false;
    for (const auto& phi : prob.dynamics())
      if (!constant_in_state(expr::diff(phi, a), prob, rng)) return false;
  }
  return true;
}

namespace {

// Node-wise affine form  e(t_i, x) = c_i + sum_x g_{x,i} x  of an expression
// that is affine in the q, u, p variables.
struct AffineSamples {
  std::vector<double> constant;
  std::vector<std::vector<double>> coeff;  // per VarSet slot (slot 0, t, unused)
};

AffineSamples affine_samples(const expr::Expr& e, const ControlProblem& prob) {
  const auto vars = prob.vars();
  const int n = prob.grid().size();
  AffineSamples out{std::vector<double>(n), std::vector<std::vector<double>>(vars.size())};
  std::vector<double> slots(vars.size(), 0.0);
  auto sample = [&](const expr::Expr& f, std::vector<double>& dst, const std::string& what) {
    const expr::Program program(f, vars);
    dst.resize(n);
    for (int i = 0; i < n; ++i) {
      slots[0] = prob.grid().node(i);
      try {
        dst[i] = program(slots);
      } catch (const DomainError& err) {
        std::ostringstream msg;
        msg << what << " at node " << i << ": " << err.what();
        throw DomainError(msg.str());
      }
    }
  };
  sample(e, out.constant, "linear system constant term");
  for (std::size_t s = 1; s < vars.size(); ++s) {
    const expr::Expr d = expr::diff(e, vars.names()[s]);
    if (d.is_constant(0.0)) continue;
    sample(d, out.coeff[s], "linear system coefficient");
  }
  return out;
}

}  // namespace

PontryaginTriple solve_lq(const ControlProblem& prob, LqOptions opts) {
  const Grid& g = prob.grid();
  const int n_nodes = g.size();
  if (n_nodes > opts.max_n)
    throw ValidationError("grid size " + std::to_string(n_nodes) + " exceeds the dense solver limit " +
                          std::to_string(opts.max_n));
  if (!is_linear_quadratic(prob))
    throw ValidationError("solve_lq needs a quadratic lagrangian and affine dynamics in (q, u)");

  const int n = prob.n(), m = prob.m();
  const int size = (2 * n + m) * n_nodes;
  // Unknown layout follows the VarSet slot order t, q.., u.., p..: slot s
  // (s >= 1) occupies the block starting at (s - 1) * N.
  auto col = [&](std::size_t slot, int i) { return static_cast<int>(slot - 1) * n_nodes + i; };
  const std::size_t q_slot = 1, u_slot = 1 + n, p_slot = 1 + n + m;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
  int row = 0;

  // Adds the affine part of e at node i to `row`; returns its constant.
  auto add_affine = [&](const AffineSamples& e, int r, int i, double scale) {
    for (std::size_t s = 1; s < e.coeff.size(); ++s)
      if (!e.coeff[s].empty()) a(r, col(s, i)) += scale * e.coeff[s][i];
    return scale * e.constant[i];
  };

  const Eigen::MatrixXd rc = operator_matrix(OperatorKind::RieszCaputo, prob.alpha(), g);
  const Eigen::MatrixXd rd = operator_matrix(OperatorKind::RieszDerivative, prob.alpha(), g);
  const expr::Expr h = hamiltonian(prob);

  for (int k = 0; k < n; ++k) {
    a(row, col(q_slot + k, 0)) = 1.0;
    rhs[row++] = prob.qa()[k];
    const AffineSamples phi = affine_samples(prob.dynamics()[k], prob);
    for (int i = 0; i < n_nodes; ++i, ++row) {
      for (int j = 0; j < n_nodes; ++j) a(row, col(q_slot + k, j)) += rc(i, j);
      rhs[row] = add_affine(phi, row, i, -1.0) * -1.0;
    }
  }

  for (int k = 0; k < n; ++k) {
    const AffineSamples hq = affine_samples(expr::diff(h, qname(k)), prob);
    for (int i = 1; i < n_nodes - 1; ++i, ++row) {
      for (int j = 0; j < n_nodes; ++j) a(row, col(p_slot + k, j)) += rd(i, j);
      rhs[row] = -add_affine(hq, row, i, 1.0);
    }
    if (prob.qb()) {
      a(row, col(q_slot + k, n_nodes - 1)) = 1.0;
      rhs[row++] = (*prob.qb())[k];
    } else {
      a(row, col(p_slot + k, n_nodes - 1)) = 1.0;
      rhs[row++] = 0.0;
    }
  }

  for (int j = 0; j < m; ++j) {
    const AffineSamples hu = affine_samples(expr::diff(h, uname(j)), prob);
    for (int i = 0; i < n_nodes; ++i, ++row) rhs[row] = -add_affine(hu, row, i, 1.0);
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rcond = lu.rcond();
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double pivot_ratio = pivots.minCoeff() / pivots.maxCoeff();
  if (!(rcond > 1e-13) || !(pivot_ratio > 1e-13)) {
    std::ostringstream msg;
    msg << "linear system is singular (reciprocal condition estimate " << rcond << ", pivot ratio "
        << pivot_ratio << ")";
    throw NumericError(msg.str());
  }
  const Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericError("linear solve produced non-finite values");

  PontryaginTriple trip;
  auto extract = [&](std::size_t slot) {
    std::vector<double> vals(x.data() + col(slot, 0), x.data() + col(slot, 0) + n_nodes);
    return GridFunction(g, std::move(vals));
  };
  for (int k = 0; k < n; ++k) {
    // boundary rows hold these values only up to rounding
    std::vector<double> vals = std::move(extract(q_slot + k)).values();
    vals.front() = prob.qa()[k];
    if (prob.qb()) vals.back() = (*prob.qb())[k];
    trip.q.emplace_back(g, std::move(vals));
  }
  for (int j = 0; j < m; ++j) trip.u.push_back(extract(u_slot + j));
  for (int k = 0; k < n; ++k) trip.p.push_back(extract(p_slot + k));
  return trip;
}

double augmented_functional(const ControlProblem& prob, const PontryaginTriple& trip) {
  const GridFunction h = hamiltonian_samples(prob, trip);
  return trapezoid(h - dot(trip.p, apply(OperatorKind::RieszCaputo, prob.alpha(), trip.q)));
}

double cost(const ControlProblem& prob, const PontryaginTriple& trip) {
  return trapezoid(bind(prob, trip).eval(prob.lagrangian(), "lagrangian"));
}

namespace {

Trajectory sample_generators(const detail::NodeEvaluator& ev, const std::vector<expr::Expr>& gens, int dim,
                             const Grid& grid, const char* what) {
  Trajectory out;
  if (gens.empty()) {
    for (int k = 0; k < dim; ++k) out.push_back(GridFunction::constant(grid, 0.0));
    return out;
  }
  if (static_cast<int>(gens.size()) != dim)
    throw ValidationError(std::string("generator ") + what + " has " + std::to_string(gens.size()) +
                          " components, expected " + std::to_string(dim));
  for (const auto& e : gens) out.push_back(ev.eval(e, std::string("generator ") + what));
  return out;
}

}  // namespace

ConservationReport hamiltonian_noether_residual(const ControlProblem& prob, const ControlGenerators& gen,
                                                const PontryaginTriple& trip) {
  const auto ev = bind(prob, trip);
  const auto vars = prob.vars();
  expr::check_scope(gen.tau, vars, "generator tau");
  for (const auto* list : {&gen.xi, &gen.rho, &gen.sigma})
    for (const auto& e : *list) expr::check_scope(e, vars, "generator");
  const Trajectory xi = sample_generators(ev, gen.xi, prob.n(), prob.grid(), "xi");
  sample_generators(ev, gen.rho, prob.m(), prob.grid(), "rho");
  sample_generators(ev, gen.sigma, prob.n(), prob.grid(), "sigma");
  const GridFunction tau = ev.eval(gen.tau, "generator tau");

  const double alpha = prob.alpha().value();
  const GridFunction h_mod = ev.eval(hamiltonian(prob), "hamiltonian") -
                             (1.0 - alpha) * dot(trip.p, apply(OperatorKind::RieszCaputo, prob.alpha(), trip.q));
  GridFunction r = dt_gamma(h_mod, tau, prob.alpha());
  for (int k = 0; k < prob.n(); ++k) r = r - dt_gamma(trip.p[k], xi[k], prob.alpha());

  ConservationReport rep = make_report(std::move(r));
  const PontryaginResidual pr = pontryagin_residual(prob, trip);
  double worst = 0.0;
  for (const auto* part : {&pr.state, &pr.costate, &pr.stationarity})
    for (const auto& c : *part) worst = std::max(worst, interior_max(c));
  if (worst > 1e-6)
    rep.warnings.push_back("triple may not be a Pontryagin extremal: interior residual " + std::to_string(worst));
  return rep;
}

GridFunction autonomous_invariant(const ControlProblem& prob, const PontryaginTriple& trip) {
  if (!prob.autonomous()) throw ValidationError("autonomous_invariant needs L and phi free of t");
  const double alpha = prob.alpha().value();
  return hamiltonian_samples(prob, trip) +
         (alpha - 1.0) * dot(trip.p, apply(OperatorKind::RieszCaputo, prob.alpha(), trip.q));
}

expr::Expr autonomous_invariant_expr(const ControlProblem& prob) {
  if (!prob.autonomous()) throw ValidationError("autonomous_invariant needs L and phi free of t");
  const expr::Expr c = expr::Expr::constant(prob.alpha().value() - 1.0);
  expr::Expr e = hamiltonian(prob);
  for (int k = 0; k < prob.n(); ++k) e = e + c * (expr::Expr::variable(pname(k)) * prob.dynamics()[k]);
  return e;
}

}  // namespace fracnoether
