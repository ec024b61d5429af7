#include "fracnoether/variational.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detail/node_eval.hpp"
#include "fracnoether/error.hpp"

namespace fracnoether {

VariationalProblem::VariationalProblem(Grid grid, FracOrder alpha, int n_components, expr::Expr lagrangian,
                                       std::vector<double> qa, std::optional<std::vector<double>> qb)
    : grid_(grid),
      alpha_(alpha),
      n_(n_components),
      lagrangian_(std::move(lagrangian)),
      qa_(std::move(qa)),
      qb_(std::move(qb)) {
  if (n_ < 1) throw ValidationError("variational problem needs at least one component");
  expr::check_scope(lagrangian_, vars(), "lagrangian");
  if (static_cast<int>(qa_.size()) != n_)
    throw ValidationError("boundary qa has " + std::to_string(qa_.size()) + " values, expected " + std::to_string(n_));
  if (qb_ && static_cast<int>(qb_->size()) != n_)
    throw ValidationError("boundary qb has " + std::to_string(qb_->size()) + " values, expected " + std::to_string(n_));
  for (double v : qa_)
    if (!std::isfinite(v)) throw ValidationError("boundary qa must be finite");
  if (qb_)
    for (double v : *qb_)
      if (!std::isfinite(v)) throw ValidationError("boundary qb must be finite");
}

VariationalProblem VariationalProblem::with_grid(const Grid& grid) const {
  if (grid.a() != grid_.a() || grid.b() != grid_.b()) throw ValidationError("with_grid: interval differs");
  return VariationalProblem(grid, alpha_, n_, lagrangian_, qa_, qb_);
}

namespace {

std::string qname(int k) { return "q" + std::to_string(k); }
std::string vname(int k) { return "v" + std::to_string(k); }

void check_trajectory(const VariationalProblem& prob, const Trajectory& q) {
  if (static_cast<int>(q.size()) != prob.n_components())
    throw ValidationError("trajectory has " + std::to_string(q.size()) + " components, expected " +
                          std::to_string(prob.n_components()));
  for (const auto& c : q) {
    if (!(c.grid() == prob.grid())) throw ValidationError("trajectory is not on the problem grid");
    c.require_finite("trajectory");
  }
}

detail::NodeEvaluator bind(const VariationalProblem& prob, const Trajectory& q, const Trajectory& v) {
  detail::NodeEvaluator ev(prob.grid(), prob.vars());
  ev.bind_components("q", q);
  ev.bind_components("v", v);
  return ev;
}

}  // namespace

Trajectory riesz_caputo_velocity(const VariationalProblem& prob, const Trajectory& q) {
  check_trajectory(prob, q);
  return apply(OperatorKind::RieszCaputo, prob.alpha(), q);
}

GridFunction lagrangian_samples(const VariationalProblem& prob, const Trajectory& q) {
  const Trajectory v = riesz_caputo_velocity(prob, q);
  return bind(prob, q, v).eval(prob.lagrangian(), "lagrangian");
}

double evaluate_functional(const VariationalProblem& prob, const Trajectory& q) {
  return trapezoid(lagrangian_samples(prob, q));
}

std::vector<double> functional_gradient(const VariationalProblem& prob, const Trajectory& q) {
  const Trajectory v = riesz_caputo_velocity(prob, q);
  const auto ev = bind(prob, q, v);
  const int n = prob.grid().size();
  const Eigen::MatrixXd d = operator_matrix(OperatorKind::RieszCaputo, prob.alpha(), prob.grid());
  const auto w = trapezoid_weights(prob.grid());

  std::vector<double> grad(static_cast<std::size_t>(prob.n_components()) * n);
  for (int k = 0; k < prob.n_components(); ++k) {
    const GridFunction lq = ev.eval(expr::diff(prob.lagrangian(), qname(k)), "d lagrangian / d " + qname(k));
    const GridFunction lv = ev.eval(expr::diff(prob.lagrangian(), vname(k)), "d lagrangian / d " + vname(k));
    Eigen::VectorXd wlv(n);
    for (int i = 0; i < n; ++i) wlv[i] = w[i] * lv[i];
    const Eigen::VectorXd adj = d.transpose() * wlv;
    for (int i = 0; i < n; ++i) grad[static_cast<std::size_t>(k) * n + i] = w[i] * lq[i] + adj[i];
  }
  return grad;
}

Trajectory el_residual(const VariationalProblem& prob, const Trajectory& q) {
  const Trajectory v = riesz_caputo_velocity(prob, q);
  const auto ev = bind(prob, q, v);
  Trajectory out;
  for (int k = 0; k < prob.n_components(); ++k) {
    const GridFunction lq = ev.eval(expr::diff(prob.lagrangian(), qname(k)), "d lagrangian / d " + qname(k));
    const GridFunction lv = ev.eval(expr::diff(prob.lagrangian(), vname(k)), "d lagrangian / d " + vname(k));
    out.push_back(lq - apply(OperatorKind::RieszDerivative, prob.alpha(), lv));
  }
  return out;
}

Trajectory linear_guess(const VariationalProblem& prob) {
  const Grid& g = prob.grid();
  Trajectory out;
  for (int k = 0; k < prob.n_components(); ++k) {
    const double qa = prob.qa()[k];
    const double qb = prob.qb() ? (*prob.qb())[k] : qa;
    std::vector<double> vals(g.size());
    for (int i = 0; i < g.size(); ++i) vals[i] = qa + (qb - qa) * (g.node(i) - g.a()) / (g.b() - g.a());
    vals.back() = qb;
    out.emplace_back(g, std::move(vals));
  }
  return out;
}

namespace {

// Objective and gradient over the free (interior) nodal values, with the
// operator matrix and compiled partials prepared once.
class RitzObjective {
 public:
  explicit RitzObjective(const VariationalProblem& prob)
      : prob_(prob),
        n_(prob.grid().size()),
        m_(prob.n_components()),
        d_(operator_matrix(OperatorKind::RieszCaputo, prob.alpha(), prob.grid())),
        w_(trapezoid_weights(prob.grid())),
        vars_(prob.vars()),
        nodes_(prob.grid().nodes()),
        lagrangian_(prob.lagrangian(), vars_) {
    for (int k = 0; k < m_; ++k) {
      const expr::Expr lq = expr::diff(prob.lagrangian(), qname(k));
      const expr::Expr lv = expr::diff(prob.lagrangian(), vname(k));
      dq_.emplace_back(lq, vars_);
      dv_.emplace_back(lv, vars_);
      for (int l = 0; l < m_; ++l) {
        dqq_.emplace_back(expr::diff(lq, qname(l)), vars_);
        dqv_.emplace_back(expr::diff(lq, vname(l)), vars_);
        dvv_.emplace_back(expr::diff(lv, vname(l)), vars_);
      }
    }
    full_ = Eigen::MatrixXd(n_, m_);
    for (int k = 0; k < m_; ++k) {
      full_(0, k) = prob.qa()[k];
      full_(n_ - 1, k) = (*prob.qb())[k];
    }
  }

  int free_size() const { return m_ * (n_ - 2); }

  Eigen::VectorXd pack(const Trajectory& q) const {
    Eigen::VectorXd x(free_size());
    for (int k = 0; k < m_; ++k)
      for (int i = 1; i < n_ - 1; ++i) x[k * (n_ - 2) + i - 1] = q[k][i];
    return x;
  }

  Trajectory unpack(const Eigen::VectorXd& x) {
    load(x);
    Trajectory q;
    for (int k = 0; k < m_; ++k) {
      std::vector<double> vals(full_.col(k).data(), full_.col(k).data() + n_);
      q.emplace_back(prob_.grid(), std::move(vals));
    }
    return q;
  }

  double value(const Eigen::VectorXd& x) {
    load(x);
    double sum = 0.0;
    for (int i = 0; i < n_; ++i) sum += w_[i] * lagrangian_(slots(i));
    return sum;
  }

  double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    load(x);
    double sum = 0.0;
    Eigen::MatrixXd lq(n_, m_), wlv(n_, m_);
    for (int i = 0; i < n_; ++i) {
      const auto s = slots(i);
      sum += w_[i] * lagrangian_(s);
      for (int k = 0; k < m_; ++k) {
        lq(i, k) = w_[i] * dq_[k](s);
        wlv(i, k) = w_[i] * dv_[k](s);
      }
    }
    const Eigen::MatrixXd full_grad = lq + d_.transpose() * wlv;
    g.resize(free_size());
    for (int k = 0; k < m_; ++k) g.segment(k * (n_ - 2), n_ - 2) = full_grad.col(k).segment(1, n_ - 2);
    return sum;
  }

  /// Exact Hessian over the free values.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) {
    load(x);
    const int f = n_ - 2;
    Eigen::MatrixXd out(free_size(), free_size());
    Eigen::VectorXd qq(n_), qv(n_), vq(n_), vv(n_);
    for (int k = 0; k < m_; ++k) {
      for (int l = 0; l < m_; ++l) {
        for (int i = 0; i < n_; ++i) {
          const auto s = slots(i);
          qq[i] = w_[i] * dqq_[k * m_ + l](s);
          qv[i] = w_[i] * dqv_[k * m_ + l](s);  // d2 L / dq_k dv_l
          vq[i] = w_[i] * dqv_[l * m_ + k](s);  // d2 L / dv_k dq_l
          vv[i] = w_[i] * dvv_[k * m_ + l](s);
        }
        Eigen::MatrixXd block = Eigen::MatrixXd(qq.asDiagonal());
        block += qv.asDiagonal() * d_;
        block += d_.transpose() * vq.asDiagonal();
        block += d_.transpose() * vv.asDiagonal() * d_;
        out.block(k * f, l * f, f, f) = block.block(1, 1, f, f);
      }
    }
    return out;
  }

 private:
  const VariationalProblem& prob_;
  int n_;
  int m_;
  Eigen::MatrixXd d_;
  std::vector<double> w_;
  expr::VarSet vars_;
  std::vector<double> nodes_;
  expr::Program lagrangian_;
  std::vector<expr::Program> dq_;
  std::vector<expr::Program> dv_;
  std::vector<expr::Program> dqq_;
  std::vector<expr::Program> dqv_;
  std::vector<expr::Program> dvv_;
  Eigen::MatrixXd full_;
  Eigen::MatrixXd vel_;
  std::vector<double> slot_buf_;

  void load(const Eigen::VectorXd& x) {
    for (int k = 0; k < m_; ++k) full_.col(k).segment(1, n_ - 2) = x.segment(k * (n_ - 2), n_ - 2);
    vel_ = d_ * full_;
  }

  std::span<const double> slots(int i) {
    slot_buf_.assign(1 + 2 * m_, 0.0);
    slot_buf_[0] = nodes_[i];
    for (int k = 0; k < m_; ++k) {
      slot_buf_[1 + k] = full_(i, k);
      slot_buf_[1 + m_ + k] = vel_(i, k);
    }
    return slot_buf_;
  }
};

double max_norm(const Eigen::VectorXd& g) { return g.size() ? g.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Extremal solve_ritz(const VariationalProblem& prob, const std::optional<Trajectory>& init, RitzOptions opts) {
  if (!prob.qb()) throw ValidationError("solve_ritz needs both boundary values (qb missing)");

  Trajectory start = init ? *init : linear_guess(prob);
  check_trajectory(prob, start);

  RitzObjective obj(prob);
  Eigen::VectorXd x = obj.pack(start);
  Eigen::VectorXd g;
  double f = obj.value_and_gradient(x, g);
  if (!std::isfinite(f)) throw NumericError("functional is not finite at the initial guess");

  const int dim = obj.free_size();
  // The inverse-Hessian approximation starts from the exact Hessian when it
  // is positive definite, and is re-seeded the same way whenever a step
  // fails the Armijo test.
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;
  auto reseed = [&](const Eigen::VectorXd& at) {
    const Eigen::LLT<Eigen::MatrixXd> llt(obj.hessian(at));
    if (llt.info() != Eigen::Success) return false;
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    if (!inv.allFinite()) return false;
    hinv = std::move(inv);
    scaled = true;
    return true;
  };
  bool fresh = reseed(x);

  constexpr double kArmijo = 1e-4;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  SolverDiagnostics diag;
  diag.gradient_norm = max_norm(g);
  diag.objective_trace.push_back(f);

  Eigen::VectorXd x_new, g_new;
  while (diag.gradient_norm > opts.gradient_tol && diag.iterations < opts.max_iterations) {
    Eigen::VectorXd dir = -hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0)) {
      hinv.setIdentity();
      scaled = false;
      dir = -g;
      slope = -g.squaredNorm();
    }

    // Backtracking. Close to the minimum the objective stops resolving the
    // Armijo decrease, so a step that does not increase f and flattens the
    // directional derivative is accepted as well, and once f is flat to
    // rounding a step that reduces the gradient.
    double step = 1.0;
    bool accepted = false, armijo = false;
    double f_new = f;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      x_new = x + step * dir;
      f_new = obj.value_and_gradient(x_new, g_new);
      if (!std::isfinite(f_new)) continue;
      if (f_new < f && f_new <= f + kArmijo * step * slope) {
        accepted = armijo = true;
        break;
      }
      const double slope_new = g_new.dot(dir);
      if (f_new <= f && slope_new >= 0.9 * slope && slope_new <= -0.8 * slope) {
        accepted = true;
        break;
      }
      // f flat to rounding: fall back on the gradient
      if (std::abs(f_new - f) <= 8 * kEps * std::abs(f) && g_new.norm() < g.norm()) {
        accepted = true;
        break;
      }
    }
    if (!armijo && !fresh && reseed(x)) {
      fresh = true;
      continue;
    }
    if (!accepted) break;
    fresh = false;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      const double yhy = y.dot(hy);
      hinv += ((1.0 + rho * yhy) * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }

    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    ++diag.iterations;
    diag.objective_trace.push_back(f);
    diag.gradient_norm = max_norm(g);
  }
  diag.converged = diag.gradient_norm <= opts.gradient_tol;

  Extremal out;
  out.q = obj.unpack(x);
  out.objective = f;
  out.diagnostics = diag;
  return out;
}

}  // namespace fracnoether
