#include <algorithm>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fracnoether/error.hpp"
#include "fracnoether/expr.hpp"
#include "fracnoether/fracops.hpp"
#include "fracnoether/noether.hpp"
#include "fracnoether/optctrl.hpp"
#include "fracnoether/variational.hpp"

namespace py = pybind11;
using namespace fracnoether;

namespace {

py::array_t<double> to_numpy(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

OperatorKind kind_of(const py::object& k) {
  if (py::isinstance<py::str>(k)) return operator_kind_from_string(k.cast<std::string>());
  return k.cast<OperatorKind>();
}

}  // namespace

PYBIND11_MODULE(fracnoether, m) {
  m.doc() = "Riesz-Caputo fractional operators, Euler-Lagrange and Pontryagin solvers, Noether residuals";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  auto numeric = py::register_exception<NumericError>(m, "NumericError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", validation.ptr());
  py::register_exception<DomainError>(m, "DomainError", numeric.ptr());

  // expressions
  py::class_<expr::Expr>(m, "Expr")
      .def(py::init([](const std::string& src) { return expr::parse(src); }), py::arg("source"))
      .def("__str__", &expr::Expr::str)
      .def("__repr__", [](const expr::Expr& e) { return "Expr('" + e.str() + "')"; })
      .def("__eq__", [](const expr::Expr& a, const expr::Expr& b) { return a == b; })
      .def("variables", &expr::Expr::variables)
      .def("depends_on", &expr::Expr::depends_on);
  py::implicitly_convertible<py::str, expr::Expr>();

  m.def("parse", py::overload_cast<std::string_view>(&expr::parse), py::arg("source"));
  m.def(
      "eval", [](const expr::Expr& e, const std::map<std::string, double>& env) {
        return expr::eval(e, expr::Env(env.begin(), env.end()));
      },
      py::arg("expr"), py::arg("env"));
  m.def("diff", &expr::diff, py::arg("expr"), py::arg("var"));
  m.def("substitute", &expr::substitute, py::arg("expr"), py::arg("var"), py::arg("replacement"));

  // grids and operators
  py::class_<Grid>(m, "Grid")
      .def(py::init<double, double, int>(), py::arg("a"), py::arg("b"), py::arg("n"))
      .def_property_readonly("a", &Grid::a)
      .def_property_readonly("b", &Grid::b)
      .def_property_readonly("size", &Grid::size)
      .def_property_readonly("h", &Grid::h)
      .def("nodes", [](const Grid& g) { return to_numpy(g.nodes()); })
      .def("__len__", &Grid::size)
      .def("__repr__", [](const Grid& g) {
        return "Grid(" + std::to_string(g.a()) + ", " + std::to_string(g.b()) + ", " + std::to_string(g.size()) + ")";
      });

  py::class_<GridFunction>(m, "GridFunction")
      .def(py::init([](const Grid& g, const std::vector<double>& v) { return GridFunction(g, v); }), py::arg("grid"),
           py::arg("values"))
      .def_static("sample", &GridFunction::sample, py::arg("grid"), py::arg("f"))
      .def_static("constant", &GridFunction::constant, py::arg("grid"), py::arg("c"))
      .def_property_readonly("grid", &GridFunction::grid)
      .def_property_readonly("values", [](const GridFunction& f) { return to_numpy(f.values()); })
      .def_property_readonly("flags", [](const GridFunction& f) { return f.flags(); })
      .def("__len__", &GridFunction::size)
      .def("__getitem__", [](const GridFunction& f, int i) {
        if (i < 0) i += f.size();
        if (i < 0 || i >= f.size()) throw py::index_error();
        return f[i];
      })
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self)
      .def(double() * py::self);

  py::enum_<OperatorKind> kinds(m, "OperatorKind");
  for (OperatorKind k : kAllOperatorKinds) {
    std::string name(to_string(k));
    std::replace(name.begin(), name.end(), '-', '_');
    kinds.value(name.c_str(), k);
  }
  m.def(
      "apply", [](const py::object& kind, double alpha, const GridFunction& f) {
        return apply(kind_of(kind), FracOrder(alpha), f);
      },
      py::arg("kind"), py::arg("alpha"), py::arg("f"));
  m.def(
      "operator_matrix", [](const py::object& kind, double alpha, const Grid& g) {
        return operator_matrix(kind_of(kind), FracOrder(alpha), g);
      },
      py::arg("kind"), py::arg("alpha"), py::arg("grid"));
  m.def(
      "apply_oracle",
      [](const py::object& kind, double alpha, const expr::Expr& f, double a, double b, double t, double tol) {
        return apply_oracle(kind_of(kind), FracOrder(alpha), f, a, b, t, OracleOptions{tol});
      },
      py::arg("kind"), py::arg("alpha"), py::arg("f"), py::arg("a"), py::arg("b"), py::arg("t"), py::arg("tol") = 1e-8);
  m.def(
      "dt_gamma", [](const GridFunction& f, const GridFunction& g, double gamma) { return dt_gamma(f, g, FracOrder(gamma)); },
      py::arg("f"), py::arg("g"), py::arg("gamma"));
  m.def("trapezoid", &trapezoid, py::arg("f"));

  // calculus of variations
  py::class_<VariationalProblem>(m, "VariationalProblem")
      .def(py::init([](const Grid& g, double alpha, int n, const expr::Expr& lagrangian, std::vector<double> qa,
                       std::optional<std::vector<double>> qb) {
             return VariationalProblem(g, FracOrder(alpha), n, lagrangian, std::move(qa), std::move(qb));
           }),
           py::arg("grid"), py::arg("alpha"), py::arg("n_components"), py::arg("lagrangian"), py::arg("qa"),
           py::arg("qb") = py::none())
      .def_property_readonly("grid", &VariationalProblem::grid)
      .def_property_readonly("alpha", [](const VariationalProblem& p) { return p.alpha().value(); })
      .def_property_readonly("n_components", &VariationalProblem::n_components)
      .def_property_readonly("lagrangian", &VariationalProblem::lagrangian)
      .def("with_grid", &VariationalProblem::with_grid, py::arg("grid"));

  py::class_<SolverDiagnostics>(m, "SolverDiagnostics")
      .def_readonly("iterations", &SolverDiagnostics::iterations)
      .def_readonly("gradient_norm", &SolverDiagnostics::gradient_norm)
      .def_readonly("converged", &SolverDiagnostics::converged)
      .def_readonly("objective_trace", &SolverDiagnostics::objective_trace);
  py::class_<Extremal>(m, "Extremal")
      .def_readonly("q", &Extremal::q)
      .def_readonly("objective", &Extremal::objective)
      .def_readonly("diagnostics", &Extremal::diagnostics);

  m.def("evaluate_functional", &evaluate_functional, py::arg("problem"), py::arg("q"));
  m.def("functional_gradient", &functional_gradient, py::arg("problem"), py::arg("q"));
  m.def("el_residual", &el_residual, py::arg("problem"), py::arg("q"));
  m.def("riesz_caputo_velocity", &riesz_caputo_velocity, py::arg("problem"), py::arg("q"));
  m.def("linear_guess", &linear_guess, py::arg("problem"));
  m.def(
      "solve_ritz",
      [](const VariationalProblem& p, const std::optional<Trajectory>& init, double gradient_tol, int max_iterations) {
        return solve_ritz(p, init, RitzOptions{gradient_tol, max_iterations});
      },
      py::arg("problem"), py::arg("init") = py::none(), py::arg("gradient_tol") = 1e-9,
      py::arg("max_iterations") = 5000);

  // Noether laws
  py::class_<SymmetryGenerators>(m, "SymmetryGenerators")
      .def(py::init([](const expr::Expr& tau, std::vector<expr::Expr> xi) {
             return SymmetryGenerators{tau, std::move(xi)};
           }),
           py::arg("tau"), py::arg("xi"))
      .def_readonly("tau", &SymmetryGenerators::tau)
      .def_readonly("xi", &SymmetryGenerators::xi);
  py::class_<ConservationReport>(m, "ConservationReport")
      .def_readonly("residual", &ConservationReport::residual)
      .def_readonly("interior_norm", &ConservationReport::interior_norm)
      .def_readonly("interior_max", &ConservationReport::interior_max)
      .def_readonly("grid_refinement_trace", &ConservationReport::grid_refinement_trace)
      .def_readonly("warnings", &ConservationReport::warnings);
  py::class_<InvarianceReport> inv(m, "InvarianceReport");
  py::enum_<InvarianceReport::Mode>(inv, "Mode")
      .value("shift", InvarianceReport::Mode::Shift)
      .value("affine_time", InvarianceReport::Mode::AffineTime);
  inv.def_readonly("mode", &InvarianceReport::mode)
      .def_readonly("eps", &InvarianceReport::eps)
      .def_readonly("delta", &InvarianceReport::delta)
      .def_readonly("slope", &InvarianceReport::slope)
      .def_readonly("residual_integral", &InvarianceReport::residual_integral)
      .def_readonly("slope_mismatch", &InvarianceReport::slope_mismatch)
      .def_readonly("slope_matches", &InvarianceReport::slope_matches)
      .def_readonly("invariant", &InvarianceReport::invariant);

  m.def("interior_norm", &interior_norm, py::arg("r"));
  m.def("interior_max", &interior_max, py::arg("r"));
  m.def("invariance_residual", &invariance_residual, py::arg("problem"), py::arg("generators"), py::arg("q"));
  m.def("momentum_law_residual", &momentum_law_residual, py::arg("problem"), py::arg("generators"), py::arg("q"),
        py::arg("reference_el_norm") = py::none());
  m.def("noether_residual", &noether_residual, py::arg("problem"), py::arg("generators"), py::arg("q"),
        py::arg("reference_el_norm") = py::none());
  m.def("check_invariance_numeric", &check_invariance_numeric, py::arg("problem"), py::arg("generators"),
        py::arg("q"), py::arg("eps"));

  // optimal control
  py::class_<ControlProblem>(m, "ControlProblem")
      .def(py::init([](const Grid& g, double alpha, int n, int m_, const expr::Expr& lagrangian,
                       std::vector<expr::Expr> dynamics, std::vector<double> qa,
                       std::optional<std::vector<double>> qb) {
             return ControlProblem(g, FracOrder(alpha), n, m_, lagrangian, std::move(dynamics), std::move(qa),
                                   std::move(qb));
           }),
           py::arg("grid"), py::arg("alpha"), py::arg("n"), py::arg("m"), py::arg("lagrangian"), py::arg("dynamics"),
           py::arg("qa"), py::arg("qb") = py::none())
      .def_property_readonly("grid", &ControlProblem::grid)
      .def_property_readonly("alpha", [](const ControlProblem& p) { return p.alpha().value(); })
      .def_property_readonly("n", &ControlProblem::n)
      .def_property_readonly("m", &ControlProblem::m)
      .def("autonomous", &ControlProblem::autonomous)
      .def("with_grid", &ControlProblem::with_grid, py::arg("grid"))
      .def("with_alpha", [](const ControlProblem& p, double a) { return p.with_alpha(FracOrder(a)); },
           py::arg("alpha"));

  py::class_<PontryaginTriple>(m, "PontryaginTriple")
      .def(py::init([](Trajectory q, Trajectory u, Trajectory p) {
             return PontryaginTriple{std::move(q), std::move(u), std::move(p)};
           }),
           py::arg("q"), py::arg("u"), py::arg("p"))
      .def_readonly("q", &PontryaginTriple::q)
      .def_readonly("u", &PontryaginTriple::u)
      .def_readonly("p", &PontryaginTriple::p);
  py::class_<PontryaginResidual>(m, "PontryaginResidual")
      .def_readonly("state", &PontryaginResidual::state)
      .def_readonly("costate", &PontryaginResidual::costate)
      .def_readonly("stationarity", &PontryaginResidual::stationarity);
  py::class_<ControlGenerators>(m, "ControlGenerators")
      .def(py::init([](const expr::Expr& tau, std::vector<expr::Expr> xi, std::vector<expr::Expr> rho,
                       std::vector<expr::Expr> sigma) {
             return ControlGenerators{tau, std::move(xi), std::move(rho), std::move(sigma)};
           }),
           py::arg("tau"), py::arg("xi"), py::arg("rho") = std::vector<expr::Expr>{},
           py::arg("sigma") = std::vector<expr::Expr>{});

  m.def("hamiltonian", &hamiltonian, py::arg("problem"));
  m.def("pontryagin_residual", &pontryagin_residual, py::arg("problem"), py::arg("triple"));
  m.def("is_linear_quadratic", &is_linear_quadratic, py::arg("problem"));
  m.def(
      "solve_lq", [](const ControlProblem& p, int max_n) { return solve_lq(p, LqOptions{max_n}); }, py::arg("problem"),
      py::arg("max_n") = 4097);
  m.def("augmented_functional", &augmented_functional, py::arg("problem"), py::arg("triple"));
  m.def("cost", &cost, py::arg("problem"), py::arg("triple"));
  m.def("hamiltonian_samples", &hamiltonian_samples, py::arg("problem"), py::arg("triple"));
  m.def("hamiltonian_noether_residual", &hamiltonian_noether_residual, py::arg("problem"), py::arg("generators"),
        py::arg("triple"));
  m.def("autonomous_invariant", &autonomous_invariant, py::arg("problem"), py::arg("triple"));
  m.def("autonomous_invariant_expr", &autonomous_invariant_expr, py::arg("problem"));
}
