#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "CLI11.hpp"
#include "fracnoether/cli.hpp"
#include "fracnoether/error.hpp"
#include "json.hpp"

namespace fracnoether::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Overrides {
  std::optional<double> alpha;
  std::vector<int> ns;
  std::string out;
  std::string format;
  std::optional<double> oracle;
  bool quiet = false;
};

struct Outcome {
  Report report;
  std::vector<std::string> summary;
};

void add_columns(std::vector<Column>& cols, const std::string& prefix, const Trajectory& f) {
  for (std::size_t k = 0; k < f.size(); ++k) cols.push_back(column(prefix + std::to_string(k), f[k]));
}

Column time_column(const Grid& g) {
  return {"t", g.nodes(), std::vector<bool>(g.size(), false)};
}

double max_interior(const Trajectory& parts) {
  double w = 0.0;
  for (const auto& c : parts) w = std::max(w, interior_max(c));
  return w;
}

double combined_norm(const Trajectory& parts) {
  double s = 0.0;
  for (const auto& c : parts) s += std::pow(interior_norm(c), 2);
  return std::sqrt(s);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

ojson base_meta(const ProblemFile& pf, const std::string& command) {
  ojson meta;
  meta["schema"] = 1;
  meta["command"] = command;
  if (!pf.preset.empty()) {
    meta["preset"] = pf.preset;
    meta["preset_problem"] =
        pf.preset == "example1"
            ? "minimize (1/2) int_0^1 (RC-D^alpha q)^2 dt with q(0) = 0, q(1) = 1; conservation law of the time shift"
            : "minimize (1/2) int_0^1 (q^2 + u^2) dt subject to RC-D^alpha q = -q + u, q(0) = 1; conservation law of "
              "the time shift";
  }
  meta["interval"] = {pf.a, pf.b};
  meta["alpha"] = pf.alpha;
  meta["N"] = pf.ns;
  return meta;
}

void add_refinement_summary(Outcome& o) {
  const auto& tr = o.report.refinement;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::string line = "N=" + std::to_string(tr[k].first) + " interior_norm=" + fmt(tr[k].second);
    if (k > 0) line += " ratio=" + fmt(tr[k - 1].second / tr[k].second);
    o.summary.push_back(line);
  }
}

Outcome cmd_deriv(const ProblemFile& pf, std::optional<double> oracle_tol) {
  if (pf.ns.size() != 1) throw ValidationError("deriv takes a single N");
  const Grid g(pf.a, pf.b, pf.ns.front());
  const FracOrder alpha(pf.alpha);
  const OperatorKind kind = operator_kind_from_string(pf.op);
  const expr::Expr f = expr::parse(pf.expr, expr::VarSet::time_only());
  const GridFunction fs = GridFunction::sample(g, f);
  const GridFunction value = apply(kind, alpha, fs);

  Outcome o;
  auto& cols = o.report.columns;
  cols = {time_column(g), column("f", fs), column(std::string(to_string(kind)), value)};
  ojson meta = base_meta(pf, "deriv");
  meta["expr"] = pf.expr;
  meta["operator"] = std::string(to_string(kind));
  if (oracle_tol) {
    if (!(*oracle_tol > 0.0)) throw ValidationError("--oracle needs a positive tolerance");
    Column ref{"oracle", std::vector<double>(g.size(), 0.0), value.flags()};
    Column gap{"abs_error", std::vector<double>(g.size(), 0.0), value.flags()};
    double worst = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      if (value.flagged(i)) continue;
      ref.values[i] = apply_oracle(kind, alpha, f, g.a(), g.b(), g.node(i), OracleOptions{*oracle_tol});
      gap.values[i] = std::abs(value[i] - ref.values[i]);
      worst = std::max(worst, gap.values[i]);
    }
    cols.push_back(std::move(ref));
    cols.push_back(std::move(gap));
    meta["oracle_tol"] = *oracle_tol;
    meta["max_abs_error"] = worst;
    o.summary.push_back("max |discrete - oracle| = " + fmt(worst));
  }
  o.report.meta_json = meta.dump();
  return o;
}

Extremal ritz_extremal(const VariationalProblem& prob) {
  Extremal ex = solve_ritz(prob);
  if (!ex.diagnostics.converged)
    throw NumericError("Ritz solver did not converge on N=" + std::to_string(prob.grid().size()) +
                       " (gradient norm " + fmt(ex.diagnostics.gradient_norm) + ")");
  return ex;
}

ojson ritz_meta(const VariationalProblem& prob, const Extremal& ex) {
  ojson run;
  run["N"] = prob.grid().size();
  run["objective"] = ex.objective;
  run["iterations"] = ex.diagnostics.iterations;
  run["gradient_norm"] = ex.diagnostics.gradient_norm;
  run["el_interior_norm"] = combined_norm(el_residual(prob, ex.q));
  return run;
}

Outcome cmd_solve_cv(const ProblemFile& pf) {
  if (pf.kind != ProblemKind::Variational) throw ValidationError("solve-cv needs a variational problem");
  Outcome o;
  ojson meta = base_meta(pf, "solve-cv");
  ojson runs = ojson::array();
  for (int n : pf.ns) {
    const auto prob = to_variational(pf, n);
    const auto ex = ritz_extremal(prob);
    runs.push_back(ritz_meta(prob, ex));
    o.summary.push_back("N=" + std::to_string(n) + " objective=" + fmt(ex.objective) +
                        " el_interior_norm=" + fmt(runs.back()["el_interior_norm"].get<double>()));
    if (n == pf.ns.back()) {
      o.report.columns = {time_column(prob.grid())};
      add_columns(o.report.columns, "q", ex.q);
      add_columns(o.report.columns, "el", el_residual(prob, ex.q));
    }
  }
  meta["runs"] = std::move(runs);
  o.report.meta_json = meta.dump();
  return o;
}

Outcome cmd_check_invariance(const ProblemFile& pf) {
  if (pf.kind != ProblemKind::Variational) throw ValidationError("check-invariance needs a variational problem");
  const SymmetryGenerators gen = to_symmetry(pf);
  const std::vector<double> eps{-1e-2, -1e-3, 1e-3, 1e-2};
  Outcome o;
  ojson meta = base_meta(pf, "check-invariance");
  ojson runs = ojson::array();
  bool all_invariant = true;
  for (int n : pf.ns) {
    const auto prob = to_variational(pf, n);
    const auto q = ritz_extremal(prob).q;
    const InvarianceReport inv = check_invariance_numeric(prob, gen, q, eps);
    const GridFunction r = invariance_residual(prob, gen, q);
    o.report.refinement.emplace_back(n, interior_norm(r));
    ojson run;
    run["N"] = n;
    run["mode"] = inv.mode == InvarianceReport::Mode::Shift ? "shift" : "affine-time";
    run["invariant"] = inv.invariant;
    run["eps"] = inv.eps;
    run["delta"] = inv.delta;
    if (inv.mode == InvarianceReport::Mode::Shift) {
      run["slope"] = inv.slope;
      run["residual_integral"] = inv.residual_integral;
      run["slope_mismatch"] = inv.slope_mismatch;
      run["slope_matches"] = inv.slope_matches;
    }
    runs.push_back(std::move(run));
    all_invariant = all_invariant && inv.invariant;
    o.summary.push_back("N=" + std::to_string(n) + (inv.invariant ? " invariant" : " not invariant"));
    if (n == pf.ns.back()) {
      o.report.columns = {time_column(prob.grid())};
      add_columns(o.report.columns, "q", q);
      o.report.columns.push_back(column("invariance_residual", r));
    }
  }
  meta["invariant"] = all_invariant;
  meta["runs"] = std::move(runs);
  o.report.meta_json = meta.dump();
  return o;
}

Outcome cmd_check_noether(const ProblemFile& pf, const std::string& command) {
  if (pf.kind != ProblemKind::Variational) throw ValidationError(command + " needs a variational problem");
  const SymmetryGenerators gen = to_symmetry(pf);
  Outcome o;
  ojson meta = base_meta(pf, command);
  ojson runs = ojson::array();
  ConservationReport last = refinement_study(pf.ns, [&](int n) {
    const auto prob = to_variational(pf, n);
    const auto ex = ritz_extremal(prob);
    ConservationReport rep = noether_residual(prob, gen, ex.q);
    ojson run = ritz_meta(prob, ex);
    run["interior_norm"] = rep.interior_norm;
    run["interior_max"] = rep.interior_max;
    runs.push_back(std::move(run));
    if (n == pf.ns.back()) {
      o.report.columns = {time_column(prob.grid())};
      add_columns(o.report.columns, "q", ex.q);
      o.report.columns.push_back(column("residual", rep.residual));
    }
    return rep;
  });
  o.report.refinement = last.grid_refinement_trace;
  meta["warnings"] = last.warnings;
  meta["runs"] = std::move(runs);
  o.report.meta_json = meta.dump();
  add_refinement_summary(o);
  for (const auto& w : last.warnings) o.summary.push_back("warning: " + w);
  return o;
}

PontryaginTriple lq_extremal(const ControlProblem& prob) { return solve_lq(prob, LqOptions{max_grid_size()}); }

ojson lq_meta(const ControlProblem& prob, const PontryaginTriple& trip) {
  const PontryaginResidual r = pontryagin_residual(prob, trip);
  ojson run;
  run["N"] = prob.grid().size();
  run["cost"] = cost(prob, trip);
  run["augmented_functional"] = augmented_functional(prob, trip);
  run["state_residual_max"] = max_interior(r.state);
  run["costate_residual_max"] = max_interior(r.costate);
  run["stationarity_residual_max"] = max_interior(r.stationarity);
  return run;
}

void add_triple(std::vector<Column>& cols, const ControlProblem& prob, const PontryaginTriple& trip) {
  cols = {time_column(prob.grid())};
  add_columns(cols, "q", trip.q);
  add_columns(cols, "u", trip.u);
  add_columns(cols, "p", trip.p);
  cols.push_back(column("H", hamiltonian_samples(prob, trip)));
}

Outcome cmd_solve_oc(const ProblemFile& pf) {
  if (pf.kind != ProblemKind::Control) throw ValidationError("solve-oc needs a control problem");
  Outcome o;
  ojson meta = base_meta(pf, "solve-oc");
  ojson runs = ojson::array();
  for (int n : pf.ns) {
    const auto prob = to_control(pf, n);
    const auto trip = lq_extremal(prob);
    runs.push_back(lq_meta(prob, trip));
    o.summary.push_back("N=" + std::to_string(n) + " cost=" + fmt(runs.back()["cost"].get<double>()));
    if (n == pf.ns.back()) {
      add_triple(o.report.columns, prob, trip);
      const PontryaginResidual r = pontryagin_residual(prob, trip);
      add_columns(o.report.columns, "state", r.state);
      add_columns(o.report.columns, "costate", r.costate);
      add_columns(o.report.columns, "stationarity", r.stationarity);
    }
  }
  meta["runs"] = std::move(runs);
  o.report.meta_json = meta.dump();
  return o;
}

Outcome cmd_check_noether_oc(const ProblemFile& pf, const std::string& command) {
  if (pf.kind != ProblemKind::Control) throw ValidationError(command + " needs a control problem");
  const ControlGenerators gen = to_control_generators(pf);
  Outcome o;
  ojson meta = base_meta(pf, command);
  ojson runs = ojson::array();
  ConservationReport last = refinement_study(pf.ns, [&](int n) {
    const auto prob = to_control(pf, n);
    const auto trip = lq_extremal(prob);
    ConservationReport rep = hamiltonian_noether_residual(prob, gen, trip);
    ojson run = lq_meta(prob, trip);
    run["interior_norm"] = rep.interior_norm;
    run["interior_max"] = rep.interior_max;

    // drift of H relative to its value at the middle node
    const GridFunction h = hamiltonian_samples(prob, trip);
    const double ref = h[n / 2];
    const double scale = std::max(1.0, std::abs(ref));
    std::vector<double> drift(n);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      drift[i] = (h[i] - ref) / scale;
      worst = std::max(worst, std::abs(drift[i]));
    }
    run["hamiltonian_drift_max"] = worst;
    runs.push_back(std::move(run));
    if (n == pf.ns.back()) {
      add_triple(o.report.columns, prob, trip);
      o.report.columns.push_back({"hamiltonian_drift", drift, std::vector<bool>(n, false)});
      if (prob.autonomous()) o.report.columns.push_back(column("invariant", autonomous_invariant(prob, trip)));
      o.report.columns.push_back(column("residual", rep.residual));
    }
    return rep;
  });
  o.report.refinement = last.grid_refinement_trace;
  meta["warnings"] = last.warnings;
  meta["runs"] = std::move(runs);
  o.report.meta_json = meta.dump();
  add_refinement_summary(o);
  for (const auto& w : last.warnings) o.summary.push_back("warning: " + w);
  return o;
}

void apply_overrides(ProblemFile& pf, const Overrides& ov) {
  if (ov.alpha) pf.alpha = *ov.alpha;
  if (!ov.ns.empty()) pf.ns = ov.ns;
  if (!ov.out.empty()) pf.output_path = ov.out;
  if (!ov.format.empty()) pf.output_format = ov.format;
  validate(pf);
}

std::string output_format(const ProblemFile& pf) {
  if (pf.output_format) return *pf.output_format;
  if (pf.output_path && fs::path(*pf.output_path).extension() == ".json") return "json";
  return "csv";
}

void check_destination(const ProblemFile& pf) {
  if (!pf.output_path) return;
  const fs::path p(*pf.output_path);
  if (p.filename().empty()) throw ValidationError("output path '" + p.string() + "' names a directory");
  const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  if (!fs::is_directory(dir)) throw ValidationError("output directory '" + dir.string() + "' does not exist");
}

void emit(const ProblemFile& pf, const Outcome& o, bool quiet, std::ostream& out, std::ostream& err) {
  const std::string format = output_format(pf);
  const std::string body = format == "json" ? render_json(o.report) : render_csv(o.report);
  if (!pf.output_path) {
    out << body;
  } else {
    const fs::path path(*pf.output_path);
    std::vector<std::pair<fs::path, std::string>> files{{path, body}};
    if (format == "csv") {
      const fs::path stem = path.parent_path() / path.stem();
      files.emplace_back(fs::path(stem.string() + ".meta.json"), ojson::parse(o.report.meta_json).dump(2) + "\n");
      if (!o.report.refinement.empty())
        files.emplace_back(fs::path(stem.string() + ".refinement.csv"), render_refinement_csv(o.report));
    }
    write_atomically(files);
    if (!quiet)
      for (const auto& [p, _] : files) err << "wrote " << p.string() << '\n';
  }
  if (!quiet)
    for (const auto& line : o.summary) err << line << '\n';
}

void add_common(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--alpha", ov.alpha, "Fractional order in (0, 1]");
  cmd->add_option("--N", ov.ns, "Grid size, or a comma-separated refinement list")->delimiter(',');
  cmd->add_option("--out", ov.out, "Output path (default: standard output)");
  cmd->add_option("--format", ov.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--quiet", ov.quiet, "Suppress the summary on standard error");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractional variational calculus in the Riesz-Caputo sense", "frac-noether"};
  app.require_subcommand(1);
  Overrides ov;
  std::string file, expr_src, kind_name = "riesz-caputo", example;
  double a = 0.0, b = 1.0;

  auto* deriv = app.add_subcommand("deriv", "Apply a fractional operator to an expression in t");
  deriv->add_option("problem", file, "Operator problem file");
  deriv->add_option("--expr", expr_src, "Expression in t");
  deriv->add_option("--kind", kind_name, "Operator, e.g. left-caputo, riesz-caputo");
  deriv->add_option("--a", a, "Left end of the interval");
  deriv->add_option("--b", b, "Right end of the interval");
  deriv->add_option("--oracle", ov.oracle, "Add a quadrature reference column with this tolerance");
  add_common(deriv, ov);

  struct FileCommand {
    const char* name;
    const char* help;
  };
  const FileCommand file_commands[] = {
      {"solve-cv", "Ritz extremal of a variational problem"},
      {"check-invariance", "Numerical invariance test of a variational problem under its generators"},
      {"check-noether", "Noether residual along Ritz extremals, with refinement trace"},
      {"solve-oc", "Pontryagin extremal of a linear-quadratic control problem"},
      {"check-noether-oc", "Hamiltonian-form Noether residual along Pontryagin extremals"},
  };
  std::vector<CLI::App*> file_cmds;
  for (const auto& fc : file_commands) {
    auto* cmd = app.add_subcommand(fc.name, fc.help);
    cmd->add_option("problem", file, "Problem file (JSON)")->required();
    add_common(cmd, ov);
    file_cmds.push_back(cmd);
  }
  auto* examples = app.add_subcommand("examples", "Built-in examples with refinement studies");
  examples->add_option("name", example, "example1 or example2")->required();
  add_common(examples, ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    ProblemFile pf;
    Outcome o;
    if (*deriv) {
      if (!file.empty()) {
        pf = load_problem(file);
        if (pf.kind != ProblemKind::Operator) throw ValidationError("deriv needs an operator problem file");
        if (!expr_src.empty()) pf.expr = expr_src;
        if (deriv->count("--kind")) pf.op = kind_name;
      } else {
        if (expr_src.empty()) throw ValidationError("deriv needs --expr or a problem file");
        if (!ov.alpha) throw ValidationError("deriv needs --alpha");
        if (ov.ns.empty()) throw ValidationError("deriv needs --N");
        pf.kind = ProblemKind::Operator;
        pf.expr = expr_src;
        pf.op = kind_name;
        pf.a = a;
        pf.b = b;
        pf.ns = ov.ns;
        pf.alpha = *ov.alpha;
      }
      apply_overrides(pf, ov);
      check_destination(pf);
      o = cmd_deriv(pf, ov.oracle);
    } else if (*examples) {
      pf = preset(example);
      apply_overrides(pf, ov);
      check_destination(pf);
      o = example == "example1" ? cmd_check_noether(pf, "examples") : cmd_check_noether_oc(pf, "examples");
    } else {
      pf = load_problem(file);
      apply_overrides(pf, ov);
      check_destination(pf);
      const std::string name = app.get_subcommands().front()->get_name();
      if (name == "solve-cv") o = cmd_solve_cv(pf);
      else if (name == "check-invariance") o = cmd_check_invariance(pf);
      else if (name == "check-noether") o = cmd_check_noether(pf, name);
      else if (name == "solve-oc") o = cmd_solve_oc(pf);
      else o = cmd_check_noether_oc(pf, name);
    }
    emit(pf, o, ov.quiet, out, err);
    return 0;
  } catch (const ValidationError& e) {
    err << "frac-noether: error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    err << "frac-noether: numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "frac-noether: error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace fracnoether::cli
