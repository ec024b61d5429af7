#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fracnoether/cli.hpp"
#include "fracnoether/error.hpp"
#include "json.hpp"

namespace fracnoether::cli {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) { throw ValidationError(msg); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) invalid(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) invalid("unknown key '" + key + "' in " + where);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) invalid(what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(what + " must be finite");
  return x;
}

std::string text(const json& v, const std::string& what) {
  if (!v.is_string()) invalid(what + " must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& what) {
  if (v.is_number()) return {number(v, what)};
  if (!v.is_array()) invalid(what + " must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

std::vector<std::string> texts(const json& v, const std::string& what) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) invalid(what + " must be a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(text(x, what));
  return out;
}

int grid_size(const json& v) {
  if (!v.is_number_integer()) invalid("grid sizes must be integers");
  return v.get<int>();
}

int max_index(const std::string& src, char prefix) {
  int best = -1;
  for (const auto& name : expr::parse(src).variables()) {
    if (name.size() < 2 || name[0] != prefix) continue;
    if (name.find_first_not_of("0123456789", 1) != std::string::npos) continue;
    best = std::max(best, std::stoi(name.substr(1)));
  }
  return best;
}

expr::VarSet generator_scope(const ProblemFile& pf) {
  if (pf.kind == ProblemKind::Control) return expr::VarSet::control(pf.n(), pf.m());
  std::vector<std::string> names{"t"};
  for (int k = 0; k < pf.n(); ++k) names.push_back("q" + std::to_string(k));
  return expr::VarSet(std::move(names));
}

expr::Expr scoped(const std::string& src, const expr::VarSet& vars, const std::string& what) {
  try {
    return expr::parse(src, vars);
  } catch (const ValidationError& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

}  // namespace

int ProblemFile::m() const {
  int best = max_index(lagrangian, 'u');
  for (const auto& d : dynamics) best = std::max(best, max_index(d, 'u'));
  return best + 1;
}

int max_grid_size() {
  const char* env = std::getenv("FRAC_NOETHER_MAX_N");
  if (!env || !*env) return 4097;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 3 || v > 1'000'000)
    throw ValidationError(std::string("FRAC_NOETHER_MAX_N must be an integer in [3, 1000000], got '") + env + "'");
  return static_cast<int>(v);
}

void validate(const ProblemFile& pf) {
  if (!(pf.b > pf.a)) invalid("interval needs a < b");
  if (!(pf.alpha > 0.0 && pf.alpha <= 1.0)) invalid("alpha must lie in (0, 1]");
  if (pf.ns.empty()) invalid("grid needs N or N_list");
  const int cap = max_grid_size();
  for (std::size_t i = 0; i < pf.ns.size(); ++i) {
    const int n = pf.ns[i];
    if (n < 3) invalid("grid size " + std::to_string(n) + " is below 3");
    if (n > cap) invalid("grid size " + std::to_string(n) + " exceeds the cap " + std::to_string(cap));
    if (pf.ns.size() > 1 && n % 2 == 0) invalid("refinement grids must have odd N, got " + std::to_string(n));
    if (i > 0 && n <= pf.ns[i - 1]) invalid("N_list must be strictly increasing");
  }
  if (pf.output_format && *pf.output_format != "csv" && *pf.output_format != "json")
    invalid("output format must be csv or json");

  if (pf.kind == ProblemKind::Operator) {
    if (pf.expr.empty()) invalid("operator problems need 'expr'");
    scoped(pf.expr, expr::VarSet::time_only(), "expr");
    operator_kind_from_string(pf.op);
    return;
  }
  if (pf.qa.empty()) invalid("boundary.qa is required");
  if (pf.qb && pf.qb->size() != pf.qa.size()) invalid("boundary.qb must have as many entries as qa");
  if (pf.lagrangian.empty()) invalid("'lagrangian' is required");
  if (pf.kind == ProblemKind::Variational) {
    if (!pf.dynamics.empty()) invalid("'dynamics' only applies to control problems");
    scoped(pf.lagrangian, expr::VarSet::variational(pf.n()), "lagrangian");
  } else {
    if (static_cast<int>(pf.dynamics.size()) != pf.n())
      invalid("control problems need one dynamics expression per state component (" + std::to_string(pf.n()) + ")");
    if (pf.m() < 1) invalid("control problems need at least one control variable u0");
    to_control(pf, pf.ns.front());
  }
  if (pf.generators) {
    const auto vars = generator_scope(pf);
    const auto& g = *pf.generators;
    scoped(g.tau, vars, "generators.tau");
    if (static_cast<int>(g.xi.size()) != pf.n()) invalid("generators.xi needs " + std::to_string(pf.n()) + " entries");
    for (const auto& x : g.xi) scoped(x, vars, "generators.xi");
    if (pf.kind == ProblemKind::Variational && (!g.rho.empty() || !g.sigma.empty()))
      invalid("generators.rho and sigma only apply to control problems");
    if (!g.rho.empty() && static_cast<int>(g.rho.size()) != pf.m())
      invalid("generators.rho needs " + std::to_string(pf.m()) + " entries");
    if (!g.sigma.empty() && static_cast<int>(g.sigma.size()) != pf.n())
      invalid("generators.sigma needs " + std::to_string(pf.n()) + " entries");
    for (const auto* list : {&g.rho, &g.sigma})
      for (const auto& x : *list) scoped(x, vars, "generators");
  }
}

ProblemFile parse_problem(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    invalid(std::string("malformed JSON: ") + e.what());
  }
  only_keys(doc, "the top level",
            {"schema", "kind", "interval", "alpha", "grid", "lagrangian", "dynamics", "boundary", "generators", "expr",
             "operator", "output"});
  if (!doc.contains("schema")) invalid("missing \"schema\": 1");
  if (!doc["schema"].is_number_integer() || doc["schema"].get<int>() != 1) invalid("unsupported schema version");

  ProblemFile pf;
  if (!doc.contains("kind")) invalid("missing 'kind'");
  const std::string kind = text(doc["kind"], "kind");
  if (kind == "variational") pf.kind = ProblemKind::Variational;
  else if (kind == "control") pf.kind = ProblemKind::Control;
  else if (kind == "operator") pf.kind = ProblemKind::Operator;
  else invalid("kind must be variational, control or operator");

  if (doc.contains("interval")) {
    const auto& iv = doc["interval"];
    only_keys(iv, "interval", {"a", "b"});
    if (!iv.contains("a") || !iv.contains("b")) invalid("interval needs a and b");
    pf.a = number(iv["a"], "interval.a");
    pf.b = number(iv["b"], "interval.b");
  }
  if (!doc.contains("alpha")) invalid("missing 'alpha'");
  pf.alpha = number(doc["alpha"], "alpha");

  if (!doc.contains("grid")) invalid("missing 'grid'");
  const auto& grid = doc["grid"];
  only_keys(grid, "grid", {"N", "N_list"});
  if (grid.contains("N") == grid.contains("N_list")) invalid("grid needs exactly one of N and N_list");
  if (grid.contains("N")) {
    pf.ns = {grid_size(grid["N"])};
  } else {
    if (!grid["N_list"].is_array()) invalid("grid.N_list must be a list");
    for (const auto& v : grid["N_list"]) pf.ns.push_back(grid_size(v));
  }

  if (doc.contains("lagrangian")) pf.lagrangian = text(doc["lagrangian"], "lagrangian");
  if (doc.contains("dynamics")) pf.dynamics = texts(doc["dynamics"], "dynamics");
  if (doc.contains("expr")) pf.expr = text(doc["expr"], "expr");
  if (doc.contains("operator")) pf.op = text(doc["operator"], "operator");
  if (pf.kind != ProblemKind::Operator && (doc.contains("expr") || doc.contains("operator")))
    invalid("'expr' and 'operator' only apply to operator problems");
  if (pf.kind == ProblemKind::Operator && doc.contains("lagrangian"))
    invalid("'lagrangian' does not apply to operator problems");

  if (doc.contains("boundary")) {
    const auto& bd = doc["boundary"];
    only_keys(bd, "boundary", {"qa", "qb"});
    if (bd.contains("qa")) pf.qa = numbers(bd["qa"], "boundary.qa");
    if (bd.contains("qb") && !bd["qb"].is_null()) pf.qb = numbers(bd["qb"], "boundary.qb");
  }
  if (doc.contains("generators")) {
    const auto& g = doc["generators"];
    only_keys(g, "generators", {"tau", "xi", "rho", "sigma"});
    GeneratorSpec spec;
    spec.tau = g.contains("tau") ? text(g["tau"], "generators.tau") : "0";
    if (g.contains("xi")) spec.xi = texts(g["xi"], "generators.xi");
    if (g.contains("rho")) spec.rho = texts(g["rho"], "generators.rho");
    if (g.contains("sigma")) spec.sigma = texts(g["sigma"], "generators.sigma");
    pf.generators = std::move(spec);
  }
  if (doc.contains("output")) {
    const auto& out = doc["output"];
    only_keys(out, "output", {"path", "format"});
    if (out.contains("path")) pf.output_path = text(out["path"], "output.path");
    if (out.contains("format")) pf.output_format = text(out["format"], "output.format");
  }
  validate(pf);
  return pf;
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read problem file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

ProblemFile preset(std::string_view name) {
  ProblemFile pf;
  pf.preset = std::string(name);
  if (name == "example1") {
    pf.kind = ProblemKind::Variational;
    pf.alpha = 0.75;
    pf.lagrangian = "v0^2/2";
    pf.qa = {0.0};
    pf.qb = std::vector<double>{1.0};
  } else if (name == "example2") {
    pf.kind = ProblemKind::Control;
    pf.alpha = 0.6;
    pf.lagrangian = "(q0^2 + u0^2)/2";
    pf.dynamics = {"-q0 + u0"};
    pf.qa = {1.0};
  } else {
    throw ValidationError("unknown example '" + std::string(name) + "' (expected example1 or example2)");
  }
  pf.ns = {129, 257};
  pf.generators = GeneratorSpec{"1", {"0"}, {}, {}};
  return pf;
}

VariationalProblem to_variational(const ProblemFile& pf, int n_nodes) {
  return VariationalProblem(Grid(pf.a, pf.b, n_nodes), FracOrder(pf.alpha), pf.n(),
                            scoped(pf.lagrangian, expr::VarSet::variational(pf.n()), "lagrangian"), pf.qa, pf.qb);
}

ControlProblem to_control(const ProblemFile& pf, int n_nodes) {
  const auto vars = expr::VarSet::control(pf.n(), pf.m());
  std::vector<expr::Expr> dyn;
  for (const auto& d : pf.dynamics) dyn.push_back(scoped(d, vars, "dynamics"));
  return ControlProblem(Grid(pf.a, pf.b, n_nodes), FracOrder(pf.alpha), pf.n(), pf.m(),
                        scoped(pf.lagrangian, vars, "lagrangian"), std::move(dyn), pf.qa, pf.qb);
}

namespace {

const GeneratorSpec& need_generators(const ProblemFile& pf) {
  if (!pf.generators) throw ValidationError("this command needs a 'generators' section");
  return *pf.generators;
}

std::vector<expr::Expr> parse_all(const std::vector<std::string>& src, const expr::VarSet& vars, const char* what) {
  std::vector<expr::Expr> out;
  for (const auto& s : src) out.push_back(scoped(s, vars, what));
  return out;
}

}  // namespace

SymmetryGenerators to_symmetry(const ProblemFile& pf) {
  const auto& g = need_generators(pf);
  const auto vars = generator_scope(pf);
  return {scoped(g.tau, vars, "generators.tau"), parse_all(g.xi, vars, "generators.xi")};
}

ControlGenerators to_control_generators(const ProblemFile& pf) {
  const auto& g = need_generators(pf);
  const auto vars = generator_scope(pf);
  return {scoped(g.tau, vars, "generators.tau"), parse_all(g.xi, vars, "generators.xi"),
          parse_all(g.rho, vars, "generators.rho"), parse_all(g.sigma, vars, "generators.sigma")};
}

}  // namespace fracnoether::cli
