#pragma once

// Command-line front end of frac-noether: problem files, report rendering
// and the command dispatcher used by the executable.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracnoether/noether.hpp"
#include "fracnoether/optctrl.hpp"
#include "fracnoether/variational.hpp"

namespace fracnoether::cli {

enum class ProblemKind { Operator, Variational, Control };

struct GeneratorSpec {
  std::string tau;
  std::vector<std::string> xi;
  std::vector<std::string> rho;
  std::vector<std::string> sigma;
};

/// Parsed and schema-checked JSON problem file.
///
///   {"schema": 1, "kind": "variational" | "control" | "operator",
///    "interval": {"a": 0, "b": 1}, "alpha": 0.75,
///    "grid": {"N": 129} or {"N_list": [129, 257]},
///    "lagrangian": "...", "dynamics": ["..."],            (control only)
///    "boundary": {"qa": [..], "qb": [..]},
///    "generators": {"tau": "1", "xi": ["0"], "rho": [], "sigma": []},
///    "expr": "...", "operator": "left-caputo",            (operator only)
///    "output": {"path": "out.csv", "format": "csv"}}
struct ProblemFile {
  ProblemKind kind = ProblemKind::Variational;
  double a = 0.0;
  double b = 1.0;
  double alpha = 1.0;
  std::vector<int> ns;
  std::string lagrangian;
  std::vector<std::string> dynamics;
  std::string expr;
  std::string op;
  std::vector<double> qa;
  std::optional<std::vector<double>> qb;
  std::optional<GeneratorSpec> generators;
  std::optional<std::string> output_path;
  std::optional<std::string> output_format;
  std::string preset;  // name of the built-in example, empty for files

  int n() const { return static_cast<int>(qa.size()); }
  /// Number of controls: one past the largest u index in L and phi.
  int m() const;
};

/// Throws ValidationError on malformed JSON, unknown keys, missing fields
/// or expressions outside the kind's variable set.
ProblemFile parse_problem(std::string_view json_text);
ProblemFile load_problem(const std::filesystem::path& path);

/// Built-in examples "example1" (variational) and "example2" (control).
ProblemFile preset(std::string_view name);

/// Re-runs the schema checks after command-line overrides.
void validate(const ProblemFile& pf);

VariationalProblem to_variational(const ProblemFile& pf, int n_nodes);
ControlProblem to_control(const ProblemFile& pf, int n_nodes);
SymmetryGenerators to_symmetry(const ProblemFile& pf);
ControlGenerators to_control_generators(const ProblemFile& pf);

/// Grid-size cap: FRAC_NOETHER_MAX_N when set, else 4097.
int max_grid_size();

struct Column {
  std::string name;
  std::vector<double> values;
  std::vector<bool> flagged;
};

/// Per-node table plus metadata of one command run.
struct Report {
  std::vector<Column> columns;
  std::string meta_json;  // serialized object, see render_json
  std::vector<std::pair<int, double>> refinement;
};

Column column(std::string name, const GridFunction& f);

/// Header row then one row per node; 17 significant digits; flagged cells
/// are empty. Throws NumericError on a non-finite unflagged value.
std::string render_csv(const Report& report);
std::string render_refinement_csv(const Report& report);
/// {"meta": ..., "refinement": [...], "columns": {"t": [...], ...}} with
/// null for flagged cells.
std::string render_json(const Report& report);

/// Writes every (path, contents) pair through a temporary file and a rename.
void write_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

/// Runs one command. Returns the process exit code: 0 success, 2 invalid
/// input, 3 numeric failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fracnoether::cli
