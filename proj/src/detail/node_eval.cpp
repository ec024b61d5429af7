#include "detail/node_eval.hpp"

#include <sstream>

#include "fracnoether/error.hpp"

namespace fracnoether::detail {

NodeEvaluator::NodeEvaluator(const Grid& grid, expr::VarSet vars)
    : grid_(grid),
      vars_(std::move(vars)),
      columns_(vars_.size()),
      flags_(vars_.size()),
      bound_(vars_.size(), false) {
  if (auto slot = vars_.index_of("t")) {
    columns_[*slot] = grid_.nodes();
    flags_[*slot].assign(grid_.size(), false);
    bound_[*slot] = true;
  }
}

void NodeEvaluator::bind(std::string_view name, const GridFunction& f) {
  const auto slot = vars_.index_of(name);
  if (!slot) throw ValidationError("unknown variable '" + std::string(name) + "'");
  if (!(f.grid() == grid_)) throw ValidationError("grid mismatch binding '" + std::string(name) + "'");
  columns_[*slot].assign(f.values().begin(), f.values().end());
  flags_[*slot] = f.flags();
  bound_[*slot] = true;
}

void NodeEvaluator::bind_components(std::string_view prefix, const Trajectory& f) {
  for (std::size_t k = 0; k < f.size(); ++k) bind(std::string(prefix) + std::to_string(k), f[k]);
}

GridFunction NodeEvaluator::eval(const expr::Expr& e, std::string_view what) const {
  std::vector<bool> flags(grid_.size(), false);
  for (const auto& name : e.variables()) {
    const auto slot = vars_.index_of(name);
    if (!slot) throw ValidationError(std::string(what) + ": unknown variable '" + name + "'");
    if (!bound_[*slot]) throw ValidationError(std::string(what) + ": variable '" + name + "' has no samples");
    for (int i = 0; i < grid_.size(); ++i) flags[i] = flags[i] || flags_[*slot][i];
  }

  const expr::Program program(e, vars_);
  std::vector<double> slots(vars_.size(), 0.0);
  std::vector<double> out(grid_.size());
  for (int i = 0; i < grid_.size(); ++i) {
    for (std::size_t s = 0; s < slots.size(); ++s)
      if (bound_[s]) slots[s] = columns_[s][i];
    try {
      out[i] = program(slots);
    } catch (const DomainError& err) {
      std::ostringstream msg;
      msg.precision(17);
      msg << what << " at node " << i << " (t=" << grid_.node(i) << "): " << err.what();
      throw DomainError(msg.str());
    }
  }
  return GridFunction(grid_, std::move(out), std::move(flags));
}

}  // namespace fracnoether::detail
