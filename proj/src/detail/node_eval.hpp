#pragma once

// Evaluates expressions node by node along sampled trajectories.

#include <string>
#include <string_view>
#include <vector>

#include "fracnoether/expr.hpp"
#include "fracnoether/fracops.hpp"

namespace fracnoether::detail {

class NodeEvaluator {
 public:
  /// `t` is bound to the grid nodes automatically.
  NodeEvaluator(const Grid& grid, expr::VarSet vars);

  void bind(std::string_view name, const GridFunction& f);
  /// Binds name0, name1, ... to the components of f.
  void bind_components(std::string_view prefix, const Trajectory& f);

  /// Samples e at every node. Domain errors name the node; flags of the
  /// bound inputs that e depends on carry over.
  GridFunction eval(const expr::Expr& e, std::string_view what) const;

  const expr::VarSet& vars() const { return vars_; }

 private:
  Grid grid_;
  expr::VarSet vars_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<bool>> flags_;
  std::vector<bool> bound_;
};

}  // namespace fracnoether::detail
