#pragma once

// Scalar expression language used for Lagrangians, dynamics, Hamiltonians
// and symmetry generators.
//
// Variables are plain names; problems declare which names are legal through
// a VarSet (t, q0.., v0.., u0.., p0..). Vector quantities are spelled out
// component-wise, so every expression stays scalar.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fracnoether::expr {

enum class Func { Neg, Sin, Cos, Exp, Ln, Sqrt, Abs };
enum class BinOp { Add, Sub, Mul, Div, Pow };

/// Ordered set of declared variable names. The order defines slot indices
/// for compiled evaluation.
class VarSet {
 public:
  VarSet() = default;
  explicit VarSet(std::vector<std::string> names);

  static VarSet time_only();
  /// t, q0..q{n-1}, v0..v{n-1}
  static VarSet variational(int n);
  /// t, q0..q{n-1}, u0..u{m-1}, p0..p{n-1}
  static VarSet control(int n, int m);

  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

using Env = std::map<std::string, double, std::less<>>;

/// Immutable expression tree. Copies share structure.
class Expr {
 public:
  enum class Kind { Constant, Variable, Unary, Binary };

  /// The constant 0.
  Expr();

  // Raw constructors: build exactly the requested node.
  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr unary(Func f, Expr operand);
  static Expr binary(BinOp op, Expr lhs, Expr rhs);

  Kind kind() const;
  double value() const;              // Constant
  const std::string& name() const;   // Variable
  Func func() const;                 // Unary
  BinOp op() const;                  // Binary
  const Expr& operand() const;       // Unary
  const Expr& lhs() const;           // Binary
  const Expr& rhs() const;           // Binary

  bool is_constant() const { return kind() == Kind::Constant; }
  bool is_constant(double v) const { return is_constant() && value() == v; }

  std::set<std::string> variables() const;
  bool depends_on(std::string_view name) const;

  /// Infix rendering that parses back to the same tree (for trees with
  /// non-negative constants, which is all the parser produces).
  std::string str() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Folding constructors. Literal subtrees are evaluated and the neutral
// elements 0 and 1 are dropped; nothing else is rewritten.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr apply(Func f, const Expr& operand);

/// Parses an infix expression. Without a VarSet any identifier that is not a
/// function call is accepted as a variable.
Expr parse(std::string_view source);
Expr parse(std::string_view source, const VarSet& declared);

/// Throws ValidationError if e mentions a name outside `declared`.
void check_scope(const Expr& e, const VarSet& declared, std::string_view what);

double eval(const Expr& e, const Env& env);

/// Exact partial derivative with respect to `var`.
Expr diff(const Expr& e, std::string_view var);

/// Replaces every occurrence of variable `var` with `replacement`.
Expr substitute(const Expr& e, std::string_view var, const Expr& replacement);

/// Flattened postfix form of an Expr bound to the slots of a VarSet.
/// Evaluation performs the same domain checks as eval().
class Program {
 public:
  Program() = default;
  Program(const Expr& e, const VarSet& vars);

  double operator()(std::span<const double> slots) const;

 private:
  enum class Op : unsigned char { Const, Load, Neg, Sin, Cos, Exp, Ln, Sqrt, Abs, Add, Sub, Mul, Div, Pow };
  struct Instr {
    Op op;
    std::size_t slot;
    double value;
  };
  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
  std::size_t n_slots_ = 0;

  void emit(const Expr& e, const VarSet& vars, std::size_t& depth);
};

}  // namespace fracnoether::expr
