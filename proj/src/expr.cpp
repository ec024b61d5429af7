#include "fracnoether/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <variant>

#include "fracnoether/error.hpp"

namespace fracnoether::expr {

// ---------------------------------------------------------------------------
// VarSet

VarSet::VarSet(std::vector<std::string> names) : names_(std::move(names)) {}

VarSet VarSet::time_only() { return VarSet({"t"}); }

namespace {
void append_family(std::vector<std::string>& names, char prefix, int count) {
  for (int i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i));
}
}  // namespace

VarSet VarSet::variational(int n) {
  std::vector<std::string> names{"t"};
  append_family(names, 'q', n);
  append_family(names, 'v', n);
  return VarSet(std::move(names));
}

VarSet VarSet::control(int n, int m) {
  std::vector<std::string> names{"t"};
  append_family(names, 'q', n);
  append_family(names, 'u', m);
  append_family(names, 'p', n);
  return VarSet(std::move(names));
}

std::optional<std::size_t> VarSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Expr nodes

struct Expr::Node {
  struct Constant {
    double value;
  };
  struct Variable {
    std::string name;
  };
  struct Unary {
    Func f;
    Expr operand;
  };
  struct Binary {
    BinOp op;
    Expr lhs, rhs;
  };
  std::variant<Constant, Variable, Unary, Binary> data;
};

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  return Expr(std::make_shared<const Node>(Node{Node::Constant{value}}));
}
Expr Expr::variable(std::string name) {
  return Expr(std::make_shared<const Node>(Node{Node::Variable{std::move(name)}}));
}
Expr Expr::unary(Func f, Expr operand) {
  return Expr(std::make_shared<const Node>(Node{Node::Unary{f, std::move(operand)}}));
}
Expr Expr::binary(BinOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const Node>(Node{Node::Binary{op, std::move(lhs), std::move(rhs)}}));
}

Expr::Kind Expr::kind() const { return static_cast<Kind>(node_->data.index()); }
double Expr::value() const { return std::get<Node::Constant>(node_->data).value; }
const std::string& Expr::name() const { return std::get<Node::Variable>(node_->data).name; }
Func Expr::func() const { return std::get<Node::Unary>(node_->data).f; }
BinOp Expr::op() const { return std::get<Node::Binary>(node_->data).op; }
const Expr& Expr::operand() const { return std::get<Node::Unary>(node_->data).operand; }
const Expr& Expr::lhs() const { return std::get<Node::Binary>(node_->data).lhs; }
const Expr& Expr::rhs() const { return std::get<Node::Binary>(node_->data).rhs; }

namespace {
void collect_variables(const Expr& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return;
    case Expr::Kind::Variable:
      out.insert(e.name());
      return;
    case Expr::Kind::Unary:
      collect_variables(e.operand(), out);
      return;
    case Expr::Kind::Binary:
      collect_variables(e.lhs(), out);
      collect_variables(e.rhs(), out);
      return;
  }
}
}  // namespace

std::set<std::string> Expr::variables() const {
  std::set<std::string> out;
  collect_variables(*this, out);
  return out;
}

bool Expr::depends_on(std::string_view name) const {
  switch (kind()) {
    case Kind::Constant:
      return false;
    case Kind::Variable:
      return this->name() == name;
    case Kind::Unary:
      return operand().depends_on(name);
    case Kind::Binary:
      return lhs().depends_on(name) || rhs().depends_on(name);
  }
  return false;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::Constant:
      return a.value() == b.value();
    case Expr::Kind::Variable:
      return a.name() == b.name();
    case Expr::Kind::Unary:
      return a.func() == b.func() && a.operand() == b.operand();
    case Expr::Kind::Binary:
      return a.op() == b.op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
  return false;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

constexpr const char* func_name(Func f) {
  switch (f) {
    case Func::Neg: return "-";
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Exp: return "exp";
    case Func::Ln: return "ln";
    case Func::Sqrt: return "sqrt";
    case Func::Abs: return "abs";
  }
  return "?";
}

// Binding strength used by the printer; mirrors the parser's grammar.
int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return 5;  // negative literals print self-parenthesized
    case Expr::Kind::Variable:
      return 5;
    case Expr::Kind::Unary:
      return e.func() == Func::Neg ? 3 : 5;
    case Expr::Kind::Binary:
      switch (e.op()) {
        case BinOp::Add:
        case BinOp::Sub: return 1;
        case BinOp::Mul:
        case BinOp::Div: return 2;
        case BinOp::Pow: return 4;
      }
  }
  return 0;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string wrap(const std::string& s) { return "(" + s + ")"; }

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Constant: {
      auto s = format_number(e.value());
      out += e.value() < 0 ? wrap(s) : s;
      return;
    }
    case Expr::Kind::Variable:
      out += e.name();
      return;
    case Expr::Kind::Unary: {
      if (e.func() == Func::Neg) {
        out += '-';
        std::string inner;
        print(e.operand(), inner);
        out += precedence(e.operand()) < 3 ? wrap(inner) : inner;
      } else {
        out += func_name(e.func());
        out += '(';
        print(e.operand(), out);
        out += ')';
      }
      return;
    }
    case Expr::Kind::Binary: {
      const int p = precedence(e);
      std::string l, r;
      print(e.lhs(), l);
      print(e.rhs(), r);
      const int pl = precedence(e.lhs());
      const int pr = precedence(e.rhs());
      if (e.op() == BinOp::Pow) {
        // right-associative; the exponent may carry a unary minus
        if (pl <= p) l = wrap(l);
        if (pr < 3) r = wrap(r);
        out += l + "^" + r;
        return;
      }
      if (pl < p) l = wrap(l);
      if (pr <= p) r = wrap(r);
      switch (e.op()) {
        case BinOp::Add: out += l + " + " + r; break;
        case BinOp::Sub: out += l + " - " + r; break;
        case BinOp::Mul: out += l + "*" + r; break;
        case BinOp::Div: out += l + "/" + r; break;
        case BinOp::Pow: break;
      }
      return;
    }
  }
}

}  // namespace

std::string Expr::str() const {
  std::string out;
  print(*this, out);
  return out;
}

// ---------------------------------------------------------------------------
// Scalar kernels shared by eval() and Program

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
  return v;
}

double apply_func(Func f, double x) {
  switch (f) {
    case Func::Neg: return -x;
    case Func::Sin: return checked(std::sin(x), "sin");
    case Func::Cos: return checked(std::cos(x), "cos");
    case Func::Exp: return checked(std::exp(x), "exp");
    case Func::Ln:
      if (x <= 0) throw DomainError("logarithm of non-positive value " + format_number(x));
      return std::log(x);
    case Func::Sqrt:
      if (x < 0) throw DomainError("square root of negative value " + format_number(x));
      return std::sqrt(x);
    case Func::Abs: return std::abs(x);
  }
  return x;
}

double apply_binop(BinOp op, double a, double b) {
  switch (op) {
    case BinOp::Add: return checked(a + b, "addition");
    case BinOp::Sub: return checked(a - b, "subtraction");
    case BinOp::Mul: return checked(a * b, "multiplication");
    case BinOp::Div:
      if (b == 0) throw DomainError("division by zero");
      return checked(a / b, "division");
    case BinOp::Pow:
      if (a < 0 && std::trunc(b) != b)
        throw DomainError("non-integer power of negative base " + format_number(a));
      if (a == 0 && b < 0) throw DomainError("division by zero in negative power of 0");
      return checked(std::pow(a, b), "power");
  }
  return 0;
}

}  // namespace

double eval(const Expr& e, const Env& env) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return e.value();
    case Expr::Kind::Variable: {
      auto it = env.find(e.name());
      if (it == env.end()) throw ValidationError("unbound variable '" + e.name() + "'");
      return it->second;
    }
    case Expr::Kind::Unary:
      return apply_func(e.func(), eval(e.operand(), env));
    case Expr::Kind::Binary:
      return apply_binop(e.op(), eval(e.lhs(), env), eval(e.rhs(), env));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Folding constructors

namespace {
bool foldable_binop(BinOp op, double a, double b, double& out) {
  try {
    out = apply_binop(op, a, b);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}
}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  double v;
  if (a.is_constant() && b.is_constant() && foldable_binop(BinOp::Add, a.value(), b.value(), v))
    return Expr::constant(v);
  if (a.is_constant(0)) return b;
  if (b.is_constant(0)) return a;
  return Expr::binary(BinOp::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  double v;
  if (a.is_constant() && b.is_constant() && foldable_binop(BinOp::Sub, a.value(), b.value(), v))
    return Expr::constant(v);
  if (b.is_constant(0)) return a;
  if (a.is_constant(0)) return -b;
  return Expr::binary(BinOp::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  double v;
  if (a.is_constant() && b.is_constant() && foldable_binop(BinOp::Mul, a.value(), b.value(), v))
    return Expr::constant(v);
  if (a.is_constant(0) || b.is_constant(0)) return Expr::constant(0);
  if (a.is_constant(1)) return b;
  if (b.is_constant(1)) return a;
  return Expr::binary(BinOp::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  double v;
  if (a.is_constant() && b.is_constant() && foldable_binop(BinOp::Div, a.value(), b.value(), v))
    return Expr::constant(v);
  if (b.is_constant(1)) return a;
  return Expr::binary(BinOp::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.value());
  return Expr::unary(Func::Neg, a);
}

Expr pow(const Expr& base, const Expr& exponent) {
  double v;
  if (base.is_constant() && exponent.is_constant() &&
      foldable_binop(BinOp::Pow, base.value(), exponent.value(), v))
    return Expr::constant(v);
  if (exponent.is_constant(1)) return base;
  if (exponent.is_constant(0)) return Expr::constant(1);
  return Expr::binary(BinOp::Pow, base, exponent);
}

Expr apply(Func f, const Expr& operand) {
  if (f == Func::Neg) return -operand;
  if (operand.is_constant()) {
    try {
      return Expr::constant(apply_func(f, operand.value()));
    } catch (const DomainError&) {
    }
  }
  return Expr::unary(f, operand);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view src, const VarSet* declared) : src_(src), declared_(declared) {}

  Expr run() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  std::string_view src_;
  const VarSet* declared_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("syntax error: " + what, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = Expr::binary(BinOp::Add, lhs, parse_product());
      else if (accept('-'))
        lhs = Expr::binary(BinOp::Sub, lhs, parse_product());
      else
        return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = Expr::binary(BinOp::Mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = Expr::binary(BinOp::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  // unary minus binds looser than ^ :  -x^2 == -(x^2)
  Expr parse_unary() {
    if (accept('-')) return Expr::unary(Func::Neg, parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return Expr::binary(BinOp::Pow, base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9')
        digits();
      else
        pos_ = save;
    }
    double value = 0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::constant(value);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      static const std::map<std::string_view, Func> functions{
          {"sin", Func::Sin}, {"cos", Func::Cos}, {"exp", Func::Exp},
          {"ln", Func::Ln},   {"sqrt", Func::Sqrt}, {"abs", Func::Abs}};
      auto it = functions.find(name);
      if (it == functions.end()) throw ParseError("unknown function '" + name + "'", start);
      ++pos_;
      Expr arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return Expr::unary(it->second, arg);
    }
    if (declared_ && !declared_->contains(name))
      throw ParseError("unknown variable '" + name + "'", start);
    return Expr::variable(name);
  }
};

}  // namespace

Expr parse(std::string_view source) { return Parser(source, nullptr).run(); }

Expr parse(std::string_view source, const VarSet& declared) { return Parser(source, &declared).run(); }

void check_scope(const Expr& e, const VarSet& declared, std::string_view what) {
  for (const auto& name : e.variables())
    if (!declared.contains(name))
      throw ValidationError(std::string(what) + " references undeclared variable '" + name + "'");
}

// ---------------------------------------------------------------------------
// Differentiation and substitution

Expr diff(const Expr& e, std::string_view var) {
  if (!e.depends_on(var)) return Expr::constant(0);
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return Expr::constant(0);
    case Expr::Kind::Variable:
      return Expr::constant(1);
    case Expr::Kind::Unary: {
      const Expr& x = e.operand();
      const Expr dx = diff(x, var);
      switch (e.func()) {
        case Func::Neg: return -dx;
        case Func::Sin: return apply(Func::Cos, x) * dx;
        case Func::Cos: return -(apply(Func::Sin, x) * dx);
        case Func::Exp: return e * dx;
        case Func::Ln: return dx / x;
        case Func::Sqrt: return dx / (Expr::constant(2) * e);
        case Func::Abs: return dx * (x / e);
      }
      break;
    }
    case Expr::Kind::Binary: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      switch (e.op()) {
        case BinOp::Add: return diff(a, var) + diff(b, var);
        case BinOp::Sub: return diff(a, var) - diff(b, var);
        case BinOp::Mul: return diff(a, var) * b + a * diff(b, var);
        case BinOp::Div: return (diff(a, var) * b - a * diff(b, var)) / pow(b, Expr::constant(2));
        case BinOp::Pow:
          if (!b.depends_on(var)) return b * pow(a, b - Expr::constant(1)) * diff(a, var);
          if (!a.depends_on(var)) return e * apply(Func::Ln, a) * diff(b, var);
          return e * (diff(b, var) * apply(Func::Ln, a) + b * diff(a, var) / a);
      }
      break;
    }
  }
  return Expr::constant(0);
}

Expr substitute(const Expr& e, std::string_view var, const Expr& replacement) {
  if (!e.depends_on(var)) return e;
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return e;
    case Expr::Kind::Variable:
      return replacement;
    case Expr::Kind::Unary:
      return apply(e.func(), substitute(e.operand(), var, replacement));
    case Expr::Kind::Binary: {
      Expr a = substitute(e.lhs(), var, replacement);
      Expr b = substitute(e.rhs(), var, replacement);
      switch (e.op()) {
        case BinOp::Add: return a + b;
        case BinOp::Sub: return a - b;
        case BinOp::Mul: return a * b;
        case BinOp::Div: return a / b;
        case BinOp::Pow: return pow(a, b);
      }
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Program

Program::Program(const Expr& e, const VarSet& vars) : n_slots_(vars.size()) {
  std::size_t depth = 0;
  emit(e, vars, depth);
}

void Program::emit(const Expr& e, const VarSet& vars, std::size_t& depth) {
  auto push = [&](Instr ins) {
    code_.push_back(ins);
    ++depth;
    max_depth_ = std::max(max_depth_, depth);
  };
  switch (e.kind()) {
    case Expr::Kind::Constant:
      push({Op::Const, 0, e.value()});
      return;
    case Expr::Kind::Variable: {
      auto idx = vars.index_of(e.name());
      if (!idx) throw ValidationError("unbound variable '" + e.name() + "'");
      push({Op::Load, *idx, 0.0});
      return;
    }
    case Expr::Kind::Unary: {
      emit(e.operand(), vars, depth);
      static constexpr std::array<Op, 7> ops{Op::Neg, Op::Sin, Op::Cos, Op::Exp, Op::Ln, Op::Sqrt, Op::Abs};
      code_.push_back({ops[static_cast<std::size_t>(e.func())], 0, 0.0});
      return;
    }
    case Expr::Kind::Binary: {
      emit(e.lhs(), vars, depth);
      emit(e.rhs(), vars, depth);
      static constexpr std::array<Op, 5> ops{Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
      code_.push_back({ops[static_cast<std::size_t>(e.op())], 0, 0.0});
      --depth;
      return;
    }
  }
}

double Program::operator()(std::span<const double> slots) const {
  if (slots.size() < n_slots_) throw ValidationError("too few variable slots for compiled expression");
  std::array<double, 64> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_depth_ > small.size()) {
    large.resize(max_depth_);
    stack = large.data();
  }
  std::size_t top = 0;
  for (const Instr& ins : code_) {
    switch (ins.op) {
      case Op::Const: stack[top++] = ins.value; break;
      case Op::Load: stack[top++] = slots[ins.slot]; break;
      case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::Sin: stack[top - 1] = apply_func(Func::Sin, stack[top - 1]); break;
      case Op::Cos: stack[top - 1] = apply_func(Func::Cos, stack[top - 1]); break;
      case Op::Exp: stack[top - 1] = apply_func(Func::Exp, stack[top - 1]); break;
      case Op::Ln: stack[top - 1] = apply_func(Func::Ln, stack[top - 1]); break;
      case Op::Sqrt: stack[top - 1] = apply_func(Func::Sqrt, stack[top - 1]); break;
      case Op::Abs: stack[top - 1] = std::abs(stack[top - 1]); break;
      case Op::Add: --top; stack[top - 1] = apply_binop(BinOp::Add, stack[top - 1], stack[top]); break;
      case Op::Sub: --top; stack[top - 1] = apply_binop(BinOp::Sub, stack[top - 1], stack[top]); break;
      case Op::Mul: --top; stack[top - 1] = apply_binop(BinOp::Mul, stack[top - 1], stack[top]); break;
      case Op::Div: --top; stack[top - 1] = apply_binop(BinOp::Div, stack[top - 1], stack[top]); break;
      case Op::Pow: --top; stack[top - 1] = apply_binop(BinOp::Pow, stack[top - 1], stack[top]); break;
    }
  }
  return stack[0];
}

}  // namespace fracnoether::expr
