#include <cmath>
#include <string>

#include "doctest.h"
#include "fracnoether/error.hpp"
#include "fracnoether/expr.hpp"
#include "support.hpp"

using namespace fracnoether;
using namespace fracnoether::expr;

TEST_SUITE("exprdsl") {

TEST_CASE("grammar builds the expected trees") {
  CHECK(parse("v0^2/2") ==
        Expr::binary(BinOp::Div, Expr::binary(BinOp::Pow, Expr::variable("v0"), Expr::constant(2)),
                     Expr::constant(2)));
  CHECK(parse("q0^2 + u0^2") ==
        Expr::binary(BinOp::Add, Expr::binary(BinOp::Pow, Expr::variable("q0"), Expr::constant(2)),
                     Expr::binary(BinOp::Pow, Expr::variable("u0"), Expr::constant(2))));
  // unary minus binds looser than ^, pow is right-associative
  CHECK(parse("-x^2") == Expr::unary(Func::Neg, parse("x^2")));
  CHECK(parse("2^3^2") == Expr::binary(BinOp::Pow, Expr::constant(2), parse("3^2")));
  CHECK(parse("a - b - c") == Expr::binary(BinOp::Sub, parse("a - b"), Expr::variable("c")));
  CHECK(parse("  sin( t )*2 ") == parse("sin(t)*2"));
  CHECK(parse("x^-2") == Expr::binary(BinOp::Pow, Expr::variable("x"), Expr::unary(Func::Neg, Expr::constant(2))));
  CHECK(parse("1.5e-3").value() == doctest::Approx(1.5e-3));
}

TEST_CASE("syntax errors report byte offsets") {
  try {
    parse("sin(t");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
  CHECK_THROWS_AS(parse("2 +"), ParseError);
  CHECK_THROWS_AS(parse("(q0"), ParseError);
  CHECK_THROWS_AS(parse("q0 q1"), ParseError);
  try {
    parse("t + foo(t)");
    FAIL("expected unknown function");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  const auto vars = VarSet::variational(1);
  CHECK_NOTHROW(parse("t*q0 + v0", vars));
  try {
    parse("q0 + q1", vars);
    FAIL("expected unknown variable");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("evaluation") {
  CHECK(eval(parse("v0^2/2"), {{"v0", 2.0}}) == 2.0);
  CHECK(eval(parse("q0*p0"), {{"q0", 3.0}, {"p0", -1.0}}) == -3.0);
  CHECK_THROWS_AS(eval(parse("1/t"), {{"t", 0.0}}), DomainError);
  CHECK_THROWS_AS(eval(parse("ln(t)"), {{"t", -1.0}}), DomainError);
  CHECK_THROWS_AS(eval(parse("t^0.5"), {{"t", -4.0}}), DomainError);
  CHECK(eval(parse("t^3"), {{"t", -2.0}}) == -8.0);
  CHECK_THROWS_AS(eval(parse("exp(t)"), {{"t", 1000.0}}), DomainError);
  CHECK_THROWS_AS(eval(parse("t + q0"), {{"t", 1.0}}), ValidationError);
}

TEST_CASE("compiled programs agree with tree evaluation") {
  testing::ExprGenerator gen(7, {"t", "q0", "v0"});
  const auto vars = VarSet::variational(1);
  for (int k = 0; k < 100; ++k) {
    const Expr e = gen.any(5);
    const Program prog(e, vars);
    const double slots[] = {gen.uniform(0.1, 2), gen.uniform(-2, 2), gen.uniform(-2, 2)};
    const Env env{{"t", slots[0]}, {"q0", slots[1]}, {"v0", slots[2]}};
    double tree = 0;
    bool tree_failed = false;
    try {
      tree = eval(e, env);
    } catch (const DomainError&) {
      tree_failed = true;
    }
    if (tree_failed) {
      CHECK_THROWS_AS(prog(slots), DomainError);
    } else {
      CHECK(prog(slots) == tree);
    }
  }
}

TEST_CASE("symbolic derivatives") {
  const Expr d = diff(parse("v0^2/2"), "v0");
  for (double v : {-1.5, 0.0, 2.0, 3.25}) CHECK(eval(d, {{"v0", v}}) == doctest::Approx(v));
  const Expr dq = diff(parse("q0^2+u0^2"), "q0");
  CHECK(dq.str() == "2*q0");
  CHECK(diff(parse("sin(t)*q0"), "v0").is_constant(0));
  CHECK(eval(diff(parse("ln(t)"), "t"), {{"t", 4.0}}) == doctest::Approx(0.25));
  CHECK(eval(diff(parse("sqrt(t)"), "t"), {{"t", 4.0}}) == doctest::Approx(0.25));
  CHECK(eval(diff(parse("t^t"), "t"), {{"t", 2.0}}) == doctest::Approx(4.0 * (std::log(2.0) + 1.0)));
  CHECK(eval(diff(parse("2^t"), "t"), {{"t", 3.0}}) == doctest::Approx(8.0 * std::log(2.0)));
}

TEST_CASE("derivatives of random polynomials match finite differences") {
  testing::ExprGenerator gen(2024, {"t", "q0", "v0"});
  for (int k = 0; k < 20; ++k) {
    const Expr e = gen.polynomial(4, 3);
    const Expr de = diff(e, "q0");
    const double t = gen.uniform(-1, 1), q = gen.uniform(-1, 1), v = gen.uniform(-1, 1);
    auto f = [&](double x) { return eval(e, {{"t", t}, {"q0", x}, {"v0", v}}); };
    const double fd = testing::central_difference(f, q, 1e-3);
    const double exact = eval(de, {{"t", t}, {"q0", q}, {"v0", v}});
    CHECK(std::abs(exact - fd) <= 1e-7 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("print/parse round trip and derivative properties") {
  testing::ExprGenerator gen(99, {"t", "q0", "v0"});
  for (int k = 0; k < 50; ++k) {
    const Expr e = gen.any(6);
    INFO(e.str());
    CHECK(parse(e.str()) == e);
  }
  // linearity of diff and vanishing derivative for absent variables
  for (int k = 0; k < 20; ++k) {
    const Expr e1 = gen.polynomial(3, 3), e2 = gen.polynomial(3, 3);
    const double a = gen.uniform(-2, 2), b = gen.uniform(-2, 2);
    const Expr combo = Expr::constant(a) * e1 + Expr::constant(b) * e2;
    const Env env{{"t", gen.uniform(-1, 1)}, {"q0", gen.uniform(-1, 1)}, {"v0", gen.uniform(-1, 1)}};
    const double lhs = eval(diff(combo, "v0"), env);
    const double rhs = a * eval(diff(e1, "v0"), env) + b * eval(diff(e2, "v0"), env);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(diff(e1, "p0").is_constant(0));
  }
}

TEST_CASE("substitution and scope checks") {
  const Expr h = parse("u0^2/2 + p0*u0");
  const Expr eliminated = substitute(h, "u0", -Expr::variable("p0"));
  for (double p : {-2.0, 0.5, 3.0}) CHECK(eval(eliminated, {{"p0", p}}) == doctest::Approx(-0.5 * p * p));
  CHECK_THROWS_AS(check_scope(parse("q0 + w"), VarSet::variational(1), "lagrangian"), ValidationError);
  CHECK(parse("q0*u1").variables() == std::set<std::string>{"q0", "u1"});
}

}  // TEST_SUITE
