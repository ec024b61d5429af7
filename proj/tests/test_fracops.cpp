#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fracnoether/error.hpp"
#include "fracnoether/fracops.hpp"
#include "fracnoether/special.hpp"
#include "support.hpp"

using namespace fracnoether;
using expr::parse;

namespace {

double max_interior_abs(const std::vector<double>& v) {
  double m = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

GridFunction random_smooth(const Grid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng), w = 1.0 + 3.0 * std::abs(coef(rng));
  std::vector<double> v(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    v[i] = c0 + c1 * t + c2 * std::sin(w * t);
  }
  return GridFunction(grid, v);
}

}  // namespace

TEST_SUITE("fracops") {

TEST_CASE("gamma function") {
  CHECK(fracnoether::gamma(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fracnoether::gamma(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
  CHECK(fracnoether::gamma(2.0 - 0.5) == doctest::Approx(0.8862269255).epsilon(1e-10));
  double worst = 0;
  for (double x = 0.01; x <= 30.0; x += 0.0137) worst = std::max(worst, std::abs(fracnoether::gamma(x) / std::tgamma(x) - 1.0));
  CHECK(worst <= 1e-12);
  CHECK(fracnoether::gamma(30.0) == doctest::Approx(std::tgamma(30.0)).epsilon(1e-12));
  CHECK_THROWS_AS(fracnoether::gamma(0.0), ValidationError);
  CHECK_THROWS_AS(fracnoether::gamma(-1.5), ValidationError);
}

TEST_CASE("grid and order validation") {
  CHECK_THROWS_AS(Grid(1.0, 0.0, 10), ValidationError);
  CHECK_THROWS_AS(Grid(0.0, 1.0, 2), ValidationError);
  CHECK_THROWS_AS(FracOrder(0.0), ValidationError);
  CHECK_THROWS_AS(FracOrder(1.2), ValidationError);
  const Grid g(0.0, 2.0, 5);
  CHECK(g.h() == 0.5);
  CHECK(g.node(4) == 2.0);
  std::vector<double> bad(5, 1.0);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(apply(OperatorKind::LeftCaputo, FracOrder(0.5), GridFunction(g, bad)), ValidationError);
}

TEST_CASE("documented operator values") {
  const Grid g(0.0, 1.0, 65);
  const auto c = GridFunction::constant(g, 3.7);
  for (double v : apply(OperatorKind::LeftCaputo, FracOrder(0.5), c).values()) CHECK(v == 0.0);

  // even about the midpoint: left and right Caputo parts cancel
  const auto even = GridFunction::sample(g, parse("(t - 0.5)^2"));
  for (double alpha : {0.3, 0.5, 0.8, 1.0})
    CHECK(std::abs(apply(OperatorKind::RieszCaputo, FracOrder(alpha), even)[32]) <= 1e-13);

  // L1 is exact on linear data: t^(1-alpha)/Gamma(2-alpha) at t = 1
  const auto lin = GridFunction::sample(g, parse("t"));
  CHECK(apply(OperatorKind::LeftCaputo, FracOrder(0.5), lin)[64] ==
        doctest::Approx(2.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));

  const auto one = GridFunction::constant(g, 1.0);
  CHECK(apply(OperatorKind::RieszIntegral, FracOrder(1.0), one)[32] == doctest::Approx(0.5).epsilon(1e-14));

  const auto sq = GridFunction::sample(g, parse("t^2"));
  CHECK(apply(OperatorKind::RieszCaputo, FracOrder(1.0), sq)[32] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classical order gives signed first derivatives") {
  const Grid g(0.0, 1.0, 33);
  const auto f = GridFunction::sample(g, parse("t^2"));
  const FracOrder one(1.0);
  for (int i : {0, 7, 16, 32}) {
    const double d = 2.0 * g.node(i);
    CHECK(apply(OperatorKind::LeftCaputo, one, f)[i] == doctest::Approx(d).epsilon(1e-12));
    CHECK(apply(OperatorKind::LeftRLDerivative, one, f)[i] == doctest::Approx(d).epsilon(1e-12));
    CHECK(apply(OperatorKind::RightCaputo, one, f)[i] == doctest::Approx(-d).epsilon(1e-12));
    CHECK(apply(OperatorKind::RightRLDerivative, one, f)[i] == doctest::Approx(-d).epsilon(1e-12));
    CHECK(apply(OperatorKind::RieszDerivative, one, f)[i] == doctest::Approx(d).epsilon(1e-12));
  }
  // running trapezoid integral of t^2
  const auto left = apply(OperatorKind::LeftRLIntegral, one, f);
  const auto right = apply(OperatorKind::RightRLIntegral, one, f);
  CHECK(left[32] == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
  CHECK(right[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
  CHECK(left[0] == 0.0);
  CHECK(right[32] == 0.0);
}

TEST_CASE("oracle reference values") {
  const auto one = parse("1");
  for (double t : {0.0, 0.3, 1.0})
    CHECK(apply_oracle(OperatorKind::LeftRLIntegral, FracOrder(1.0), one, 0.0, 1.0, t) ==
          doctest::Approx(t).epsilon(1e-9));
  CHECK(apply_oracle(OperatorKind::RightCaputo, FracOrder(0.5), parse("t"), 0.0, 1.0, 0.0) ==
        doctest::Approx(-1.0 / std::tgamma(1.5)).epsilon(1e-7));
  CHECK(std::abs(apply_oracle(OperatorKind::RieszDerivative, FracOrder(0.5), one, 0.0, 1.0, 0.5)) <= 1e-12);
  // closed form of the left Caputo derivative of t^2
  const double t = 0.7;
  CHECK(apply_oracle(OperatorKind::LeftCaputo, FracOrder(0.5), parse("t^2"), 0.0, 1.0, t) ==
        doctest::Approx(2.0 * std::pow(t, 1.5) / std::tgamma(2.5)).epsilon(1e-7));
  CHECK_THROWS_AS(apply_oracle(OperatorKind::LeftRLDerivative, FracOrder(0.5), one, 0.0, 1.0, 0.0), NumericError);
  OracleOptions tight;
  tight.tol = 1e-30;
  tight.max_levels = 6;
  CHECK_THROWS_AS(apply_oracle(OperatorKind::LeftCaputo, FracOrder(0.5), parse("sin(5*t)"), 0.0, 1.0, 0.9, tight),
                  NumericError);
}

TEST_CASE("half-sum identities hold node-wise") {
  std::mt19937_64 rng(11);
  const Grid g(0.0, 1.0, 129);
  for (double alpha : {0.25, 0.6, 1.0}) {
    const FracOrder a(alpha);
    const auto f = random_smooth(g, rng);
    const auto li = apply(OperatorKind::LeftRLIntegral, a, f), ri = apply(OperatorKind::RightRLIntegral, a, f);
    const auto lr = apply(OperatorKind::LeftRLDerivative, a, f), rr = apply(OperatorKind::RightRLDerivative, a, f);
    const auto lc = apply(OperatorKind::LeftCaputo, a, f), rc = apply(OperatorKind::RightCaputo, a, f);
    const auto ri_ = apply(OperatorKind::RieszIntegral, a, f);
    const auto rd = apply(OperatorKind::RieszDerivative, a, f);
    const auto rcd = apply(OperatorKind::RieszCaputo, a, f);
    for (int i = 0; i < g.size(); ++i) {
      CHECK(std::abs(ri_[i] - 0.5 * (li[i] + ri[i])) <= 1e-13);
      CHECK(std::abs(rd[i] - 0.5 * (lr[i] - rr[i])) <= 1e-13);
      CHECK(std::abs(rcd[i] - 0.5 * (lc[i] - rc[i])) <= 1e-13);
    }
  }
}

TEST_CASE("linearity and mirror symmetry") {
  std::mt19937_64 rng(5);
  const Grid g(-1.0, 2.0, 97);
  const FracOrder a(0.7);
  const auto f = random_smooth(g, rng), h = random_smooth(g, rng);
  const double c1 = 1.7, c2 = -0.4;
  const auto combo = c1 * f + c2 * h;
  for (OperatorKind kind : kAllOperatorKinds) {
    const auto lhs = apply(kind, a, combo);
    const auto rf = apply(kind, a, f), rh = apply(kind, a, h);
    for (int i = 0; i < g.size(); ++i)
      CHECK(std::abs(lhs[i] - (c1 * rf[i] + c2 * rh[i])) <= 1e-12 * std::max(1.0, std::abs(lhs[i])));
  }
  // left Caputo of f equals right Caputo of the reflection t -> a + b - t at the reflected node
  std::vector<double> reflected(f.values().rbegin(), f.values().rend());
  const auto lc = apply(OperatorKind::LeftCaputo, a, f);
  const auto rc = apply(OperatorKind::RightCaputo, a, GridFunction(g, reflected));
  for (int i = 0; i < g.size(); ++i) CHECK(std::abs(lc[i] - rc[g.size() - 1 - i]) <= 1e-12);
}

TEST_CASE("RL derivative endpoints are flagged") {
  const Grid g(0.0, 1.0, 17);
  const auto f = GridFunction::sample(g, parse("1 + t"));
  const auto l = apply(OperatorKind::LeftRLDerivative, FracOrder(0.5), f);
  CHECK(l.flagged(0));
  CHECK_FALSE(l.flagged(1));
  CHECK(l[0] == l[1]);
  const auto r = apply(OperatorKind::RieszDerivative, FracOrder(0.5), f);
  CHECK(r.flagged(0));
  CHECK(r.flagged(16));
  CHECK_FALSE(apply(OperatorKind::RieszDerivative, FracOrder(1.0), f).any_flagged());
  CHECK_FALSE(apply(OperatorKind::RieszCaputo, FracOrder(0.5), f).any_flagged());
}

TEST_CASE("operator matrices reproduce apply") {
  std::mt19937_64 rng(3);
  const Grid g(0.0, 1.5, 41);
  const auto f = random_smooth(g, rng);
  const Eigen::Map<const Eigen::VectorXd> fv(f.values().data(), g.size());
  for (double alpha : {0.35, 1.0}) {
    for (OperatorKind kind : kAllOperatorKinds) {
      const Eigen::VectorXd mv = operator_matrix(kind, FracOrder(alpha), g) * fv;
      const auto direct = apply(kind, FracOrder(alpha), f);
      for (int i = 0; i < g.size(); ++i) CHECK(mv[i] == doctest::Approx(direct[i]).epsilon(1e-11));
    }
  }
}

TEST_CASE("L1 convergence for t^2") {
  const FracOrder a(0.5);
  std::vector<double> hs, errs;
  for (int n : {65, 129, 257, 513, 1025}) {
    const Grid g(0.0, 1.0, n);
    const auto d = apply(OperatorKind::LeftCaputo, a, GridFunction::sample(g, parse("t^2")));
    std::vector<double> err(n);
    for (int i = 0; i < n; ++i) err[i] = d[i] - 2.0 * std::pow(g.node(i), 1.5) / std::tgamma(2.5);
    hs.push_back(g.h());
    errs.push_back(max_interior_abs(err));
  }
  CHECK(testing::empirical_order(hs, errs) >= 1.3);
}

TEST_CASE("classical reduction is second order") {
  std::vector<double> hs, errs;
  for (int n : {33, 65, 129, 257}) {
    const Grid g(0.0, 1.0, n);
    const auto d = apply(OperatorKind::RieszCaputo, FracOrder(1.0), GridFunction::sample(g, parse("sin(3*t)")));
    std::vector<double> err(n);
    for (int i = 0; i < n; ++i) err[i] = d[i] - 3.0 * std::cos(3.0 * g.node(i));
    hs.push_back(g.h());
    errs.push_back(max_interior_abs(err));
  }
  CHECK(testing::empirical_order(hs, errs) >= 1.8);
}

TEST_CASE("dt_gamma") {
  const Grid g(0.0, 1.0, 65);
  const auto t = GridFunction::sample(g, parse("t"));
  const auto prod = dt_gamma(t, t, FracOrder(1.0));
  for (int i = 1; i < 64; ++i) CHECK(prod[i] == doctest::Approx(2.0 * g.node(i)).epsilon(1e-12));

  const auto zero = GridFunction::constant(g, 0.0);
  for (double v : dt_gamma(GridFunction::sample(g, parse("exp(t)")), zero, FracOrder(0.4)).values()) CHECK(v == 0.0);

  const Grid fine(0.0, 1.0, 257);
  const auto f = GridFunction::sample(fine, parse("t")), s = GridFunction::sample(fine, parse("t^2"));
  const auto fg = dt_gamma(f, s, FracOrder(0.5)), gf = dt_gamma(s, f, FracOrder(0.5));
  double diff = 0;
  for (int i = 1; i + 1 < fine.size(); ++i) diff = std::max(diff, std::abs(fg[i] - gf[i]));
  CHECK(diff > 10.0 * fine.h());

  // gamma = 1 matches the discrete derivative of the product
  const auto p = GridFunction::sample(fine, parse("sin(2*t)")), q = GridFunction::sample(fine, parse("exp(t)"));
  const auto law = dt_gamma(p, q, FracOrder(1.0));
  const auto dprod = finite_difference((p * q).values(), fine.h());
  for (int i = 1; i + 1 < fine.size(); ++i) CHECK(std::abs(law[i] - dprod[i]) <= 10.0 * fine.h());

  CHECK_THROWS_AS(dt_gamma(t, f, FracOrder(0.5)), ValidationError);
}

TEST_CASE("kind names") {
  for (OperatorKind k : kAllOperatorKinds) CHECK(operator_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(operator_kind_from_string("sideways"), ValidationError);
}

}  // TEST_SUITE
