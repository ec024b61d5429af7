#include <cmath>
#include <vector>

#include "doctest.h"
#include "fracnoether/error.hpp"
#include "fracnoether/noether.hpp"
#include "fracnoether/variational.hpp"

using namespace fracnoether;
using expr::parse;

namespace {

VariationalProblem problem(const char* lagrangian, int n, double alpha) {
  return VariationalProblem(Grid(0, 1, n), FracOrder(alpha), 1, parse(lagrangian), {0.0}, std::vector<double>{1.0});
}

SymmetryGenerators gens(const char* tau, const char* xi) { return {parse(tau), {parse(xi)}}; }

Trajectory sampled(const Grid& g, const char* src) { return {GridFunction::sample(g, parse(src))}; }

}  // namespace

TEST_SUITE("noether") {

TEST_CASE("interior norm") {
  CHECK(boundary_layer_width(33) == 2);
  CHECK(boundary_layer_width(129) == 7);
  CHECK(boundary_layer_width(257) == 13);
  const Grid g(0, 1, 41);
  std::vector<double> v(41, 1.0);
  v[0] = v[40] = 1e6;
  std::vector<bool> flags(41, false);
  flags[10] = true;
  v[10] = 1e6;
  const GridFunction r(g, v, flags);
  // nodes 3..37 minus the flagged one
  CHECK(interior_norm(r) == doctest::Approx(std::sqrt(g.h() * 34)).epsilon(1e-14));
  CHECK(interior_max(r) == 1.0);
}

TEST_CASE("invariance residual") {
  const Grid g(0, 1, 65);
  for (double alpha : {0.5, 1.0}) {
    const auto r = invariance_residual(problem("v0^2/2", 65, alpha), gens("0", "1"), sampled(g, "sin(3*t)"));
    for (double x : r.values()) CHECK(x == 0.0);
  }
  {
    const auto q = sampled(g, "t^2 - t/3");
    const auto r = invariance_residual(problem("q0^2/2 + v0^2/2", 65, 0.6), gens("0", "1"), q);
    for (int i = 0; i < 65; ++i) CHECK(r[i] == doctest::Approx(q[0][i]).epsilon(1e-14));
  }
  {
    const auto r = invariance_residual(problem("v0^2/2", 65, 1.0), gens("0", "t"), sampled(g, "t"));
    for (double x : r.values()) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(invariance_residual(problem("v0^2/2", 65, 1.0), gens("0", "v0"), sampled(g, "t")), ValidationError);
  CHECK_THROWS_AS(invariance_residual(problem("v0^2/2", 65, 1.0), {parse("0"), {}}, sampled(g, "t")), ValidationError);
}

TEST_CASE("momentum law") {
  const Grid g(0, 1, 65);
  {
    const auto rep = momentum_law_residual(problem("v0^2/2", 65, 1.0), gens("0", "1"), sampled(g, "t"));
    for (double x : rep.residual.values()) CHECK(std::abs(x) <= 1e-12);
  }
  for (double alpha : {0.4, 1.0}) {
    const auto rep = momentum_law_residual(problem("sin(q0)*v0^2 + t", 65, alpha), gens("1", "0"), sampled(g, "t^2"));
    for (double x : rep.residual.values()) CHECK(x == 0.0);
    CHECK(rep.interior_norm == 0.0);
  }
}

TEST_CASE("fractional momentum conservation under refinement") {
  std::vector<double> norms;
  for (int n : {129, 257}) {
    const auto p = problem("v0^2/2", n, 0.75);
    norms.push_back(momentum_law_residual(p, gens("0", "1"), solve_ritz(p).q).interior_norm);
  }
  CHECK(norms[0] >= 2 * norms[1]);
}

TEST_CASE("Noether residual") {
  const Grid g(0, 1, 65);
  {
    const auto rep = noether_residual(problem("v0^2/2", 65, 1.0), gens("1", "0"), sampled(g, "t"));
    for (double x : rep.residual.values()) CHECK(std::abs(x) <= 1e-12);
  }
  for (double alpha : {0.3, 0.75, 1.0}) {
    const auto p = problem("v0^2/2 + q0*v0 + cos(t)*q0^2", 65, alpha);
    const auto q = sampled(g, "exp(t) - 1");
    const auto a = noether_residual(p, gens("0", "q0 + t"), q);
    const auto b = momentum_law_residual(p, gens("0", "q0 + t"), q);
    for (int i = 0; i < 65; ++i) CHECK(std::abs(a.residual[i] - b.residual[i]) <= 1e-13);
  }
}

TEST_CASE("classical limit of the energy law") {
  // straight-line extremal, interior max bounded by C h
  for (int n : {33, 65, 129}) {
    const Grid g(0, 1, n);
    const auto rep = noether_residual(problem("v0^2/2", n, 1.0), gens("1", "0"), sampled(g, "2*t - 1"));
    CHECK(rep.interior_max <= g.h());
  }
}

TEST_CASE("example1 time-shift residual halves under refinement") {
  std::vector<double> norms;
  for (int n : {129, 257}) {
    const auto p = problem("v0^2/2", n, 0.75);
    norms.push_back(noether_residual(p, gens("1", "0"), solve_ritz(p).q).interior_norm);
  }
  CHECK(norms[0] >= 2 * norms[1]);
}

TEST_CASE("invariance implies conservation") {
  double previous = 1e300;
  for (int n : {65, 129, 257}) {
    const auto p = problem("v0^2/2", n, 0.6);
    const auto q = solve_ritz(p).q;
    CHECK(interior_norm(invariance_residual(p, gens("0", "1"), q)) == 0.0);
    const double r = momentum_law_residual(p, gens("0", "1"), q).interior_norm;
    CHECK(r <= 1.2 * previous);
    previous = r;
  }
}

TEST_CASE("generator scaling") {
  const auto p = problem("v0^2/2 + q0^2*v0", 65, 0.7);
  const auto q = sampled(p.grid(), "t^2 + t/2");
  const auto base = momentum_law_residual(p, gens("0", "q0 + t"), q).residual;
  const auto twice = momentum_law_residual(p, gens("0", "2*(q0 + t)"), q).residual;
  const auto thrice = momentum_law_residual(p, gens("0", "3*(q0 + t)"), q).residual;
  for (int i = 0; i < 65; ++i) {
    CHECK(twice[i] == 2 * base[i]);
    CHECK(thrice[i] == doctest::Approx(3 * base[i]).epsilon(1e-12));
  }
}

TEST_CASE("warning when the trajectory is not an extremal") {
  const auto p = problem("v0^2/2", 65, 0.75);
  const auto q = sampled(p.grid(), "t^3");
  CHECK(momentum_law_residual(p, gens("0", "1"), q).warnings.empty());
  CHECK(momentum_law_residual(p, gens("0", "1"), q, 1e-6).warnings.size() == 1);
  CHECK(noether_residual(p, gens("1", "0"), q, 1e-6).warnings.size() == 1);
}

TEST_CASE("refinement study") {
  const auto rep = refinement_study({33, 65, 129}, [](int n) {
    const auto p = problem("v0^2/2", n, 0.75);
    return momentum_law_residual(p, gens("0", "1"), solve_ritz(p).q);
  });
  REQUIRE(rep.grid_refinement_trace.size() == 3);
  CHECK(rep.grid_refinement_trace[2].first == 129);
  CHECK(rep.residual.size() == 129);
  CHECK(rep.grid_refinement_trace[2].second == rep.interior_norm);
  CHECK(rep.grid_refinement_trace[0].second > rep.grid_refinement_trace[2].second);
  CHECK_THROWS_AS(refinement_study({}, [](int) -> ConservationReport { throw Error("unused"); }), ValidationError);
}

TEST_CASE("numerical invariance check") {
  const Grid g(0, 1, 129);
  const std::vector<double> eps{-1e-3, -5e-4, 5e-4, 1e-3};
  SUBCASE("translation of a q-free lagrangian") {
    const auto rep = check_invariance_numeric(problem("v0^2/2", 129, 0.6), gens("0", "1"), sampled(g, "t^2"), eps);
    CHECK(rep.mode == InvarianceReport::Mode::Shift);
    CHECK(std::abs(rep.slope) <= 1e-8);
    CHECK(rep.invariant);
    CHECK(rep.slope_matches);
  }
  SUBCASE("q v is not translation invariant") {
    const auto rep = check_invariance_numeric(problem("q0*v0", 129, 0.6), gens("0", "1"), sampled(g, "t"), eps);
    CHECK_FALSE(rep.invariant);
    CHECK(rep.slope_matches);
    CHECK(rep.slope_mismatch <= 1e-4);
    // slope = int RC-D^alpha q dt
    const auto v = apply(OperatorKind::RieszCaputo, FracOrder(0.6), GridFunction::sample(g, parse("t")));
    CHECK(rep.slope == doctest::Approx(trapezoid(v)).epsilon(1e-4));
  }
  SUBCASE("non-quadratic lagrangian still matches the residual integral") {
    const auto rep =
        check_invariance_numeric(problem("exp(q0)*v0^2 + sin(q0)", 129, 0.4), gens("0", "1 + q0"), sampled(g, "t"), eps);
    CHECK(rep.slope_matches);
    CHECK_FALSE(rep.invariant);
  }
  SUBCASE("time translation of an autonomous lagrangian") {
    const auto rep =
        check_invariance_numeric(problem("v0^2/2 + q0^2", 129, 0.75), gens("1", "0"), sampled(g, "sin(t)"), eps);
    CHECK(rep.mode == InvarianceReport::Mode::AffineTime);
    for (double d : rep.delta) CHECK(d <= 1e-6);
    CHECK(rep.invariant);
  }
  SUBCASE("time translation of a time-dependent lagrangian") {
    const auto rep =
        check_invariance_numeric(problem("t*v0^2/2", 129, 0.75), gens("1", "0"), sampled(g, "sin(t)"), eps);
    CHECK_FALSE(rep.invariant);
  }
  SUBCASE("unsupported time transformations") {
    const auto p = problem("v0^2/2", 129, 0.75);
    const auto q = sampled(g, "t");
    CHECK_THROWS_AS(check_invariance_numeric(p, gens("q0", "0"), q, eps), UnsupportedError);
    CHECK_THROWS_AS(check_invariance_numeric(p, gens("t^2", "0"), q, eps), UnsupportedError);
    CHECK_THROWS_AS(check_invariance_numeric(p, gens("0", "1"), q, {}), ValidationError);
    CHECK_THROWS_AS(check_invariance_numeric(p, gens("0", "1"), q, {0.0}), ValidationError);
  }
}

}  // TEST_SUITE
