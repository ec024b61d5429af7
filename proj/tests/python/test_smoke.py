import math

import numpy as np
import pytest

import fracnoether as fn


def test_expressions():
    e = fn.parse("v0^2/2")
    assert fn.eval(e, {"v0": 2.0}) == 2.0
    assert fn.eval(fn.diff("q0^2 + u0^2", "q0"), {"q0": 1.5, "u0": 0.0}) == 3.0
    assert fn.parse(str(e)) == e
    with pytest.raises(fn.ParseError):
        fn.parse("sin(t")
    with pytest.raises(fn.DomainError):
        fn.eval("1/t", {"t": 0.0})
    assert issubclass(fn.ParseError, fn.ValidationError)
    assert issubclass(fn.DomainError, fn.NumericError)


def test_operators():
    g = fn.Grid(0.0, 1.0, 257)
    f = fn.GridFunction.sample(g, "t")
    d = fn.apply("left-caputo", 0.5, f)
    assert abs(d.values[-1] - 1.0 / math.gamma(1.5)) <= 5e-3
    rl = fn.apply(fn.OperatorKind.left_rl_derivative, 0.5, f)
    assert rl.flags[0] and not rl.flags[1]
    m = fn.operator_matrix("riesz-caputo", 0.5, g)
    assert m.shape == (257, 257)
    assert np.allclose(m @ f.values, fn.apply("riesz-caputo", 0.5, f).values, rtol=1e-11, atol=1e-12)
    ref = fn.apply_oracle("left-caputo", 0.5, "t^2", 0.0, 1.0, 0.7)
    assert ref == pytest.approx(2 * 0.7**1.5 / math.gamma(2.5), rel=1e-7)
    with pytest.raises(fn.ValidationError):
        fn.apply("sideways", 0.5, f)


def test_variational_and_noether():
    g = fn.Grid(0.0, 1.0, 65)
    p = fn.VariationalProblem(g, 0.75, 1, "v0^2/2", [0.0], [1.0])
    ex = fn.solve_ritz(p)
    assert ex.diagnostics.converged
    q = ex.q
    assert q[0][0] == 0.0 and q[0][64] == 1.0
    guess = fn.linear_guess(p)
    assert fn.interior_norm(fn.el_residual(p, q)[0]) < fn.interior_norm(fn.el_residual(p, guess)[0])
    rep = fn.momentum_law_residual(p, fn.SymmetryGenerators("0", ["1"]), q)
    assert rep.interior_norm < 0.05
    inv = fn.check_invariance_numeric(p, fn.SymmetryGenerators("0", ["1"]), q, [-1e-3, 1e-3])
    assert inv.invariant and inv.mode == fn.InvarianceReport.Mode.shift


def test_optimal_control():
    g = fn.Grid(0.0, 1.0, 129)
    p = fn.ControlProblem(g, 0.6, 1, 1, "(q0^2 + u0^2)/2", ["-q0 + u0"], [1.0])
    assert p.autonomous() and fn.is_linear_quadratic(p)
    trip = fn.solve_lq(p)
    r = fn.pontryagin_residual(p, trip)
    for part in (r.state, r.costate, r.stationarity):
        assert fn.interior_max(part[0]) <= 1e-8
    assert fn.augmented_functional(p, trip) == pytest.approx(fn.cost(p, trip), rel=1e-9)
    rep = fn.hamiltonian_noether_residual(p, fn.ControlGenerators("1", ["0"]), trip)
    assert len(rep.residual) == 129 and rep.warnings == []
    with pytest.raises(fn.ValidationError):
        fn.solve_lq(fn.ControlProblem(g, 0.6, 1, 1, "q0^4 + u0^2", ["u0"], [1.0]))
