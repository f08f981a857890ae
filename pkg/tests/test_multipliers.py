import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from lmbound.multipliers import (
    BoundConstraint,
    InfeasibleMassError,
    SecantFailure,
    corrector_pointwise,
    cutoff_corrector,
    mass_corrector,
    mass_residual,
    secant_solve,
)
from lmbound.oracles import bisection_oracle, projection_oracle
from lmbound.spectral import Field, GridSpec

PM1 = BoundConstraint(-1.0, 1.0)
UNIT = BoundConstraint(0.0, 1.0)


def two_node_grid():
    # two nodes of weight 1 each
    return GridSpec.fourier1d(2, (0.0, 2.0))


def f1(grid, vals):
    return Field(grid, np.asarray(vals, dtype=float))


@pytest.fixture
def g4():
    return GridSpec.fourier1d(4)


# ------------------------------------------------------------------ bounds


def test_bound_constraint_rejects_empty_interval():
    with pytest.raises(ValueError):
        BoundConstraint(1.0, 1.0)
    with pytest.raises(ValueError):
        BoundConstraint(1.0, 0.0)


def test_g_and_dg():
    assert PM1.g(0.0) == 1.0
    assert PM1.dg(1.0) == -2.0 and PM1.dg(-1.0) == 2.0


# ------------------------------------------------------ pointwise corrector


@pytest.mark.parametrize(
    "v,u,lam",
    [(0.5, 0.5, 0.0), (1.2, 1.0, 10.0), (-1.5, -1.0, 25.0)],
)
def test_pointwise_worked_examples(g4, v, u, lam):
    out = corrector_pointwise(f1(g4, [v] * 4), Field.constant(g4, 0.0), PM1, 0.01)
    assert np.all(out.u.values == u)
    np.testing.assert_allclose(out.lam.values, lam, rtol=1e-13)
    assert projection_oracle(v, -1.0, 1.0) == pytest.approx(u, abs=4e-6)


def test_pointwise_rejects_nonpositive_step(g4):
    with pytest.raises(ValueError):
        corrector_pointwise(Field.constant(g4, 0), Field.constant(g4, 0), PM1, 0.0)


bounds_st = st.tuples(st.floats(-10, 10), st.floats(1e-3, 20)).map(lambda t: BoundConstraint(t[0], t[0] + t[1]))


@settings(max_examples=200, deadline=None)
@given(
    bc=bounds_st,
    ut=st.lists(st.floats(-50, 50), min_size=4, max_size=4),
    eta=st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    s=st.floats(1e-7, 1.0),
)
def test_pointwise_kkt_properties(bc, ut, eta, s):
    g = GridSpec.fourier1d(4)
    out = corrector_pointwise(f1(g, ut), f1(g, eta), bc, s)
    u, lam = out.u.values, out.lam.values
    v = np.asarray(ut) + np.asarray(eta)
    assert np.all(u >= bc.a) and np.all(u <= bc.b)
    assert np.all(lam >= 0)
    assert np.all(lam * bc.g(u) == 0)
    interior = (u > bc.a) & (u < bc.b)
    assert np.all(lam[interior] == 0)
    resid = (u - v) / s - lam * bc.dg(u)
    scale = np.maximum(1.0, (np.abs(u) + np.abs(v)) / s)
    assert np.all(np.abs(resid) <= 1e-12 * scale)


def test_cutoff_examples(g4):
    inside = f1(g4, [0.1, 0.2, 0.3, 0.9])
    out = cutoff_corrector(inside, UNIT)
    np.testing.assert_array_equal(out.u.values, inside.values)
    assert np.all(out.lam.values == 0)
    out = cutoff_corrector(f1(g4, [2.0, 0.5, -1.0, 1.0]), UNIT)
    np.testing.assert_array_equal(out.u.values, [1.0, 0.5, 0.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(1e-6, 1.0))
def test_cutoff_equals_pointwise_with_zero_eta(vals, s):
    g = GridSpec.fourier1d(4)
    ut = f1(g, vals)
    a = cutoff_corrector(ut, PM1, s)
    b = corrector_pointwise(ut, Field.constant(g, 0.0), PM1, s)
    np.testing.assert_array_equal(a.u.values, b.u.values)
    np.testing.assert_allclose(a.lam.values, b.lam.values, rtol=1e-14, atol=0)


# ----------------------------------------------------------------- residual


def test_mass_residual_limits():
    g = two_node_grid()
    ut = f1(g, [0.5, 0.5])
    assert mass_residual(ut, 1e9, UNIT, g, 1.2) == pytest.approx(2.0 - 1.2)
    assert mass_residual(ut, -1e9, UNIT, g, 1.2) == pytest.approx(0.0 - 1.2)
    assert mass_residual(ut, 0.1, UNIT, g, 1.2) == pytest.approx(0.0, abs=1e-15)


# ------------------------------------------------------------------- secant


def test_secant_linear():
    x, it = secant_solve(lambda x: x - 3.0, 0.0, 0.01, 1e-14)
    assert x == pytest.approx(3.0, abs=1e-14) and it <= 2


def test_secant_cube_root():
    x, _ = secant_solve(lambda x: x**3 - 2.0, 1.0, 1.5, 1e-12)
    oracle = bisection_oracle(lambda x: x**3 - 2.0, 1.0, 1.5)
    assert x == pytest.approx(1.259921049894873, abs=1e-12)
    assert abs(x - oracle) < 1e-12


def test_secant_clamped_mass_root():
    g = two_node_grid()
    ut = f1(g, [0.95, 0.55])

    def res(e):
        return mass_residual(ut, e, UNIT, g, 1.7)

    x, _ = secant_solve(res, 0.0, 1.0, 1e-13)
    assert x == pytest.approx(0.15, abs=1e-12)
    assert x == pytest.approx(bisection_oracle(res, 0.0, 1.0), abs=1e-12)


def test_secant_flat_start_falls_back_to_bisection():
    # both starts sit on the flat part of a clamped residual
    def res(x):
        return min(max(x - 5.0, -1.0), 1.0)

    x, _ = secant_solve(res, 0.0, 0.5, 1e-12)
    assert abs(res(x)) <= 1e-12


def test_secant_no_root_raises():
    with pytest.raises(SecantFailure):
        secant_solve(lambda x: 1.0 + 0 * x, 0.0, 1.0, 1e-12)


def test_secant_equal_starts_rejected():
    with pytest.raises(ValueError):
        secant_solve(lambda x: x, 1.0, 1.0, 1e-12)


# ------------------------------------------------------------ mass corrector


def test_mass_corrector_already_balanced():
    g = two_node_grid()
    ut = f1(g, [0.3, 0.6])
    out = mass_corrector(ut, UNIT, 0.1, Field.constant(g, 0.0), 0.0, 0.9)
    np.testing.assert_array_equal(out.u.values, [0.3, 0.6])
    assert out.xi == 0.0 and np.all(out.lam.values == 0)


def test_mass_corrector_interior_shift():
    g = two_node_grid()
    out = mass_corrector(f1(g, [0.5, 0.5]), UNIT, 0.1, Field.constant(g, 0.0), 0.0, 1.2)
    np.testing.assert_allclose(out.u.values, [0.6, 0.6], atol=1e-12)
    assert out.xi == pytest.approx(1.0, abs=1e-11)
    assert np.all(out.lam.values == 0)


def test_mass_corrector_clamped_case():
    g = two_node_grid()
    ut = f1(g, [0.95, 0.55])
    out = mass_corrector(ut, UNIT, 1.0, Field.constant(g, 0.0), 0.0, 1.7)
    eta = bisection_oracle(lambda e: mass_residual(ut, e, UNIT, g, 1.7), 0.0, 1.0)
    assert out.xi == pytest.approx(eta, abs=1e-12)
    assert out.xi == pytest.approx(0.15, abs=1e-12)
    assert out.u.values[0] == 1.0
    assert out.u.values[1] == pytest.approx(0.70, abs=1e-12)
    assert out.lam.values[0] > 0 and out.lam.values[1] == 0


def test_mass_corrector_infeasible():
    g = two_node_grid()
    with pytest.raises(InfeasibleMassError):
        mass_corrector(f1(g, [0.5, 0.5]), UNIT, 0.1, Field.constant(g, 0.0), 0.0, 2.5)


@settings(max_examples=100, deadline=None)
@given(
    vals=st.lists(st.floats(-0.5, 1.5), min_size=8, max_size=8),
    lag=st.lists(st.floats(-1, 1), min_size=8, max_size=8),
    xi_lag=st.floats(-1, 1),
    frac=st.floats(0.05, 0.95),
    s=st.floats(1e-4, 1.0),
)
def test_mass_corrector_properties(vals, lag, xi_lag, frac, s):
    g = GridSpec.fourier1d(8, (0.0, 8.0))
    target = frac * 8.0
    out = mass_corrector(f1(g, vals), UNIT, s, f1(g, lag), xi_lag, target)
    u, lam = out.u.values, out.lam.values
    assert np.all((u >= 0) & (u <= 1))
    assert abs(np.sum(u) - target) <= 1e-12 * max(1.0, target) * 1.01
    assert np.all(lam >= 0) and np.all(lam * UNIT.g(u) == 0)
    eta = s * (out.xi - xi_lag - np.asarray(lag))
    resid = (u - np.asarray(vals) - eta) / s - lam * UNIT.dg(u)
    assume(np.all(np.isfinite(resid)))
    scale = np.maximum(1.0, (np.abs(u) + np.abs(vals) + np.abs(eta)) / s)
    assert np.all(np.abs(resid) <= 1e-12 * scale)
