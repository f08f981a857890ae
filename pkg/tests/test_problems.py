import numpy as np
import pytest

from lmbound.integrators import BdfScheme, BlowUp, full_step, initialize
from lmbound.problems import (
    AllenCahnSpec,
    CahnHilliardLinearSolver,
    CahnHilliardSpec,
    FokkerPlanckSpec,
    HeatSpec,
    allen_cahn_ops,
    cahn_hilliard_ops,
    cahn_hilliard_step_solve,
    fokker_planck_ops,
    fp_gaussian,
    heat_ops,
    lcg_uniform,
    random_ch,
    tanh_disk,
    two_bumps,
)
from lmbound.spectral import GridSpec


@pytest.fixture(scope="module")
def g2():
    return GridSpec.fourier2d(16)


@pytest.fixture(scope="module")
def fp():
    return fokker_planck_ops(FokkerPlanckSpec(), GridSpec.fourier1d(32, (-2 * np.pi, 2 * np.pi)))


def presets(g2):
    g1 = GridSpec.fourier1d(32, (-2 * np.pi, 2 * np.pi))
    return [
        allen_cahn_ops(AllenCahnSpec(), g2),
        cahn_hilliard_ops(CahnHilliardSpec(), g2),
        fokker_planck_ops(FokkerPlanckSpec(), g1),
        heat_ops(HeatSpec(), g2),
    ]


def test_nonlinearity_vanishes_at_zero(g2):
    for ops in presets(g2):
        assert np.all(ops.nonlinear_eval(np.zeros(ops.grid.shape)) == 0), ops.name


def test_allen_cahn_pure_phase_is_steady(g2):
    ops = allen_cahn_ops(AllenCahnSpec(), g2)
    one = np.ones(g2.shape)
    np.testing.assert_allclose(ops.linear_apply(one, None) + ops.nonlinear_eval(one), 0, atol=1e-12)


def test_allen_cahn_splitting_is_consistent(g2):
    u = 0.7 * np.sin(g2.coords[0]) * np.cos(g2.coords[1])
    a = allen_cahn_ops(AllenCahnSpec(stabilization=0.0), g2)
    b = allen_cahn_ops(AllenCahnSpec(stabilization=2.0), g2)
    full_a = a.linear_apply(u, None) + a.nonlinear_eval(u)
    full_b = b.linear_apply(u, None) + b.nonlinear_eval(u)
    np.testing.assert_allclose(full_a, full_b, atol=1e-9)


def test_spec_validation():
    with pytest.raises(ValueError):
        AllenCahnSpec(epsilon2=0.0)
    with pytest.raises(ValueError):
        CahnHilliardSpec(delta=1.0)
    with pytest.raises(ValueError):
        FokkerPlanckSpec(half_width=-1)
    assert CahnHilliardSpec().bounds.b == pytest.approx(0.99)


def test_fokker_planck_saturated_state(fp):
    one = np.ones(fp.grid.shape)
    assert np.abs(fp.nonlinear_eval(one)).max() < 1e-12


def test_fp_gaussian_inside_bounds(fp):
    u0 = fp_gaussian(fp.grid)
    assert 0 < u0.min() and u0.max() <= 1
    assert np.argmax(u0) == np.argmin(np.abs(fp.grid.coords[0] - 1.0))


# ---------------------------------------------------------------- Cahn-Hilliard


def test_ch_constant_history_is_steady(g2):
    ops = cahn_hilliard_ops(CahnHilliardSpec(), g2)
    st = initialize(BdfScheme.of_order(2), np.full(g2.shape, 0.2), ops, 1e-5)
    st = full_step(st, BdfScheme.of_order(2), ops)
    np.testing.assert_allclose(cahn_hilliard_step_solve(st, ops), 0.2, atol=1e-12)


def test_ch_iterative_matches_diagonal_solve(g2):
    solver = CahnHilliardLinearSolver(g2, 0.1, rtol=1e-12)
    rhs = np.random.default_rng(4).standard_normal(g2.shape)
    mob = np.full(g2.shape, 0.8)
    direct = solver.solve(rhs, 1e3, mob)
    # perturb the mobility by a negligible amount so GMRES runs
    iterative = solver.solve(rhs, 1e3, mob + 1e-14 * np.random.default_rng(5).random(g2.shape))
    assert solver.last_iters > 0
    np.testing.assert_allclose(iterative, direct, atol=1e-10)


def test_ch_variable_mobility_residual(g2):
    solver = CahnHilliardLinearSolver(g2, 0.1, rtol=1e-10)
    u = random_ch(g2, 3)
    mob = 1 - u**2
    rhs = np.random.default_rng(0).standard_normal(g2.shape)
    x = solver.solve(rhs, 1e4, mob)
    r = solver.apply(x, mob, 1e4) - rhs
    assert np.linalg.norm(r) <= 1e-9 * np.linalg.norm(rhs)


def test_ch_log_domain_blowup(g2):
    ops = cahn_hilliard_ops(CahnHilliardSpec(), g2)
    with pytest.raises(BlowUp):
        ops.nonlinear_eval(np.full(g2.shape, 1.0))


# ---------------------------------------------------------------- initial data


def test_lcg_reference_values():
    # state after one step from seed 0 is the increment
    first = ((1442695040888963407 >> 11) + 0.5) / 2**53 * 2 - 1
    v = lcg_uniform(0, 3)
    assert v[0] == first
    assert np.all(np.abs(v) < 1)
    np.testing.assert_array_equal(lcg_uniform(0, 3), v)
    assert not np.array_equal(lcg_uniform(1, 3), v)


def test_lcg_is_roughly_uniform():
    v = lcg_uniform(42, 20000)
    assert abs(v.mean()) < 0.02
    assert abs(v.var() - 1 / 3) < 0.01


def test_random_ch_range(g2):
    u = random_ch(g2, 7)
    assert 0.15 <= u.min() and u.max() <= 0.25


def test_tanh_disk_and_two_bumps(g2):
    u = tanh_disk(g2, 0.1)
    assert u.min() >= -1 and u.max() <= 1
    assert u[8, 8] > 0.9 and u[0, 0] < -0.9
    w = two_bumps(GridSpec.fourier2d(64), 0.05)
    assert w.min() >= -1 - 1e-12 and w.max() <= 1 + 1e-12
