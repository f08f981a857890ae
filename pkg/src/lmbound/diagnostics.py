"""Scalar monitors, error norms and observed convergence orders."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .problems import CahnHilliardSpec, ch_energy_array, fp_entropy_array
from .spectral import Field, discrete_inner_product


@dataclass
class StepDiagnostics:
    t: float
    mass: float
    min_u: float
    max_u: float
    energy: Optional[float] = None
    max_lambda: float = 0.0
    xi: float = 0.0
    secant_iters: int = 0
    stability_functional: Optional[float] = None

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        out = []
        for name in self.columns():
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, int) and not isinstance(v, bool):
                out.append(str(v))
            else:
                out.append(repr(float(v)))
        return out


def mass(f: Field) -> float:
    return discrete_inner_product(f, Field.constant(f.grid, 1.0))


def _check_pair(f: Field, ref: Field):
    if not f.grid.same_as(ref.grid):
        raise ValueError("fields live on different grids")


def linf_error(f: Field, ref: Field) -> float:
    _check_pair(f, ref)
    return float(np.max(np.abs(f.values - ref.values)))


def l2_error(f: Field, ref: Field) -> float:
    _check_pair(f, ref)
    d = f.values - ref.values
    return float(np.sqrt(np.sum(f.grid.weights * d * d)))


def convergence_order(errors: Sequence[tuple[float, float]]) -> list[float]:
    """Observed orders ``log(e_{i-1}/e_i) / log(dt_{i-1}/dt_i)`` for a
    sequence of ``(dt, error)`` pairs with strictly decreasing ``dt``."""
    dts = [float(d) for d, _ in errors]
    errs = [float(e) for _, e in errors]
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("time steps must be strictly decreasing")
    if any(not e > 0 for e in errs):
        raise ValueError("errors must be positive")
    return [math.log(errs[i - 1] / errs[i]) / math.log(dts[i - 1] / dts[i]) for i in range(1, len(errs))]


def ch_energy(u: Field, spec: CahnHilliardSpec) -> float:
    return ch_energy_array(u.values, u.grid, spec)


def fp_entropy(u: Field, with_flag: bool = False):
    """Fokker-Planck entropy; ``with_flag`` also reports whether a log
    argument was floored (the field touched 0 or 1)."""
    value, clamped = fp_entropy_array(u.values, u.grid)
    return (value, clamped) if with_flag else value


def _sq_norm(weights, v):
    return float(np.sum(weights * v * v))


def stability_functional(state, weights) -> Optional[float]:
    """``4|u^m|^2 + |2u^m - u^{m-1}|^2 + (4/3) dt^2 |lam^m g'(u^m) + xi^m|^2``
    in the discrete norm; ``None`` until two levels are stored."""
    if len(state.u) < 2:
        if state.n == 0:
            u = state.u[0]
            return 5.0 * _sq_norm(weights, u)
        return None
    um, um1 = state.u[0], state.u[1]
    mult = state.lam_dg[0] + state.xi[0]
    return (
        4.0 * _sq_norm(weights, um)
        + _sq_norm(weights, 2.0 * um - um1)
        + (4.0 / 3.0) * state.dt**2 * _sq_norm(weights, mult)
    )


def step_diagnostics(state, ops, with_energy: bool = True) -> StepDiagnostics:
    u = state.u[0]
    w = ops.grid.weights
    energy = None
    if with_energy and ops.energy is not None:
        energy = ops.energy(u)
        if energy is not None and not math.isfinite(energy):
            energy = None
    return StepDiagnostics(
        t=state.t,
        mass=float(np.sum(w * u)),
        min_u=float(u.min()),
        max_u=float(u.max()),
        energy=energy,
        max_lambda=float(np.max(state.lam[0])),
        xi=float(state.xi[0]),
        secant_iters=int(state.secant_iters),
        stability_functional=stability_functional(state, w),
    )
