"""Run configuration: a single JSON document, unknown keys rejected."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import problems as P
from .integrators import CorrectorKind, ProblemOps, n_steps, scheme_from_name
from .spectral import GridSpec


class ConfigError(ValueError):
    pass


PROBLEMS = ("allen_cahn", "cahn_hilliard", "fokker_planck", "heat")
SCHEMES = ("bdf1", "bdf2", "bdf3", "mcn")

_PARAM_KEYS = {
    "allen_cahn": {"epsilon2", "stabilization", "ic_epsilon"},
    "cahn_hilliard": {"epsilon", "theta0", "delta", "solver_rtol", "solver_maxiter"},
    "fokker_planck": {"half_width"},
    "heat": {"a", "b", "diffusivity"},
}

_DEFAULT_IC = {
    "allen_cahn": "tanh_disk",
    "cahn_hilliard": "random",
    "fokker_planck": "gaussian",
    "heat": "sine",
}

_IC_CHOICES = {
    "allen_cahn": {"tanh_disk", "two_bumps"},
    "cahn_hilliard": {"random"},
    "fokker_planck": {"gaussian"},
    "heat": {"sine"},
}


@dataclass
class RunConfig:
    problem: str
    scheme: str = "bdf2"
    corrector: str = "lagrange"
    conserve_mass: bool = False
    points: list[int] = field(default_factory=lambda: [128, 128])
    extent: list[list[float]] | None = None
    dt: float = 1e-5
    t_final: float = 0.01
    params: dict[str, Any] = field(default_factory=dict)
    initial_condition: str | None = None
    output: str = "out"
    snapshot_every: int = 0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    # ------------------------------------------------------------ validation

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        try:
            CorrectorKind(self.corrector)
        except ValueError:
            raise ConfigError(f"corrector must be lagrange, cutoff or none, got {self.corrector!r}") from None
        if not isinstance(self.conserve_mass, bool):
            raise ConfigError("conserve_mass must be a boolean")
        if not (isinstance(self.points, list) and self.points and all(isinstance(n, int) and n >= 2 for n in self.points)):
            raise ConfigError("points must be a non-empty list of integers >= 2")
        dims = len(self.points)
        if self.problem == "fokker_planck" and dims != 1:
            raise ConfigError("fokker_planck is one-dimensional")
        if self.problem in ("allen_cahn", "cahn_hilliard") and dims != 2:
            raise ConfigError(f"{self.problem} presets are two-dimensional")
        if dims > 2:
            raise ConfigError("only 1D and 2D grids are supported")
        if self.extent is not None:
            if len(self.extent) != dims or any(len(e) != 2 or not e[1] > e[0] for e in self.extent):
                raise ConfigError("extent must hold one [lo, hi] pair per axis with hi > lo")
        if not (isinstance(self.dt, (int, float)) and self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be a positive number")
        if not (isinstance(self.t_final, (int, float)) and self.t_final > 0):
            raise ConfigError("t_final must be positive")
        try:
            n_steps(self.t_final, self.dt)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        unknown = set(self.params) - _PARAM_KEYS[self.problem]
        if unknown:
            raise ConfigError(f"unknown params for {self.problem}: {sorted(unknown)}")
        ic = self.initial_condition or _DEFAULT_IC[self.problem]
        if ic not in _IC_CHOICES[self.problem]:
            raise ConfigError(f"initial_condition {ic!r} not available for {self.problem}")
        if not (isinstance(self.snapshot_every, int) and self.snapshot_every >= 0):
            raise ConfigError("snapshot_every must be a nonnegative integer")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        try:
            self.problem_spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid params: {exc}") from None

    # -------------------------------------------------------------- builders

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "problem" not in data:
            raise ConfigError("missing required key 'problem'")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def problem_spec(self):
        p = {k: v for k, v in self.params.items() if k != "ic_epsilon"}
        if self.problem == "allen_cahn":
            return P.AllenCahnSpec(**p)
        if self.problem == "cahn_hilliard":
            return P.CahnHilliardSpec(**p)
        if self.problem == "fokker_planck":
            return P.FokkerPlanckSpec(**p)
        return P.HeatSpec(**p)

    def grid(self) -> GridSpec:
        spec = self.problem_spec()
        if self.extent is not None:
            extent = [tuple(e) for e in self.extent]
        elif self.problem == "fokker_planck":
            extent = [spec.extent]
        else:
            extent = [(0.0, 2 * np.pi)] * len(self.points)
        if len(self.points) == 1:
            return GridSpec.fourier1d(self.points[0], extent[0])
        return GridSpec.fourier2d(self.points[0], self.points[1], tuple(extent))

    def ops(self, grid: GridSpec | None = None) -> ProblemOps:
        grid = grid or self.grid()
        spec = self.problem_spec()
        factory = {
            "allen_cahn": P.allen_cahn_ops,
            "cahn_hilliard": P.cahn_hilliard_ops,
            "fokker_planck": P.fokker_planck_ops,
            "heat": P.heat_ops,
        }[self.problem]
        return factory(spec, grid)

    def initial_data(self, grid: GridSpec) -> np.ndarray:
        ic = self.initial_condition or _DEFAULT_IC[self.problem]
        spec = self.problem_spec()
        if self.problem == "allen_cahn":
            eps = self.params.get("ic_epsilon", math.sqrt(spec.epsilon2))
            return P.tanh_disk(grid, eps) if ic == "tanh_disk" else P.two_bumps(grid, eps)
        if self.problem == "cahn_hilliard":
            return P.random_ch(grid, self.seed)
        if self.problem == "fokker_planck":
            return P.fp_gaussian(grid)
        return P.sine(grid)

    def scheme_obj(self):
        return scheme_from_name(self.scheme)
