"""Collocation grids, spectral transforms and constant-coefficient solves.

Two grid families are supported:

* periodic Fourier grids in one or two dimensions (uniform nodes, left end
  included, right end excluded; 2D values are stored row-major with ``y``
  varying fastest), and
* a one-dimensional Legendre-Gauss-Lobatto (LGL) grid with homogeneous
  Dirichlet data for the implicit solve.

Fields are thin immutable wrappers around a numpy array shaped like the
grid. The array-level work lives on :class:`GridSpec` so the time steppers
can operate on raw arrays without re-wrapping every intermediate.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.linalg import solve_banded

from .lgl import legendre_coeffs, lgl_nodes_weights


class GridKind(str, enum.Enum):
    FOURIER1D = "Fourier1D"
    FOURIER2D = "Fourier2D"
    LGL1D = "LGL1D"


class SingularSystemError(ValueError):
    """Raised when a shifted-Laplacian solve has no solution."""


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Collocation grid with nodes and positive quadrature weights.

    Use the :meth:`fourier1d`, :meth:`fourier2d` and :meth:`lgl1d`
    constructors rather than the raw initializer.
    """

    kind: GridKind
    extent: tuple[tuple[float, float], ...]
    points: tuple[int, ...]
    axes_nodes: tuple[np.ndarray, ...] = field(repr=False)
    axes_weights: tuple[np.ndarray, ...] = field(repr=False)

    @classmethod
    def fourier1d(cls, n: int, extent: tuple[float, float] = (0.0, 2 * np.pi)) -> "GridSpec":
        return cls._fourier(GridKind.FOURIER1D, (n,), (extent,))

    @classmethod
    def fourier2d(
        cls,
        nx: int,
        ny: int | None = None,
        extent: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 2 * np.pi), (0.0, 2 * np.pi)),
    ) -> "GridSpec":
        ny = nx if ny is None else ny
        return cls._fourier(GridKind.FOURIER2D, (nx, ny), extent)

    @classmethod
    def _fourier(cls, kind, points, extent):
        extent = tuple((float(lo), float(hi)) for lo, hi in extent)
        nodes, weights = [], []
        for n, (lo, hi) in zip(points, extent):
            if n < 2:
                raise ValueError(f"need at least 2 points per axis, got {n}")
            if not hi > lo:
                raise ValueError(f"empty interval ({lo}, {hi})")
            h = (hi - lo) / n
            nodes.append(lo + h * np.arange(n))
            weights.append(np.full(n, h))
        return cls(kind, extent, tuple(int(n) for n in points), tuple(nodes), tuple(weights))

    @classmethod
    def lgl1d(cls, n: int, extent: tuple[float, float] = (-1.0, 1.0)) -> "GridSpec":
        """LGL grid with ``n + 1`` nodes (polynomial degree ``n``)."""
        lo, hi = float(extent[0]), float(extent[1])
        if not hi > lo:
            raise ValueError(f"empty interval ({lo}, {hi})")
        x, w = lgl_nodes_weights(n)
        half = 0.5 * (hi - lo)
        return cls(GridKind.LGL1D, ((lo, hi),), (n + 1,), (lo + half * (x + 1.0),), (half * w,))

    # ------------------------------------------------------------------ geometry

    @property
    def ndim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def is_periodic(self) -> bool:
        return self.kind is not GridKind.LGL1D

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in self.extent)

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates broadcast to the grid shape (``indexing='ij'``)."""
        return tuple(np.meshgrid(*self.axes_nodes, indexing="ij"))

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.axes_weights[0]
        for wa in self.axes_weights[1:]:
            w = np.multiply.outer(w, wa)
        return w

    @property
    def nodes(self) -> np.ndarray:
        """Flat ``(size, ndim)`` array of node coordinates, row-major."""
        return np.stack([c.ravel() for c in self.coords], axis=-1)

    def same_as(self, other: "GridSpec") -> bool:
        return self is other or (
            self.kind == other.kind and self.points == other.points and self.extent == other.extent
        )

    # ------------------------------------------------------------- wavenumbers

    @cached_property
    def _k_full(self) -> tuple[np.ndarray, ...]:
        # angular wavenumbers, full FFT layout on every axis but the last (rfft)
        ks = []
        for ax, (n, length) in enumerate(zip(self.points, self.lengths)):
            scale = 2 * np.pi / length
            if ax == self.ndim - 1:
                k = np.fft.rfftfreq(n, d=1.0 / n) * scale
            else:
                k = np.fft.fftfreq(n, d=1.0 / n) * scale
            shape = [1] * self.ndim
            shape[ax] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def _k_odd(self) -> tuple[np.ndarray, ...]:
        # Nyquist mode zeroed for odd derivatives
        ks = []
        for ax, (k, n) in enumerate(zip(self._k_full, self.points)):
            k = k.copy()
            if n % 2 == 0:
                idx = [0] * self.ndim
                idx[ax] = n // 2
                k[tuple(idx)] = 0.0
            ks.append(k)
        return tuple(ks)

    @cached_property
    def ksq(self) -> np.ndarray:
        """|k|^2 on the rfft layout (Fourier grids only)."""
        out = 0.0
        for k in self._k_full:
            out = out + k**2
        return np.asarray(out)

    # ----------------------------------------------------------- array kernels

    def _check_shape(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a)
        if a.shape != self.shape:
            raise ValueError(f"array shape {a.shape} does not match grid shape {self.shape}")
        return a

    def rfft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(a)

    def irfft(self, ah: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(ah, s=self.shape, axes=tuple(range(self.ndim)))

    def deriv(self, a: np.ndarray, axis: int) -> np.ndarray:
        if self.is_periodic:
            return self.irfft(1j * self._k_odd[axis] * self.rfft(a))
        c = legendre_coeffs(a)
        return npleg.legval(self._ref_nodes, npleg.legder(c)) * self._ref_scale

    def lap(self, a: np.ndarray) -> np.ndarray:
        if self.is_periodic:
            return self.irfft(-self.ksq * self.rfft(a))
        c = legendre_coeffs(a)
        return npleg.legval(self._ref_nodes, npleg.legder(c, 2)) * self._ref_scale**2

    def shifted_solve(self, rhs: np.ndarray, sigma: float, nu: float) -> np.ndarray:
        """Solve ``(sigma I - nu Laplacian) u = rhs``."""
        if sigma < 0 or nu < 0:
            raise ValueError("sigma and nu must be nonnegative")
        if self.is_periodic:
            rh = self.rfft(rhs)
            denom = sigma + nu * self.ksq
            zero = denom == 0.0
            if np.any(zero):
                if np.any(np.abs(rh[zero]) > 1e-12 * max(1.0, np.abs(rh).max())):
                    raise SingularSystemError("singular shifted Laplacian with nonzero mean forcing")
                denom = np.where(zero, 1.0, denom)
                rh = np.where(zero, 0.0, rh)
            return self.irfft(rh / denom)
        return self._dirichlet_solve(rhs, sigma, nu)

    # --------------------------------------------------------------- Legendre

    @cached_property
    def _ref_nodes(self) -> np.ndarray:
        lo, hi = self.extent[0]
        return 2.0 * (self.axes_nodes[0] - lo) / (hi - lo) - 1.0

    @property
    def _ref_scale(self) -> float:
        lo, hi = self.extent[0]
        return 2.0 / (hi - lo)

    @cached_property
    def _shen_basis(self) -> np.ndarray:
        # columns: phi_k = L_k - L_{k+2} in Legendre coefficients, k = 0..N-2
        n = self.points[0] - 1
        basis = np.zeros((n + 1, n - 1))
        idx = np.arange(n - 1)
        basis[idx, idx] = 1.0
        basis[idx + 2, idx] = -1.0
        return basis

    def _dirichlet_solve(self, rhs, sigma, nu):
        n = self.points[0] - 1
        if sigma == 0 and nu == 0:
            raise SingularSystemError("sigma = nu = 0")
        c = legendre_coeffs(rhs)
        k = np.arange(n - 1, dtype=float)
        gamma = 2.0 / (2.0 * np.arange(n + 1) + 1.0)
        # exact (rhs_N, phi_j) from the Legendre coefficients of the interpolant
        f = c[:-2] * gamma[:-2] - c[2:] * gamma[2:]
        # mass matrix is symmetric with nonzeros on the diagonal and +-2 offsets
        diag = sigma * (gamma[:-2] + gamma[2:]) + nu * self._ref_scale**2 * (4.0 * k + 6.0)
        off = -sigma * gamma[2:-2]
        ab = np.zeros((5, n - 1))
        ab[0, 2:] = off
        ab[2, :] = diag
        ab[4, :-2] = off
        uhat = solve_banded((2, 2), ab, f)
        # Galerkin is in the reference variable; the weak form carries dx/dxi
        return npleg.legval(self._ref_nodes, self._shen_basis @ uhat)


@dataclass(frozen=True, eq=False)
class Field:
    """Real grid function: one value per collocation node."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"field has {v.size} values, grid has {self.grid.size} nodes")
        v = v.reshape(self.grid.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "Field":
        return cls(grid, fn(*grid.coords))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(c)))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Fourier (complex, normalized so a constant maps to its DC value) or
    Legendre (real) expansion coefficients of a grid interpolant."""

    grid: GridSpec
    coeffs: np.ndarray


def _require_finite(f: Field):
    if not f.is_finite():
        raise ValueError("field contains non-finite values")


def _same_grid(f: Field, g: Field):
    if not f.grid.same_as(g.grid):
        raise ValueError("fields live on different grids")


def to_spectral(f: Field) -> SpectralCoeffs:
    _require_finite(f)
    if f.grid.is_periodic:
        return SpectralCoeffs(f.grid, np.fft.fftn(f.values) / f.grid.size)
    return SpectralCoeffs(f.grid, legendre_coeffs(f.values))


def from_spectral(c: SpectralCoeffs) -> Field:
    grid = c.grid
    if grid.is_periodic:
        return Field(grid, np.fft.ifftn(c.coeffs * grid.size).real)
    return Field(grid, npleg.legval(grid._ref_nodes, c.coeffs))


def laplacian(f: Field) -> Field:
    return Field(f.grid, f.grid.lap(f.values))


def gradient(f: Field) -> tuple[Field, ...]:
    return tuple(Field(f.grid, f.grid.deriv(f.values, ax)) for ax in range(f.grid.ndim))


def divergence(v: tuple[Field, ...] | list[Field]) -> Field:
    if not v:
        raise ValueError("empty vector field")
    grid = v[0].grid
    if len(v) != grid.ndim:
        raise ValueError(f"expected {grid.ndim} components, got {len(v)}")
    for comp in v[1:]:
        _same_grid(v[0], comp)
    return Field(grid, sum(grid.deriv(comp.values, ax) for ax, comp in enumerate(v)))


def solve_shifted_laplacian(rhs: Field, sigma: float, nu: float) -> Field:
    """Solve ``(sigma I - nu Laplacian) u = rhs``.

    Periodic grids solve diagonally in Fourier space; ``sigma = 0`` is only
    admissible when the forcing has zero mean (the mean of ``u`` is then set to
    zero). LGL grids impose homogeneous Dirichlet data and solve the Galerkin
    system in the ``L_k - L_{k+2}`` basis.
    """
    _require_finite(rhs)
    return Field(rhs.grid, rhs.grid.shifted_solve(rhs.values, sigma, nu))


def discrete_inner_product(f: Field, g: Field) -> float:
    _same_grid(f, g)
    return float(np.sum(f.grid.weights * f.values * g.values))
