"""Legendre-Gauss-Lobatto nodes, weights and the discrete Legendre transform."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


class LGLConvergenceError(RuntimeError):
    pass


def _legendre_and_deriv(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """L_n(x) and L_n'(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    # (1 - x^2) L_n' = n (L_{n-1} - x L_n), valid away from +-1
    dp = n * (p_prev - x * p) / (1.0 - x**2)
    return p, dp


def lgl_nodes_weights(n: int, tol: float = 1e-14, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the (n+1)-point Gauss-Lobatto-Legendre rule.

    Nodes are the roots of ``(1 - x^2) L_n'(x)`` in ascending order; the rule
    is exact for polynomials of degree ``2n - 1``.

    Parameters
    ----------
    n : int
        Polynomial degree, ``n >= 2``.
    """
    if n < 2:
        raise ValueError(f"LGL rule needs n >= 2, got {n}")
    return tuple(a.copy() for a in _lgl_cached(int(n), tol, max_iter))


@lru_cache(maxsize=64)
def _lgl_cached(n, tol, max_iter):
    # Chebyshev-Gauss-Lobatto interior points as the initial guess
    x = -np.cos(np.pi * np.arange(1, n) / n)
    for _ in range(max_iter):
        p, dp = _legendre_and_deriv(n, x)
        # Legendre ODE: (1 - x^2) L'' = 2x L' - n(n+1) L
        ddp = (2 * x * dp - n * (n + 1) * p) / (1.0 - x**2)
        dx = dp / ddp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    else:
        raise LGLConvergenceError(f"Newton iteration for LGL nodes (n={n}) did not converge in {max_iter} iterations")
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry
    nodes = np.concatenate(([-1.0], x, [1.0]))
    p, _ = _legendre_and_deriv(n, nodes[1:-1])
    pn = np.concatenate(([(-1.0) ** n], p, [1.0]))
    weights = 2.0 / (n * (n + 1) * pn**2)
    return nodes, weights


@lru_cache(maxsize=64)
def _transform_matrix(n: int) -> np.ndarray:
    x, w = _lgl_cached(n, 1e-14, 100)
    vander = npleg.legvander(x, n)  # vander[j, k] = L_k(x_j)
    gamma = 2.0 / (2.0 * np.arange(n + 1) + 1.0)
    gamma[n] = 2.0 / n  # discrete norm of L_n differs from the continuous one
    return (vander * w[:, None]).T / gamma[:, None]


def legendre_coeffs(values: np.ndarray) -> np.ndarray:
    """Legendre coefficients of the interpolant through LGL node values."""
    values = np.asarray(values, dtype=float)
    return _transform_matrix(values.size - 1) @ values
