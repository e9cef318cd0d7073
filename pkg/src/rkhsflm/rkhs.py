"""
Finite kernel expansions ``alpha(.) = sum_j beta_j K(t_j, .)`` and their RKHS geometry.

Inner products of expansions follow from the reproducing property,
``<K(., s), K(., t)>_K = K(s, t)``, so ``<a, b>_K = beta_a' G beta_b`` with G
the Gram matrix on the union of the two point sets. For a function known
only through grid samples the norm is instead computed spectrally from a
truncated eigensystem of the covariance operator.

The inverse Loeve map sends ``K(., t)`` to the random variable ``X(t)``; on a
finite expansion it acts as ``sum_j beta_j X(t_j)``, which is what
:func:`loeve_predict` evaluates on observed trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .kernels import CovarianceKernel, Grid
from .operator import EigenSystem, quad_inner

MERGE_TOL = 1e-12
CLAMP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.grid),):
            raise ArgumentError(f"{values.shape[0]} values for a grid of {len(self.grid)} points")
        object.__setattr__(self, "values", values)


class KernelExpansion:
    """``sum_j coefficients[j] * kernel(points[j], .)``.

    Points closer than 1e-12 are merged and their coefficients summed.
    """

    __slots__ = ("kernel", "points", "coefficients")

    def __init__(self, kernel: CovarianceKernel, points, coefficients):
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        coef = np.atleast_1d(np.asarray(coefficients, dtype=float))
        if pts.shape != coef.shape or pts.ndim != 1:
            raise ArgumentError("points and coefficients must be 1-d of equal length")
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ArgumentError("expansion points must lie in [0, 1]")
        self.kernel = kernel
        self.points, self.coefficients = _merge(pts, coef)

    @classmethod
    def zero(cls, kernel):
        return cls(kernel, [], [])

    @classmethod
    def section(cls, kernel, t):
        """The single kernel section ``K(t, .)``."""
        return cls(kernel, [t], [1.0])

    def __call__(self, t):
        return expansion_eval(self, t)

    def __add__(self, other):
        _check_same_kernel(self, other)
        return KernelExpansion(
            self.kernel,
            np.concatenate([self.points, other.points]),
            np.concatenate([self.coefficients, other.coefficients]),
        )

    def __neg__(self):
        return KernelExpansion(self.kernel, self.points, -self.coefficients)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return KernelExpansion(self.kernel, self.points, float(c) * self.coefficients)

    __rmul__ = __mul__

    def with_kernel(self, kernel):
        return KernelExpansion(kernel, self.points, self.coefficients)

    def __repr__(self):
        terms = ", ".join(f"{b:.4g}@{t:.4g}" for t, b in zip(self.points, self.coefficients))
        return f"KernelExpansion({self.kernel!r}, [{terms}])"


def _merge(points, coefs):
    if points.size == 0:
        return points.copy(), coefs.copy()
    order = np.argsort(points, kind="stable")
    points, coefs = points[order], coefs[order]
    # start a new group wherever the gap exceeds the merge tolerance
    starts = np.concatenate([[True], np.diff(points) > MERGE_TOL])
    group = np.cumsum(starts) - 1
    merged = np.zeros(group[-1] + 1)
    np.add.at(merged, group, coefs)
    return points[starts], merged


def _check_same_kernel(a, b):
    if a.kernel != b.kernel:
        raise ArgumentError(f"kernel mismatch: {a.kernel!r} vs {b.kernel!r}")


def expansion_eval(e: KernelExpansion, t):
    t = np.asarray(t, dtype=float)
    if e.points.size == 0:
        return 0.0 if t.ndim == 0 else np.zeros(t.shape)
    K = e.kernel(t[..., None], e.points)
    out = K @ e.coefficients
    return float(out) if t.ndim == 0 else out


def rkhs_inner(a: KernelExpansion, b: KernelExpansion) -> float:
    _check_same_kernel(a, b)
    if a.points.size == 0 or b.points.size == 0:
        return 0.0
    union, inv = np.unique(np.concatenate([a.points, b.points]), return_inverse=True)
    ca = np.zeros(union.size)
    cb = np.zeros(union.size)
    np.add.at(ca, inv[: a.points.size], a.coefficients)
    np.add.at(cb, inv[a.points.size :], b.coefficients)
    G = a.kernel.gram(union)
    return float(ca @ G @ cb)


def rkhs_norm_sq(a: KernelExpansion) -> float:
    if a.points.size == 0:
        return 0.0
    G = a.kernel.gram(a.points)
    val = float(a.coefficients @ G @ a.coefficients)
    if -CLAMP_TOL < val < 0.0:
        return 0.0
    return val


def rkhs_norm_sq_spectral(f: GridFunction, es: EigenSystem, n_terms: int) -> float:
    """Truncated spectral norm ``sum_{j <= n_terms} <f, e_j>^2 / lambda_j``.

    Small eigenvalues in the denominator amplify noise; choose ``n_terms``
    with that in mind.
    """
    if f.grid != es.grid:
        raise ArgumentError("function and eigensystem live on different grids")
    if not 1 <= n_terms <= es.rank:
        raise ArgumentError(f"n_terms={n_terms} outside [1, retained rank {es.rank}]")
    E = es.eigenfunctions[:, :n_terms]
    coef = quad_inner(E.T, f.values)
    return float(np.sum(coef**2 / es.eigenvalues[:n_terms]))


def loeve_predict(a: KernelExpansion, grid: Grid, x) -> np.ndarray | float:
    """``sum_j beta_j x(t_j)`` for one trajectory (1-d) or many (rows of 2-d)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(grid):
        raise ArgumentError(f"trajectory length {x.shape[-1]} does not match grid of size {len(grid)}")
    if a.points.size == 0:
        return 0.0 if x.ndim == 1 else np.zeros(x.shape[0])
    idx = grid.snap(a.points)
    out = x[..., idx] @ a.coefficients
    return float(out) if x.ndim == 1 else out
