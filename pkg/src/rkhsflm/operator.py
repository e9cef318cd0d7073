"""
Grid discretization of the covariance integral operator.

The operator ``(Kf)(t) = int_0^1 K(t, s) f(s) ds`` is approximated on a
uniform grid of ``m`` points by the matrix ``Gram / m``, so its eigenvalues
estimate those of the continuous operator. Eigenfunctions are scaled to unit
norm under the matching quadrature inner product ``<f, g> = (1/m) sum f g``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ArgumentError, NumericError
from .kernels import CovarianceKernel, Grid, gram

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    grid: Grid
    matrix: np.ndarray

    @property
    def m(self) -> int:
        return len(self.grid)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Retained eigenpairs, eigenvalues descending.

    ``eigenfunctions[:, j]`` holds e_j sampled on ``grid``.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    @property
    def rank(self) -> int:
        return self.eigenvalues.size


def quad_inner(f, g, m=None):
    """Quadrature inner product ``(1/m) sum_i f_i g_i`` along the last axis."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    m = f.shape[-1] if m is None else m
    return (f * g).sum(axis=-1) / m


def l2_norm(f) -> float:
    f = np.asarray(f, dtype=float)
    return float(np.sqrt(quad_inner(f, f)))


def discretize(kernel: CovarianceKernel, grid: Grid) -> DiscreteOperator:
    if not grid.uniform:
        raise ArgumentError("discretize requires a uniform grid")
    m = len(grid)
    return DiscreteOperator(grid, gram(kernel, grid) / m)


def eigen(op: DiscreteOperator, rank_tol: float = RANK_TOL) -> EigenSystem:
    M = op.matrix
    try:
        w, V = linalg.eigh(M)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"symmetric eigensolver failed: {exc}") from exc
    w, V = w[::-1], V[:, ::-1]
    top = w[0] if w.size else 0.0
    keep = w > rank_tol * top if top > 0 else np.zeros(w.size, dtype=bool)
    vecs = V[:, keep] * np.sqrt(op.m)
    # deterministic sign: largest-magnitude entry positive
    flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])])
    vecs = vecs * np.where(flip == 0, 1.0, flip)
    return EigenSystem(op.grid, w[keep].copy(), vecs)


def apply(op: DiscreteOperator, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != op.m:
        raise ArgumentError(f"vector of length {f.shape[-1]} does not match grid of size {op.m}")
    return f @ op.matrix.T if f.ndim > 1 else op.matrix @ f


def tikhonov_apply(op: DiscreteOperator, gamma: float, g) -> np.ndarray:
    """Solve ``(M + gamma I) x = M g`` by Cholesky."""
    if not gamma > 0:
        raise ArgumentError("gamma must be positive")
    g = np.asarray(g, dtype=float)
    if g.shape[0] != op.m:
        raise ArgumentError(f"vector of length {g.shape[0]} does not match grid of size {op.m}")
    A = op.matrix + gamma * np.eye(op.m)
    try:
        factor = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericError(f"Cholesky of M + gamma I failed: {exc}") from exc
    return linalg.cho_solve(factor, op.matrix @ g)


def resolvent_norm(op: DiscreteOperator, gamma: float) -> float:
    w = linalg.eigvalsh(op.matrix + gamma * np.eye(op.m))
    return float(1.0 / w[0])


def resolvent_norm_bound_check(op: DiscreteOperator, gamma: float) -> bool:
    """Whether ``||(M + gamma I)^{-1}||_op <= 1/gamma`` up to 1e-10 relative."""
    return resolvent_norm(op, gamma) <= (1.0 / gamma) * (1.0 + 1e-10)
