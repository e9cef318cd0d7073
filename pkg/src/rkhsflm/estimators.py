"""
Slope estimators for the scalar-on-function linear model.

* :func:`fit_grid_ols` / :func:`fit_impact_ols` -- least squares on the
  marginals ``X(t_1), ..., X(t_p)``; the fitted slope is the kernel expansion
  ``sum_j beta_j K(t_j, .)``.
* :func:`fit_tikhonov` -- spectral filter ``(K + gamma I)^{-1} K`` applied to
  the sample cross-covariance, with either a known kernel or the empirical one.
* :func:`fit_fpcr` -- regression on leading functional principal component
  scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ArgumentError, DomainError
from .kernels import CovarianceKernel, Grid, empirical_kernel
from .operator import RANK_TOL, discretize, eigen, quad_inner, tikhonov_apply
from .rkhs import GridFunction, KernelExpansion, rkhs_norm_sq


@dataclass(frozen=True, eq=False)
class FunctionalDataset:
    """``n`` trajectories on a common grid with scalar responses.

    ``metadata`` carries bookkeeping such as the original time range of an
    ingested file; it never influences fitting.
    """

    grid: Grid
    X: np.ndarray
    Y: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.grid):
            raise ArgumentError(f"X must be n x {len(self.grid)}, got {X.shape}")
        if Y.shape != (X.shape[0],):
            raise ArgumentError(f"Y must have length {X.shape[0]}, got {Y.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "FunctionalDataset":
        idx = np.asarray(idx)
        return FunctionalDataset(self.grid, self.X[idx], self.Y[idx], dict(self.metadata))


class FittedModel:
    """Common surface: ``predict(X)`` and ``n_params`` for adjusted R^2."""

    grid: Grid

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != len(self.grid):
            raise ArgumentError(
                f"trajectory length {x.shape[-1]} does not match training grid of size {len(self.grid)}"
            )
        out = self._predict(x)
        return float(out) if x.ndim == 1 else out

    def _predict(self, x):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class GridOlsModel(FittedModel):
    grid: Grid
    intercept: float
    points: np.ndarray
    coefficients: np.ndarray
    indices: np.ndarray

    @property
    def n_params(self) -> int:
        return self.points.size

    def _predict(self, x):
        return self.intercept + x[..., self.indices] @ self.coefficients

    def expansion(self, kernel: CovarianceKernel) -> KernelExpansion:
        return KernelExpansion(kernel, self.points, self.coefficients)


@dataclass(frozen=True, eq=False)
class TikhonovModel(FittedModel):
    alpha_hat: GridFunction
    gamma: float
    dof: float = 0.0

    @property
    def grid(self):
        return self.alpha_hat.grid

    @property
    def n_params(self) -> float:
        return self.dof

    def _predict(self, x):
        return quad_inner(x, self.alpha_hat.values)


@dataclass(frozen=True, eq=False)
class FpcrModel(FittedModel):
    intercept: float
    q: int
    score_coefs: np.ndarray
    beta_fn: GridFunction
    eigenvalues: np.ndarray

    @property
    def grid(self):
        return self.beta_fn.grid

    @property
    def n_params(self) -> int:
        return self.q

    def _predict(self, x):
        return self.intercept + quad_inner(x, self.beta_fn.values)


def predict(model: FittedModel, x):
    return model.predict(x)


def _require_nonempty(data):
    if data.n == 0:
        raise ArgumentError("dataset is empty")


def cross_covariance(data: FunctionalDataset) -> GridFunction:
    """Sample cross-covariance ``(1/n) sum_i Y_i X_i(t)``."""
    _require_nonempty(data)
    return GridFunction(data.grid, data.Y @ data.X / data.n)


def default_gamma(n: int, constant: float = 1.0) -> float:
    """``constant * n^{-1/5}``: gamma^2 sqrt(n) and n gamma^2 both diverge."""
    if n < 1:
        raise ArgumentError("n must be >= 1")
    return constant * float(n) ** -0.2


def fit_tikhonov(data: FunctionalDataset, gamma: float, kernel="empirical") -> TikhonovModel:
    """Regularized slope from the sample cross-covariance.

    With a known ``kernel`` this is the oracle estimator; with ``"empirical"``
    the operator is built from the centered sample covariance.
    """
    _require_nonempty(data)
    if not gamma > 0:
        raise ArgumentError("gamma must be positive")
    if isinstance(kernel, str):
        if kernel != "empirical":
            raise ArgumentError(f"unknown kernel mode {kernel!r}")
        kernel = empirical_kernel(data)
    op = discretize(kernel, data.grid)
    alpha_tilde = cross_covariance(data)
    alpha_hat = tikhonov_apply(op, gamma, alpha_tilde.values)
    lam = np.clip(linalg.eigvalsh(op.matrix), 0.0, None)
    dof = float(np.sum(lam / (lam + gamma)))
    return TikhonovModel(GridFunction(data.grid, alpha_hat), float(gamma), dof)


def _lstsq(D, y):
    # complete orthogonal factorization; minimal-norm under rank deficiency
    coef, _, _, _ = linalg.lstsq(D, y, lapack_driver="gelsy")
    return coef


def _ols_on_indices(data, idx, intercept):
    D = data.X[:, idx]
    if intercept:
        D = np.column_stack([np.ones(data.n), D])
    coef = _lstsq(D, data.Y)
    b0 = float(coef[0]) if intercept else 0.0
    beta = coef[1:] if intercept else coef
    return GridOlsModel(data.grid, b0, data.grid.points[idx].copy(), np.asarray(beta), np.asarray(idx))


IMPACT_RULES = ("right", "interior")


def impact_grid(grid: Grid, p: int, rule: str = "right") -> np.ndarray:
    """Indices of the grid points nearest to ``p`` equispaced impact points.

    With ``rule="right"`` the targets are ``lo + (j/p)(hi - lo)``, j = 1..p,
    which includes the right end of the grid. With ``rule="interior"`` they
    are ``lo + (j/(p+1))(hi - lo)``, excluding both ends. Duplicates (possible
    when p is close to m) are dropped.
    """
    if rule not in IMPACT_RULES:
        raise ArgumentError(f"unknown impact rule {rule!r}; expected one of {IMPACT_RULES}")
    lo, hi = grid.points[0], grid.points[-1]
    denom = p if rule == "right" else p + 1
    targets = lo + (hi - lo) * np.arange(1, p + 1) / denom
    if len(grid) == 1:
        return np.zeros(1, dtype=int)
    idx = np.clip(np.searchsorted(grid.points, targets), 1, len(grid) - 1)
    left = grid.points[idx - 1]
    idx = np.where(targets - left <= grid.points[idx] - targets, idx - 1, idx)
    return np.unique(idx)


def fit_grid_ols(data: FunctionalDataset, p: int, intercept: bool = True, rule: str = "right") -> GridOlsModel:
    """Least squares on ``p`` equispaced impact points of the grid range (see :func:`impact_grid`)."""
    _require_nonempty(data)
    if not 1 <= p <= data.m:
        raise ArgumentError(f"p={p} must be in [1, m={data.m}]")
    return _ols_on_indices(data, impact_grid(data.grid, p, rule), intercept)


def fit_impact_ols(data: FunctionalDataset, points, intercept: bool = True) -> GridOlsModel:
    _require_nonempty(data)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise ArgumentError("need at least one impact point")
    try:
        idx = data.grid.snap(points)
    except DomainError as exc:
        raise DomainError(f"impact point off the grid: {exc}") from None
    if np.unique(idx).size != idx.size:
        raise ArgumentError("two impact points snap to the same grid point")
    return _ols_on_indices(data, idx, intercept)


def fit_fpcr(data: FunctionalDataset, q: int, rank_tol: float = RANK_TOL) -> FpcrModel:
    """Principal component regression with ``q`` empirical eigenfunctions."""
    _require_nonempty(data)
    if q < 1:
        raise ArgumentError("q must be >= 1")
    op = discretize(empirical_kernel(data), data.grid)
    es = eigen(op, rank_tol)
    if q > es.rank:
        raise ArgumentError(f"q exceeds retained rank ({q} > {es.rank})")
    E = es.eigenfunctions[:, :q]
    scores = data.X @ E / data.m
    D = np.column_stack([np.ones(data.n), scores])
    coef = _lstsq(D, data.Y)
    beta = E @ coef[1:]
    return FpcrModel(float(coef[0]), q, coef[1:].copy(), GridFunction(data.grid, beta), es.eigenvalues[:q].copy())


def rkhs_error(fit: GridOlsModel, truth: KernelExpansion, kernel: CovarianceKernel) -> float:
    """Squared RKHS distance between the fitted and true slope under ``kernel``."""
    diff = fit.expansion(kernel) - truth.with_kernel(kernel)
    return rkhs_norm_sq(diff)
