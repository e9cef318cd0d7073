"""
Gaussian-process trajectories and the four simulation scenarios.

Scenarios (fractional Brownian motion predictors, Hurst 0.8 by default):

``1``   Y = X(1); only X on [0, 0.95] is observed.
``2a``  Y = 2 X(0.2) - 5 X(0.4) + X(0.9) + eps.
``2b``  Y = 2.1 X(0.16) - 0.2 X(0.47) - 1.9 X(0.67) + 5 X(0.85) + 4.2 X(0.91) + eps.
``3``   Y = int_0^1 log(1 + 4s) X(s) ds + eps, integral by the (1/m) grid rule.

``eps ~ N(0, sigma^2)`` with sigma = 0.2 by default.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import linalg

from .errors import ArgumentError, DomainError, NumericError
from .estimators import FunctionalDataset
from .kernels import CovarianceKernel, FractionalBrownianKernel, Grid, gram
from .operator import DiscreteOperator, apply, discretize
from .rkhs import GridFunction, KernelExpansion, loeve_predict

SCENARIOS = ("1", "2a", "2b", "3")
DEFAULT_M = 101
S1_CUTOFF = 0.95

IMPACT_MODELS = {
    "2a": ((0.2, 0.4, 0.9), (2.0, -5.0, 1.0)),
    "2b": ((0.16, 0.47, 0.67, 0.85, 0.91), (2.1, -0.2, -1.9, 5.0, 4.2)),
}


def s3_slope(t):
    return np.log1p(4.0 * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ScenarioSpec:
    """One scenario draw. ``seed`` may be an int or a ``numpy.random.SeedSequence``.

    ``kernel`` overrides the fBM(hurst) predictor covariance when given.
    """

    name: str
    n: int
    m: int = DEFAULT_M
    seed: object = 0
    sigma: float = 0.2
    hurst: float = 0.8
    kernel: CovarianceKernel | None = None

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ArgumentError(f"unknown scenario {self.name!r}; expected one of {SCENARIOS}")
        if self.sigma < 0:
            raise ArgumentError("sigma must be >= 0")
        if not 0.0 < self.hurst < 1.0:
            raise ArgumentError("hurst must be in (0, 1)")
        if self.m < 2:
            raise ArgumentError("m must be >= 2")
        if self.n < 1:
            raise ArgumentError("n must be >= 1")

    @property
    def covariance(self) -> CovarianceKernel:
        return self.kernel if self.kernel is not None else FractionalBrownianKernel(self.hurst)

    def with_seed(self, seed) -> "ScenarioSpec":
        return replace(self, seed=seed)


def _augment(grid: Grid, required) -> Grid:
    pts = list(grid.points)
    for v in required:
        arr = np.asarray(pts)
        j = int(np.argmin(np.abs(arr - v)))
        if abs(arr[j] - v) <= 1e-9:
            pts[j] = v
        else:
            pts.append(v)
    return Grid(sorted(pts))


def scenario_grid(name: str, m: int = DEFAULT_M) -> Grid:
    """Full simulation grid on [0, 1], containing every point the scenario needs."""
    base = Grid.uniform_on(m)
    if name == "1":
        return _augment(base, (S1_CUTOFF, 1.0))
    if name in IMPACT_MODELS:
        return _augment(base, IMPACT_MODELS[name][0])
    return base


@lru_cache(maxsize=64)
def _cholesky_factor(kernel: CovarianceKernel, grid: Grid):
    G = gram(kernel, grid)
    m = len(grid)
    scale = np.trace(G) / m
    if scale <= 0.0:
        return None
    ridge = 1e-10
    while ridge <= 1e-6 * (1 + 1e-9):
        try:
            L = linalg.cholesky(G + ridge * scale * np.eye(m), lower=True)
            L.setflags(write=False)
            return L
        except linalg.LinAlgError:
            ridge *= 10.0
    raise NumericError("Cholesky of the Gram matrix failed even with jitter 1e-6")


def sample_gp(kernel: CovarianceKernel, grid: Grid, n: int, seed=None) -> np.ndarray:
    """``n`` centered Gaussian trajectories with covariance ``Gram(kernel, grid)``.

    ``seed`` is anything accepted by ``numpy.random.default_rng``.
    """
    rng = np.random.default_rng(seed)
    L = _cholesky_factor(kernel, grid)
    Z = rng.standard_normal((n, len(grid)))
    if L is None:
        return np.zeros((n, len(grid)))
    return Z @ L.T


def generate(spec: ScenarioSpec):
    """Draw a dataset; returns ``(dataset, truth)``.

    ``truth`` is a KernelExpansion for 2a/2b, a GridFunction for 3 and None
    for scenario 1 (its regression X(1) has no finite expansion on [0, 0.95]).
    """
    rng = np.random.default_rng(spec.seed)
    kernel = spec.covariance
    grid = scenario_grid(spec.name, spec.m)
    X = sample_gp(kernel, grid, spec.n, rng)
    meta = {"scenario": spec.name, "sigma": spec.sigma, "hurst": spec.hurst}

    if spec.name == "1":
        keep = grid.points <= S1_CUTOFF + 1e-12
        obs = Grid(grid.points[keep])
        Y = X[:, -1].copy()
        return FunctionalDataset(obs, X[:, keep], Y, meta), None

    noise = spec.sigma * rng.standard_normal(spec.n)
    if spec.name in IMPACT_MODELS:
        truth = true_alpha(spec)
        Y = loeve_predict(truth, grid, X) + noise
    else:
        Y = X @ s3_slope(grid.points) / len(grid) + noise
        truth = true_alpha(spec, discretize(kernel, grid))
    return FunctionalDataset(grid, X, Y, meta), truth


def true_alpha(spec: ScenarioSpec, operator: DiscreteOperator | None = None):
    """True RKHS slope: the impact-point expansion (2a/2b) or K applied to log(1+4t) (3)."""
    if spec.name in IMPACT_MODELS:
        points, coefs = IMPACT_MODELS[spec.name]
        return KernelExpansion(spec.covariance, points, coefs)
    if spec.name == "3":
        if operator is None:
            operator = discretize(spec.covariance, scenario_grid("3", spec.m))
        return GridFunction(operator.grid, apply(operator, s3_slope(operator.grid.points)))
    raise ArgumentError("scenario 1 has no finite-expansion slope; true_alpha is unsupported")


def estimate_hurst(data: FunctionalDataset) -> float:
    """Hurst exponent from ``Var X(1/2) = (1/2)^{2H}``, clamped to [0.01, 0.99]."""
    if data.n < 2:
        raise ArgumentError("need at least two trajectories to estimate a variance")
    try:
        j = int(data.grid.snap(0.5))
    except DomainError:
        raise DomainError("grid has no point near t = 0.5") from None
    return hurst_from_variance(float(np.var(data.X[:, j], ddof=1)))


def hurst_from_variance(v: float) -> float:
    if not v > 0:
        return 0.99
    h = -np.log(v) / (2.0 * np.log(2.0))
    return float(np.clip(h, 0.01, 0.99))
