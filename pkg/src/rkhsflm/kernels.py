"""
Covariance kernels on [0, 1] and their Gram matrices.

Three kernels are provided: standard Brownian motion ``min(s, t)``,
fractional Brownian motion with Hurst exponent ``H``, and the empirical
(sample) covariance of a set of centered trajectories observed on a grid.
The empirical kernel is only defined at grid points; queries are snapped to
the nearest grid point when they fall within half a grid spacing of it.

Examples
--------
>>> from rkhsflm.kernels import FractionalBrownianKernel, Grid, gram
>>> k = FractionalBrownianKernel(0.8)
>>> round(k(0.5, 0.5), 5)
0.32988
>>> gram(k, Grid([0.5, 1.0])).round(5)
array([[0.32988, 0.5    ],
       [0.5    , 1.     ]])
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError, DomainError

UNIFORM_TOL = 1e-10
PSD_RTOL = 1e-8


class Grid:
    """Strictly increasing set of observation times in [0, 1]."""

    __slots__ = ("points", "uniform")

    def __init__(self, points):
        pts = np.array(points, dtype=float).ravel()
        if pts.size == 0:
            raise ArgumentError("grid must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise ArgumentError("grid points must be finite")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise ArgumentError("grid points must lie in [0, 1]")
        if pts.size > 1 and np.any(np.diff(pts) <= 0):
            raise ArgumentError("grid points must be strictly increasing")
        pts.setflags(write=False)
        self.points = pts
        if pts.size < 3:
            self.uniform = True
        else:
            d = np.diff(pts)
            self.uniform = bool(np.max(np.abs(d - d[0])) <= UNIFORM_TOL)

    @classmethod
    def uniform_on(cls, m, lo=0.0, hi=1.0):
        """``m`` equispaced points from ``lo`` to ``hi`` inclusive.

        Points are rounded to 12 significant digits so that they survive a
        text round trip unchanged.
        """
        if m < 1:
            raise ArgumentError("m must be >= 1")
        raw = np.linspace(lo, hi, m)
        return cls([float(f"{x:.12g}") for x in raw])

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def __repr__(self):
        return f"Grid(m={len(self)}, [{self.points[0]:.4g}, {self.points[-1]:.4g}], uniform={self.uniform})"

    def snap(self, t):
        """Indices of the grid points nearest to ``t``.

        Raises DomainError if a query is farther than half the local grid
        spacing from every grid point.
        """
        t = np.asarray(t, dtype=float)
        pts = self.points
        if pts.size == 1:
            if np.any(np.abs(t - pts[0]) > UNIFORM_TOL):
                raise DomainError(f"point(s) {t} not on the single-point grid {pts[0]}")
            return np.zeros(t.shape, dtype=int)
        idx = np.clip(np.searchsorted(pts, t), 1, pts.size - 1)
        left, right = pts[idx - 1], pts[idx]
        take_left = (t - left) <= (right - t)
        nearest = np.where(take_left, idx - 1, idx)
        # half of the spacing on the side of the query
        half = 0.5 * (right - left)
        dist = np.abs(t - pts[nearest])
        if np.any(dist > half + UNIFORM_TOL):
            bad = np.atleast_1d(t)[np.atleast_1d(dist > half + UNIFORM_TOL)]
            raise DomainError(f"point(s) {bad} lie off the grid beyond the snap tolerance")
        return nearest


class CovarianceKernel:
    """Base class; subclasses implement vectorised ``__call__(s, t)``."""

    def __call__(self, s, t):
        raise NotImplementedError

    def gram(self, points):
        p = np.asarray(points, dtype=float).ravel()
        G = self(p[:, None], p[None, :])
        # exact symmetry regardless of floating-point evaluation order
        return 0.5 * (G + G.T)


class BrownianKernel(CovarianceKernel):
    """K(s, t) = min(s, t)."""

    def __call__(self, s, t):
        out = np.minimum(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        return float(out) if out.ndim == 0 else out

    def __eq__(self, other):
        return isinstance(other, BrownianKernel)

    def __hash__(self):
        return hash("brownian")

    def __repr__(self):
        return "BrownianKernel()"


class FractionalBrownianKernel(CovarianceKernel):
    """K(s, t) = (|s|^{2H} + |t|^{2H} - |t - s|^{2H}) / 2."""

    def __init__(self, hurst):
        hurst = float(hurst)
        if not 0.0 < hurst < 1.0:
            raise ArgumentError(f"Hurst exponent must be in (0, 1), got {hurst}")
        self.hurst = hurst

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        h2 = 2.0 * self.hurst
        out = 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)
        return float(out) if out.ndim == 0 else out

    def __eq__(self, other):
        return isinstance(other, FractionalBrownianKernel) and other.hurst == self.hurst

    def __hash__(self):
        return hash(("fbm", self.hurst))

    def __repr__(self):
        return f"FractionalBrownianKernel(hurst={self.hurst})"


class EmpiricalKernel(CovarianceKernel):
    """Kernel tabulated on a grid; off-grid queries snap to the nearest point."""

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        m = len(grid)
        if values.shape != (m, m):
            raise ArgumentError(f"values must be {m}x{m}, got {values.shape}")
        values = 0.5 * (values + values.T)
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __call__(self, s, t):
        i = self.grid.snap(s)
        j = self.grid.snap(t)
        out = self.values[i, j]
        return float(out) if np.ndim(out) == 0 else out

    def gram(self, points):
        idx = self.grid.snap(np.asarray(points, dtype=float).ravel())
        return self.values[np.ix_(idx, idx)].copy()

    def __eq__(self, other):
        return (
            isinstance(other, EmpiricalKernel)
            and other.grid == self.grid
            and np.array_equal(other.values, self.values)
        )

    def __hash__(self):
        return hash((self.grid, self.values.tobytes()))

    def __repr__(self):
        return f"EmpiricalKernel(m={len(self.grid)})"


def eval_kernel(kernel: CovarianceKernel, s, t):
    return kernel(s, t)


def gram(kernel: CovarianceKernel, grid) -> np.ndarray:
    """Gram matrix ``K(t_i, t_j)`` on a Grid or a plain array of points."""
    points = grid.points if isinstance(grid, Grid) else grid
    return kernel.gram(points)


def empirical_kernel(dataset) -> EmpiricalKernel:
    """Sample covariance kernel ``(1/n) sum_i X_i(s) X_i(t)`` of centered curves.

    Trajectories are centered by their pointwise sample mean first.
    """
    X = np.asarray(dataset.X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ArgumentError("empirical kernel needs at least one trajectory")
    Xc = X - X.mean(axis=0)
    return EmpiricalKernel(dataset.grid, Xc.T @ Xc / X.shape[0])


def is_psd(G, rtol=PSD_RTOL) -> bool:
    w = np.linalg.eigvalsh(G)
    top = max(float(w[-1]), 0.0)
    return bool(w[0] >= -rtol * top)


def parse_kernel(text: str) -> CovarianceKernel | str:
    """Parse ``brownian``, ``fbm:H`` or ``empirical`` (returned as a string)."""
    text = text.strip().lower()
    if text == "brownian":
        return BrownianKernel()
    if text == "empirical":
        return "empirical"
    if text.startswith("fbm:"):
        try:
            return FractionalBrownianKernel(float(text[4:]))
        except ValueError as exc:
            raise ArgumentError(f"bad kernel spec {text!r}: {exc}") from None
    raise ArgumentError(f"unknown kernel {text!r}; expected brownian, fbm:H or empirical")
