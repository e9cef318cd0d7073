"""
Replicated train/test experiments and report tables.

Every replication draws its randomness from ``SeedSequence([seed, n, rep])``
so a cell's value depends only on the base seed, the sample size and the
replication index. Results are keyed by index before aggregation, which makes
serial and threaded runs produce identical tables.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError, DomainError
from .estimators import (
    FittedModel,
    FunctionalDataset,
    default_gamma,
    fit_fpcr,
    fit_grid_ols,
    fit_impact_ols,
    fit_tikhonov,
    rkhs_error,
)
from .kernels import FractionalBrownianKernel
from .simulate import IMPACT_MODELS, ScenarioSpec, estimate_hurst, generate

METRICS = ("pred_error", "adj_r2", "rkhs_error")
THREADS_ENV = "RKHS_FLM_THREADS"


def split(data: FunctionalDataset, frac: float, seed=None):
    """Random train/test partition; the training part has ``round(frac * n)`` rows."""
    n = data.n
    n_train = int(round(frac * n))
    if not 0.0 < frac < 1.0 or not 1 <= n_train <= n - 1:
        raise ArgumentError(f"train fraction {frac} gives a degenerate split of n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return data.subset(train_idx), data.subset(test_idx)


def prediction_error(model: FittedModel, test: FunctionalDataset) -> float:
    """Root mean squared prediction error on ``test``."""
    if test.n == 0:
        raise ArgumentError("test set is empty")
    resid = test.Y - model.predict(test.X)
    return float(np.sqrt(np.mean(resid**2)))


def adjusted_r2(y, yhat, p) -> float:
    """``1 - (1 - R^2)(n - 1)/(n - p - 1)`` with ``R^2 = 1 - SSE/SST``."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    n = y.size
    if yhat.shape != y.shape:
        raise ArgumentError("y and yhat differ in length")
    if n < p + 2:
        raise ArgumentError(f"need at least p + 2 = {p + 2} observations, got {n}")
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise DomainError("response has zero variance")
    r2 = 1.0 - float(np.sum((y - yhat) ** 2)) / sst
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


@dataclass(frozen=True)
class EstimatorSpec:
    """An estimator and its tuning parameters.

    ``kind`` is one of ``grid_ols``, ``impact_ols``, ``fpcr``, ``tikhonov``.
    For ``tikhonov`` a ``gamma`` of None means ``default_gamma(n_train)``.
    """

    kind: str
    p: int | None = None
    q: int | None = None
    points: tuple | None = None
    gamma: float | None = None
    gamma_constant: float = 1.0
    kernel: object = "empirical"
    intercept: bool = True
    rule: str = "right"

    def __post_init__(self):
        need = {"grid_ols": "p", "fpcr": "q", "impact_ols": "points"}
        if self.kind not in ("grid_ols", "impact_ols", "fpcr", "tikhonov"):
            raise ArgumentError(f"unknown estimator kind {self.kind!r}")
        if self.kind in need and getattr(self, need[self.kind]) is None:
            raise ArgumentError(f"{self.kind} needs {need[self.kind]}")

    @property
    def label(self) -> str:
        if self.kind == "grid_ols":
            return str(self.p)
        if self.kind == "fpcr":
            return f"L2_{self.q}"
        if self.kind == "impact_ols":
            return "impact(" + ",".join(f"{t:g}" for t in self.points) + ")"
        return "tikhonov"

    def fit(self, data: FunctionalDataset) -> FittedModel:
        if self.kind == "grid_ols":
            return fit_grid_ols(data, self.p, self.intercept, self.rule)
        if self.kind == "impact_ols":
            return fit_impact_ols(data, self.points, self.intercept)
        if self.kind == "fpcr":
            return fit_fpcr(data, self.q)
        gamma = self.gamma if self.gamma is not None else default_gamma(data.n, self.gamma_constant)
        return fit_tikhonov(data, gamma, self.kernel)


def table_estimators(ps=(6, 10, 14, 18), qs=(4, 6), rule="right"):
    """Grid OLS for each p and FPCR for each q, in table row order."""
    return [EstimatorSpec("grid_ols", p=p, rule=rule) for p in ps] + [EstimatorSpec("fpcr", q=q) for q in qs]


@dataclass(frozen=True)
class ExperimentPlan:
    """Either a simulation ``scenario`` (regenerated per replication, once per
    entry of ``n_list``) or a fixed ``dataset`` (re-split per replication)."""

    estimators: tuple
    scenario: ScenarioSpec | None = None
    dataset: FunctionalDataset | None = None
    n_list: tuple = (100, 300, 500, 700)
    replications: int = 100
    train_frac: float = 0.8
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if (self.scenario is None) == (self.dataset is None):
            raise ArgumentError("give exactly one of scenario or dataset")
        if not 0.0 < self.train_frac < 1.0:
            raise ArgumentError("train fraction must be in (0, 1)")
        if self.replications < 1:
            raise ArgumentError("replications must be >= 1")


@dataclass
class ReportTable:
    """Per-replication metric values for every (row label, n) cell."""

    row_labels: list
    n_list: list
    values: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def metrics(self):
        present = {k for cell in self.values.values() for k in cell}
        return [m for m in METRICS if m in present]

    def per_rep(self, label, n, metric) -> np.ndarray:
        return self.values[(str(label), n)][metric]

    def mean(self, label, n, metric) -> float:
        return float(np.mean(self.per_rep(label, n, metric)))

    def se(self, label, n, metric) -> float:
        v = self.per_rep(label, n, metric)
        return float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("estimator,n,replications")
        for metric in self.metrics():
            buf.write(f",{metric},{metric}_se")
        buf.write("\n")
        for label in self.row_labels:
            for n in self.n_list:
                reps = len(next(iter(self.values[(label, n)].values())))
                buf.write(f"{label},{n},{reps}")
                for metric in self.metrics():
                    buf.write(f",{self.mean(label, n, metric)!r},{self.se(label, n, metric)!r}")
                buf.write("\n")
        return buf.getvalue()

    def to_markdown(self) -> str:
        titles = {
            "pred_error": "Prediction error",
            "adj_r2": "Adjusted R^2 (training)",
            "rkhs_error": "Mean squared RKHS error",
        }
        corner = self.metadata.get("row_name", "estimator")
        blocks = []
        meta = ", ".join(f"{k}={v}" for k, v in self.metadata.items() if k != "row_name")
        if meta:
            blocks.append(f"<!-- {meta} -->")
        for metric in self.metrics():
            header = [f"{corner} \\ n"] + [str(n) for n in self.n_list]
            rows = [
                [label] + [f"{self.mean(label, n, metric):.5f} ({self.se(label, n, metric):.5f})" for n in self.n_list]
                for label in self.row_labels
            ]
            widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
            fmt = lambda r: "| " + " | ".join(c.rjust(w) for c, w in zip(r, widths)) + " |"
            lines = [f"### {titles[metric]} -- mean (MC standard error)", "", fmt(header)]
            lines.append("|" + "|".join("-" * (w + 1) + ":" for w in widths) + "|")
            lines.extend(fmt(r) for r in rows)
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def resolve_workers(workers=None) -> int:
    cap = os.environ.get(THREADS_ENV)
    w = workers if workers is not None else (os.cpu_count() or 1)
    if cap:
        try:
            w = min(w, max(1, int(cap)))
        except ValueError:
            raise ArgumentError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, int(w))


def _run_tasks(fn, tasks, workers):
    workers = resolve_workers(workers)
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _collect(results, labels, n_list, reps):
    values = {}
    for label in labels:
        for n in n_list:
            values[(label, n)] = {}
    for (n, rep), per_label in results:
        for label, metrics in per_label.items():
            cell = values[(label, n)]
            for k, v in metrics.items():
                cell.setdefault(k, np.full(reps, np.nan))[rep] = v
    return values


def _evaluate(est, train, test):
    model = est.fit(train)
    return {
        "pred_error": prediction_error(model, test),
        "adj_r2": adjusted_r2(train.Y, model.predict(train.X), model.n_params),
    }


def run_experiment(plan: ExperimentPlan) -> ReportTable:
    """Fit every estimator on the training part of each replication and score it on the test part."""
    labels = [e.label for e in plan.estimators]
    if len(set(labels)) != len(labels):
        raise ArgumentError("estimator labels must be unique")
    n_list = [plan.dataset.n] if plan.dataset is not None else list(plan.n_list)

    def one(task):
        n, rep = task
        if plan.dataset is not None:
            data = plan.dataset
        else:
            spec = replace(plan.scenario, n=n, seed=np.random.SeedSequence([plan.seed, n, rep]))
            data, _ = generate(spec)
        train, test = split(data, plan.train_frac, np.random.SeedSequence([plan.seed, n, rep, 1]))
        return (n, rep), {e.label: _evaluate(e, train, test) for e in plan.estimators}

    tasks = [(n, rep) for n in n_list for rep in range(plan.replications)]
    results = _run_tasks(one, tasks, plan.workers)
    meta = {"seed": plan.seed, "replications": plan.replications, "train_frac": plan.train_frac}
    if plan.scenario is not None:
        meta.update(scenario=plan.scenario.name, m=plan.scenario.m)
    meta["row_name"] = "model"
    return ReportTable(labels, n_list, _collect(results, labels, n_list, plan.replications), meta)


def run_rkhs_experiment(
    scenario: str,
    p_list=(3, 5, 7, 9, 11, 13, 15, 17),
    n_list=(200, 400, 600, 800),
    kernel_mode: str = "known",
    replications: int = 100,
    seed: int = 0,
    m: int = 101,
    sigma: float = 0.2,
    intercept: bool = False,
    workers: int | None = None,
) -> ReportTable:
    """Mean ``||alpha_hat_p - alpha||_K^2`` of grid OLS on full (unsplit) samples.

    With ``kernel_mode="estimated"`` the norm uses fBM with the Hurst exponent
    estimated from each sample.
    """
    if scenario not in IMPACT_MODELS:
        raise ArgumentError(f"RKHS-error experiments need scenario 2a or 2b, got {scenario!r}")
    if kernel_mode not in ("known", "estimated"):
        raise ArgumentError("kernel_mode must be 'known' or 'estimated'")
    if replications < 1:
        raise ArgumentError("replications must be >= 1")
    labels = [str(p) for p in p_list]

    def one(task):
        n, rep = task
        spec = ScenarioSpec(scenario, n=n, m=m, sigma=sigma, seed=np.random.SeedSequence([seed, n, rep]))
        data, truth = generate(spec)
        kernel = spec.covariance if kernel_mode == "known" else FractionalBrownianKernel(estimate_hurst(data))
        out = {}
        for p in p_list:
            fit = fit_grid_ols(data, p, intercept)
            out[str(p)] = {"rkhs_error": rkhs_error(fit, truth, kernel)}
        return (n, rep), out

    tasks = [(n, rep) for n in n_list for rep in range(replications)]
    results = _run_tasks(one, tasks, workers)
    meta = {
        "scenario": scenario,
        "kernel": kernel_mode,
        "seed": seed,
        "replications": replications,
        "m": m,
        "row_name": "p",
    }
    return ReportTable(labels, list(n_list), _collect(results, labels, list(n_list), replications), meta)
