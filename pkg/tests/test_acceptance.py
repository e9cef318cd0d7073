"""Acceptance gate.

Each test covers one numbered criterion at its stated tolerance, using the
default base seed 0 and 100 replications. The terminal summary prints one
PASS/FAIL line per criterion (see conftest.py).
"""

import numpy as np

from rkhsflm.cli import main
from rkhsflm.estimators import FunctionalDataset, default_gamma, fit_grid_ols, fit_impact_ols, fit_tikhonov, rkhs_error
from rkhsflm.harness import ExperimentPlan, table_estimators, run_experiment, run_rkhs_experiment
from rkhsflm.kernels import BrownianKernel, FractionalBrownianKernel, Grid, empirical_kernel, gram
from rkhsflm.operator import discretize, eigen, l2_norm, resolvent_norm, resolvent_norm_bound_check
from rkhsflm.rkhs import KernelExpansion, rkhs_inner
from rkhsflm.simulate import ScenarioSpec, estimate_hurst, generate, sample_gp

SEED = 0
REPS = 100
FBM = FractionalBrownianKernel(0.8)


class Checks:
    def __init__(self):
        self.failed = []

    def __call__(self, name, ok, detail):
        print(f"  [{'ok' if ok else 'FAIL'}] {name}: {detail}")
        if not ok:
            self.failed.append(f"{name}: {detail}")

    def verify(self):
        assert not self.failed, "; ".join(self.failed)


def prediction_table(scenario, n_list, rule="right"):
    plan = ExperimentPlan(
        tuple(table_estimators(rule=rule)),
        scenario=ScenarioSpec(scenario, n=n_list[0]),
        n_list=n_list,
        replications=REPS,
        seed=SEED,
    )
    return run_experiment(plan)


def cell(table, label, n, metric="pred_error"):
    return table.mean(label, n, metric), table.se(label, n, metric)


def test_criterion_1_scenario_2a_prediction():
    check = Checks()
    table = prediction_table("2a", (300,))
    m10, se10 = cell(table, "10", 300)
    check("p=10 n=300 in [0.20, 0.235]", 0.20 <= m10 <= 0.235, f"{m10:.5f}")
    gap = abs(m10 - 0.21508)
    check("p=10 n=300 within 3 MC-SE of 0.21508", gap <= 3 * se10, f"|{m10:.5f} - 0.21508| = {gap:.5f}, 3 SE = {3 * se10:.5f}")
    m6, _ = cell(table, "6", 300)
    check("p=6 n=300 in [0.38, 0.43]", 0.38 <= m6 <= 0.43, f"{m6:.5f}")
    check.verify()


def test_criterion_2_scenario_1_prediction():
    check = Checks()
    table = prediction_table("1", (300,), rule="interior")
    m18, _ = cell(table, "18", 300)
    check("p=18 n=300 in [0.12, 0.15]", 0.12 <= m18 <= 0.15, f"{m18:.5f}")
    mq, _ = cell(table, "L2_6", 300)
    check("L2_6 n=300 in [0.105, 0.13]", 0.105 <= mq <= 0.13, f"{mq:.5f}")
    check.verify()


def test_criterion_3_scenario_3_prediction():
    check = Checks()
    table = prediction_table("3", (300, 700))
    mq, _ = cell(table, "L2_4", 300)
    check("L2_4 n=300 in [0.19, 0.215]", 0.19 <= mq <= 0.215, f"{mq:.5f}")
    for p in ("6", "10", "14", "18"):
        v, _ = cell(table, p, 700)
        check(f"p={p} n=700 in [0.19, 0.22]", 0.19 <= v <= 0.22, f"{v:.5f}")
    check.verify()


def test_criterion_4_rkhs_error_known_kernel():
    check = Checks()
    table = run_rkhs_experiment("2a", (3, 5, 13), (400, 800), "known", REPS, SEED)
    v5 = table.mean("5", 400, "rkhs_error")
    check("p=5 n=400 <= 0.02", v5 <= 0.02, f"{v5:.5f}")
    v3 = table.mean("3", 400, "rkhs_error")
    check("p=3 n=400 in [0.15, 0.40]", 0.15 <= v3 <= 0.40, f"{v3:.5f}")
    v13 = table.mean("13", 800, "rkhs_error")
    check("p=13 n=800 in [0.01, 0.04]", 0.01 <= v13 <= 0.04, f"{v13:.5f}")
    check.verify()


def test_criterion_5_rkhs_error_estimated_kernel():
    check = Checks()
    table = run_rkhs_experiment("2a", (5,), (400,), "estimated", REPS, SEED)
    v5 = table.mean("5", 400, "rkhs_error")
    check("p=5 n=400 <= 0.02", v5 <= 0.02, f"{v5:.5f}")
    hits = 0
    for seed in range(100):
        data, _ = generate(ScenarioSpec("3", n=2000, seed=seed))
        hits += 0.75 <= estimate_hurst(data) <= 0.85
    check("Hurst estimate in [0.75, 0.85]", hits >= 95, f"{hits}/100 seeds")
    check.verify()


def test_criterion_6_brownian_spectrum():
    check = Checks()
    es = eigen(discretize(BrownianKernel(), Grid.uniform_on(500)))
    for j in range(1, 6):
        exact = 1.0 / ((j - 0.5) * np.pi) ** 2
        rel = abs(es.eigenvalues[j - 1] - exact) / exact
        check(f"lambda_{j} within 2%", rel <= 0.02, f"{es.eigenvalues[j - 1]:.6f} vs {exact:.6f} (rel {rel:.2e})")
    check.verify()


def test_criterion_7_property_suites():
    check = Checks()
    rng = np.random.default_rng(SEED)

    for kernel in (BrownianKernel(), FBM):
        s, t = rng.uniform(size=(2, 1000))
        worst = max(
            abs(rkhs_inner(KernelExpansion.section(kernel, a), KernelExpansion.section(kernel, b)) - kernel(a, b))
            for a, b in zip(s, t)
        )
        check(f"reproducing property ({type(kernel).__name__})", worst <= 1e-12, f"max error {worst:.2e}")

    grid = Grid.uniform_on(25)
    G = gram(FBM, grid)
    g = np.linalg.eigvalsh(G)
    weyl_ok = 0
    for _ in range(100):
        n = int(rng.integers(2, 200))
        X = sample_gp(FBM, grid, n, seed=int(rng.integers(2**32)))
        Ghat = empirical_kernel(FunctionalDataset(grid, X, np.zeros(n))).values
        bound = np.linalg.norm(G - Ghat, 2)
        weyl_ok += bool(np.all(np.abs(g - np.linalg.eigvalsh(Ghat)) <= bound * (1 + 1e-10) + 1e-12))
    check("Weyl inequality", weyl_ok == 100, f"{weyl_ok}/100 pairs")

    res_ok = 0
    for _ in range(100):
        X = rng.normal(size=(int(rng.integers(2, 50)), 30)).cumsum(axis=1)
        op = discretize(empirical_kernel(FunctionalDataset(Grid.uniform_on(30), X, np.zeros(len(X)))), Grid.uniform_on(30))
        gamma = 10 ** rng.uniform(-3, 1)
        res_ok += resolvent_norm_bound_check(op, gamma) and resolvent_norm(op, gamma) <= 1 / gamma * (1 + 1e-10)
    check("resolvent bound", res_ok == 100, f"{res_ok}/100 cases")

    worst_coef = worst_norm = 0.0
    base = generate(ScenarioSpec("3", n=80, seed=SEED))[0]
    for _ in range(50):
        k = int(rng.integers(1, 7))
        idx = np.sort(rng.choice(np.arange(1, base.m), k, replace=False))
        coefs = rng.normal(scale=3, size=k)
        truth = KernelExpansion(FBM, base.grid.points[idx], coefs)
        data = FunctionalDataset(base.grid, base.X, base.X[:, idx] @ coefs)
        fit = fit_impact_ols(data, truth.points, intercept=False)
        worst_coef = max(worst_coef, np.max(np.abs(fit.coefficients - coefs)))
        worst_norm = max(worst_norm, rkhs_error(fit, truth, FBM))
    check("noiseless exact recovery", worst_coef <= 1e-8 and worst_norm <= 1e-8, f"coef {worst_coef:.2e}, RKHS {worst_norm:.2e}")

    worst = 0.0
    for _ in range(50):
        data, _ = generate(ScenarioSpec("2b", n=60, seed=int(rng.integers(2**32))))
        intercept = bool(rng.integers(2))
        fit = fit_grid_ols(data, int(rng.integers(1, 21)), intercept)
        D = data.X[:, fit.indices]
        if intercept:
            D = np.column_stack([np.ones(data.n), D])
        resid = data.Y - fit.predict(data.X)
        worst = max(worst, np.max(np.abs(D.T @ resid)) / (np.linalg.norm(D) * np.linalg.norm(data.Y)))
    check("OLS residual orthogonality", worst <= 1e-8, f"max relative {worst:.2e}")
    check.verify()


def test_criterion_8_consistency_trends():
    check = Checks()

    def s3_error(n, seed):
        data, truth = generate(ScenarioSpec("3", n=n, seed=seed))
        return l2_norm(fit_tikhonov(data, default_gamma(n)).alpha_hat.values - truth.values)

    med_small = np.median([s3_error(100, s) for s in range(20)])
    med_large = np.median([s3_error(2000, s) for s in range(20)])
    check("Tikhonov L2 error decreases n=100 -> 2000", med_large < med_small, f"{med_small:.4f} -> {med_large:.4f}")

    n_list = (200, 400, 800, 1600)
    table = run_rkhs_experiment("2a", (10,), n_list, "known", REPS, SEED)
    means = [table.mean("10", n, "rkhs_error") for n in n_list]
    ses = [table.se("10", n, "rkhs_error") for n in n_list]
    ok = all(b <= a + max(sa, sb) for a, b, sa, sb in zip(means, means[1:], ses, ses[1:]))
    check("RKHS error nonincreasing in n (p=10)", ok, ", ".join(f"{v:.2e}" for v in means))
    check.verify()


def test_criterion_9_determinism(capsys):
    check = Checks()
    outputs = {}
    for threads in (1, 1, 4):
        for table in ("2a", "rkhs-2a-known"):
            code = main(["reproduce", "--table", table, "--reps", "3", "--seed", str(SEED), "--threads", str(threads), "--format", "csv"])
            assert code == 0
            outputs.setdefault(table, []).append(capsys.readouterr().out)
    for table, runs in outputs.items():
        check(f"{table} repeated serial runs byte-identical", runs[0] == runs[1], f"{len(runs[0])} bytes")
        check(f"{table} serial and threaded agree", runs[0] == runs[2], f"{len(runs[2])} bytes")
    check.verify()
