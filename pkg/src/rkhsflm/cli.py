"""
Command-line interface: ``rkhs-flm {simulate,fit,reproduce}``.

Exit codes: 0 success, 1 usage or parse error, 2 numerical failure.
Flags may also be given in a ``--config`` file of ``key=value`` lines
(``#`` starts a comment); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import ArgumentError, DomainError, NumericError, ParseError
from .estimators import default_gamma
from .harness import (
    EstimatorSpec,
    ExperimentPlan,
    adjusted_r2,
    table_estimators,
    run_experiment,
    run_rkhs_experiment,
)
from .io import dumps_dataset, read_dataset
from .kernels import parse_kernel
from .simulate import SCENARIOS, ScenarioSpec, generate

PREDICTION_TABLES = {"1": "1", "2a": "2a", "2b": "2b", "3": "3"}
RKHS_TABLES = {
    "rkhs-2a-known": ("2a", "known"),
    "rkhs-2b-known": ("2b", "known"),
    "rkhs-2a-est": ("2a", "estimated"),
    "rkhs-2b-est": ("2b", "estimated"),
}
TABLE_IDS = tuple(PREDICTION_TABLES) + tuple(RKHS_TABLES)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rkhs-flm", description="RKHS functional linear regression toolkit")
    parser.add_argument("--config", help="key=value file with defaults for the subcommand's flags")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw a scenario dataset and write it as CSV")
    p.add_argument("--scenario", choices=SCENARIOS, default="2a", help="default: 2a")
    p.add_argument("--n", type=int, default=100, help="sample size (default 100)")
    p.add_argument("--m", type=int, default=101, help="grid size (default 101)")
    p.add_argument("--seed", type=int, default=0, help="default 0")
    p.add_argument("--sigma", type=float, default=0.2, help="noise SD (default 0.2)")
    p.add_argument("--hurst", type=float, default=0.8, help="fBM Hurst exponent (default 0.8)")
    p.add_argument("--out", default="-", help="output path, '-' for stdout (default)")

    p = sub.add_parser("fit", help="fit one estimator to a dataset CSV")
    p.add_argument("--in", dest="inp", required=False, default=None, help="dataset CSV (required)")
    p.add_argument(
        "--estimator",
        choices=("grid-ols", "impact-ols", "fpcr", "tikhonov"),
        default="grid-ols",
        help="default: grid-ols",
    )
    p.add_argument("--p", type=int, default=10, help="grid-ols impact point count (default 10)")
    p.add_argument("--impact-rule", choices=("right", "interior"), default="right", help="default: right")
    p.add_argument("--q", type=int, default=4, help="fpcr component count (default 4)")
    p.add_argument("--points", type=_float_list, default=None, help="impact-ols points, comma separated")
    p.add_argument("--gamma", type=float, default=None, help="tikhonov gamma; overrides --gamma-rule")
    p.add_argument("--gamma-rule", default="n^-0.2", help="'n^-0.2' or 'C*n^-0.2' (default n^-0.2)")
    p.add_argument("--kernel", default="empirical", help="brownian | fbm:H | empirical (default)")
    p.add_argument("--no-intercept", action="store_true", help="OLS without intercept")
    p.add_argument("--out", default="-", help="JSON summary path, '-' for stdout (default)")

    p = sub.add_parser("reproduce", help="reproduce a simulation table")
    p.add_argument("--table", choices=TABLE_IDS, default="2a", help="default: 2a")
    p.add_argument("--reps", type=int, default=100, help="replications (default 100)")
    p.add_argument("--seed", type=int, default=0, help="default 0")
    p.add_argument("--m", type=int, default=101, help="grid size (default 101)")
    p.add_argument("--train-frac", type=float, default=0.8, help="default 0.8")
    p.add_argument("--n", type=_int_list, default=None, help="override the table's sample sizes")
    p.add_argument("--p", type=_int_list, default=None, help="override the table's p values")
    p.add_argument("--q", type=_int_list, default=None, help="override the table's q values")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")
    p.add_argument("--format", choices=("csv", "md"), default="md", help="default: md")
    p.add_argument("--out", default="-", help="output path, '-' for stdout (default)")
    return parser


def read_config(path) -> dict:
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from None
    with fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {line!r}", line_no)
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = (value, line_no)
    return out


def _apply_config(parser, argv, config):
    """Re-parse with config values as defaults so explicit flags still win."""
    args = parser.parse_args(argv)
    if not config or args.command is None:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}
    defaults = {}
    for key, (value, line_no) in config.items():
        dest = "inp" if key == "in" else key
        if dest not in actions:
            raise ParseError(f"unknown config key {key!r} for '{args.command}'", line_no)
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = value.lower() in ("1", "true", "yes", "on")
            continue
        conv = action.type or str
        try:
            defaults[dest] = conv(value)
        except (TypeError, ValueError, ArgumentError):
            raise ParseError(f"bad value {value!r} for {key}", line_no) from None
        if action.choices is not None and defaults[dest] not in action.choices:
            raise ParseError(f"{key} must be one of {list(action.choices)}", line_no)
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_simulate(args) -> None:
    spec = ScenarioSpec(args.scenario, n=args.n, m=args.m, seed=args.seed, sigma=args.sigma, hurst=args.hurst)
    data, _ = generate(spec)
    _emit(dumps_dataset(data), args.out)


def _gamma_for(args, n) -> float:
    if args.gamma is not None:
        return args.gamma
    rule = args.gamma_rule.replace(" ", "")
    const = 1.0
    if "*" in rule:
        c, rule = rule.split("*", 1)
        const = float(c)
    if rule != "n^-0.2":
        raise ArgumentError(f"unsupported gamma rule {args.gamma_rule!r}; use 'n^-0.2' or 'C*n^-0.2'")
    return default_gamma(n, const)


def cmd_fit(args) -> None:
    if args.inp is None:
        raise UsageError("fit: --in is required")
    data = read_dataset(args.inp)
    intercept = not args.no_intercept
    kind = args.estimator.replace("-", "_")
    if kind == "impact_ols" and args.points is None:
        raise UsageError("fit: impact-ols needs --points")
    gamma = _gamma_for(args, data.n) if kind == "tikhonov" else None
    kernel = parse_kernel(args.kernel)
    est = EstimatorSpec(
        kind,
        p=args.p,
        q=args.q,
        points=args.points,
        gamma=gamma,
        kernel=kernel,
        intercept=intercept,
        rule=args.impact_rule,
    )
    model = est.fit(data)
    fitted = model.predict(data.X)
    resid = data.Y - fitted
    summary = {"estimator": args.estimator, "n": data.n, "m": data.m}
    if kind in ("grid_ols", "impact_ols"):
        summary.update(
            intercept=model.intercept,
            points=model.points.tolist(),
            coefficients=model.coefficients.tolist(),
        )
    elif kind == "fpcr":
        summary.update(
            intercept=model.intercept,
            q=model.q,
            eigenvalues=model.eigenvalues.tolist(),
            score_coefficients=model.score_coefs.tolist(),
            grid=model.grid.points.tolist(),
            beta=model.beta_fn.values.tolist(),
        )
    else:
        summary.update(
            gamma=model.gamma,
            kernel=args.kernel,
            grid=model.grid.points.tolist(),
            alpha_hat=model.alpha_hat.values.tolist(),
        )
    try:
        r2a = adjusted_r2(data.Y, fitted, model.n_params)
    except (ArgumentError, DomainError):
        r2a = None
    has_intercept = kind == "fpcr" or (kind != "tikhonov" and intercept)
    dof = data.n - model.n_params - int(has_intercept)
    summary["training"] = {
        "adj_r2": r2a,
        "residual_sd": float(np.sqrt(np.sum(resid**2) / dof)) if dof > 0 else None,
        "rmse": float(np.sqrt(np.mean(resid**2))),
    }
    _emit(json.dumps(summary, indent=2) + "\n", args.out)


def reproduce_table(args):
    if args.table in PREDICTION_TABLES:
        scen = PREDICTION_TABLES[args.table]
        rule = "interior" if scen == "1" else "right"
        ests = table_estimators(args.p or (6, 10, 14, 18), args.q or (4, 6), rule=rule)
        plan = ExperimentPlan(
            tuple(ests),
            scenario=ScenarioSpec(scen, n=100, m=args.m),
            n_list=args.n or (100, 300, 500, 700),
            replications=args.reps,
            train_frac=args.train_frac,
            seed=args.seed,
            workers=args.threads,
        )
        return run_experiment(plan)
    scen, mode = RKHS_TABLES[args.table]
    return run_rkhs_experiment(
        scen,
        p_list=args.p or (3, 5, 7, 9, 11, 13, 15, 17),
        n_list=args.n or (200, 400, 600, 800),
        kernel_mode=mode,
        replications=args.reps,
        seed=args.seed,
        m=args.m,
        workers=args.threads,
    )


def cmd_reproduce(args) -> None:
    table = reproduce_table(args)
    text = table.to_csv() if args.format == "csv" else table.to_markdown()
    _emit(text, args.out)


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = parser.parse_known_args(argv)
        config = read_config(pre.config) if pre.config else {}
        args = _apply_config(parser, argv, config)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ArgumentError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
