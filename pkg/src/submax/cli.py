"""Command-line entry points: generate, solve, verify, bench.

Exit codes: 0 all assertions passed, 2 guarantee/invariant violation,
1 error.  Worker count for batch runs comes from the SUBMAX_WORKERS
environment variable; everything else is flags and config files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .continuous import (
    KnapsackAlgoConfig,
    PackingConfig,
    solve_knapsacks,
    solve_matroid_knapsacks,
    solve_packing,
)
from .errors import SubmaxError
from .experiments import default_battery, run_experiment, verify_properties
from .extension import ExtensionEstimator
from .instances import load_json, materialize_batch, parse_constraint, save_json
from .local_search import LocalSearchConfig, solve_exact_cardinality
from .oracle import load_instance
from .reports import SolveReport

ALGORITHMS = ("exact-card", "knapsacks", "packing", "matroid-knapsacks")


def _cmd_generate(args) -> int:
    batch = load_json(args.spec)
    manifest = materialize_batch(batch, args.out)
    print(f"wrote {len(manifest)} instance(s) to {args.out}")
    return 0


def _build_estimator(n: int, config: dict) -> ExtensionEstimator:
    backend = config.get("backend", "exact" if n <= 20 else "monte-carlo")
    return ExtensionEstimator(
        backend=backend,
        sample_count=config.get("samples"),
        seed=config.get("seed", 0),
    )


def _cmd_solve(args) -> int:
    oracle = load_instance(args.instance)
    constraint = parse_constraint(load_json(args.constraint), oracle.n)
    config = load_json(args.config) if args.config else {}
    seed = int(config.get("seed", args.seed))

    if args.algorithm == "exact-card":
        k = constraint.cardinality_k
        if k is None:
            raise SubmaxError("exact-card needs a constraint with a cardinality entry")
        rep = solve_exact_cardinality(
            oracle, k, LocalSearchConfig(epsilon=config.get("ls_epsilon", 1e-3), seed=seed)
        )
        report = SolveReport(
            algorithm="exact-card",
            value=rep.value,
            guarantee=0.25,
            regime="full",
            seed=seed,
            solution_set=rep.winner,
            extra={
                "value_first": rep.value_s1,
                "value_second": rep.value_s2,
                "swaps": list(rep.iterations),
                "complemented": rep.complemented,
            },
        )
    elif args.algorithm == "knapsacks":
        K = constraint.knapsacks
        if K is None:
            raise SubmaxError("knapsacks algorithm needs a knapsack constraint")
        cfg = KnapsackAlgoConfig(
            epsilon=config.get("epsilon", min(0.95 / (4.0 * K.k * K.k), 0.05) if K.k else 0.05),
            num_knapsacks=K.k,
            enum_cap=config.get("enum_cap", 2),
            grid=config.get("grid", 0.25),
            seed=seed,
            samples=config.get("samples"),
        )
        report = solve_knapsacks(oracle, K, cfg, _build_estimator(oracle.n, config))
    elif args.algorithm == "packing":
        cfg = PackingConfig(
            steps=config.get("steps"),
            beta_mode=config.get("beta_mode", "plain"),
            grid=config.get("grid"),
            fine_grid=config.get("fine_grid", False),
            seed=seed,
            samples=config.get("samples"),
        )
        report = solve_packing(
            oracle, _build_estimator(oracle.n, config), constraint.polytope(), cfg
        )
    else:
        M = constraint.matroid
        if M is None:
            raise SubmaxError("matroid-knapsacks needs a matroid in the constraint")
        K = constraint.knapsacks
        k = K.k if K is not None else 0
        cfg = KnapsackAlgoConfig(
            epsilon=config.get("epsilon", min(0.95 / (4.0 * k * k), 0.05) if k else 0.05),
            num_knapsacks=k,
            enum_cap=config.get("enum_cap", 2),
            grid=config.get("grid", 0.25),
            seed=seed,
            samples=config.get("samples"),
        )
        pcfg = PackingConfig(
            steps=config.get("steps"),
            beta_mode=config.get("beta_mode", "plain"),
            seed=seed,
        )
        report = solve_matroid_knapsacks(
            oracle, M, K, cfg, pcfg, _build_estimator(oracle.n, config)
        )

    if args.out:
        report.to_json(args.out)
    print(
        f"{report.algorithm}: value={report.value:.6g} "
        f"guarantee={report.guarantee:.4g} regime={report.regime}"
    )
    return 0


def _cmd_verify(args) -> int:
    summary = verify_properties(args.suite, args.trials, args.seed)
    print(json.dumps(summary, sort_keys=True))
    if summary.get("warning"):
        print(f"warning: {summary['warning']}", file=sys.stderr)
    return 0 if summary["passed"] else 2


def _cmd_bench(args) -> int:
    if args.battery != "default":
        raise SubmaxError(f"unknown battery {args.battery!r}")
    cells = default_battery(args.seed)
    report = run_experiment(cells, slack=args.slack)
    out = Path(args.out)
    out.write_text(report.to_csv(), encoding="utf-8")
    save_json(out.with_suffix(out.suffix + ".sidecar.json"), report.sidecar())
    agg = report.aggregate()
    print(
        f"bench: {agg['cells']} cells, min ratio "
        f"{agg['min_ratio'] if agg['min_ratio'] is not None else 'n/a'}, "
        f"violations {agg['violations']}, errors {agg['errors']}"
    )
    if agg["errors"]:
        return 1
    return 0 if agg["violations"] == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="submax",
        description="Constrained non-monotone submodular maximization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="materialize instances from a batch spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="run one solver on an instance/constraint pair")
    p.add_argument("--instance", required=True)
    p.add_argument("--constraint", required=True)
    p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("verify", help="run a named property battery")
    p.add_argument("--suite", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bench", help="run the default battery and write the CSV report")
    p.add_argument("--battery", default="default")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slack", type=float, default=1e-2)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SubmaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
