"""Experiment orchestration, the default battery, and property batteries.

Reports split into a deterministic payload (the CSV: one row per
instance/algorithm cell) and a volatile sidecar (configs plus wall-clock
timings).  Identical seeds and configs reproduce the CSV byte for byte;
timings never enter it.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bruteforce import (
    SUBSET_LIMIT_N,
    brute_force_exact_cardinality,
    brute_force_matroid_knapsacks,
    brute_force_packable,
)
from .continuous import (
    KnapsackAlgoConfig,
    PackingConfig,
    box_local_search,
    continuous_greedy,
    default_box_grid,
    knapsack_guarantee,
    packing_guarantee,
    solve_knapsacks,
    solve_matroid_knapsacks,
    solve_packing,
)
from .errors import InvalidInputError
from .extension import ExtensionEstimator, exact_values_batch
from .instances import generate_instance, parse_constraint
from .local_search import LocalSearchConfig, solve_exact_cardinality
from .oracle import oracle_from_dict, submodularity_violation_sampled
from .polytopes import (
    KnapsackBoxPolytope,
    KnapsackSystem,
    Matroid,
    MatroidPolytope,
    sample_members,
)
from .rng import spawn_seed, substream
from .rounding import independent_round, pipage_round, pipage_round_many

WORKERS_ENV = "SUBMAX_WORKERS"
DEFAULT_SLACK = 1e-2

CSV_COLUMNS = [
    "instance_id",
    "algorithm",
    "n",
    "seed",
    "value",
    "opt",
    "ratio",
    "guarantee",
    "regime",
    "status",
]


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.rows if r["status"] == "violation")

    @property
    def errors(self) -> int:
        return sum(1 for r in self.rows if r["status"].startswith("error"))

    def aggregate(self) -> dict:
        ratios = [r["ratio"] for r in self.rows if isinstance(r["ratio"], float)]
        return {
            "cells": len(self.rows),
            "violations": self.violations,
            "errors": self.errors,
            "min_ratio": min(ratios) if ratios else None,
            "mean_ratio": sum(ratios) / len(ratios) if ratios else None,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([_cell_str(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {
            "config": self.config,
            "aggregate": self.aggregate(),
            "timings_s": {k: float(v) for k, v in sorted(self.timings.items())},
        }


def _cell_str(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# cell execution


def run_cell(cell: dict, slack: float = DEFAULT_SLACK) -> tuple:
    """Execute one (instance, algorithm) cell; returns (row, seconds)."""
    t0 = time.perf_counter()
    row = {
        "instance_id": cell["instance_id"],
        "algorithm": cell["algorithm"],
        "n": None,
        "seed": cell.get("seed", 0),
        "value": None,
        "opt": None,
        "ratio": None,
        "guarantee": None,
        "regime": None,
        "status": "ok",
    }
    try:
        oracle = oracle_from_dict(generate_instance(cell["spec"]))
        row["n"] = oracle.n
        constraint = parse_constraint(cell["constraint"], oracle.n)
        options = cell.get("config", {})
        seed = int(cell.get("seed", 0))
        algorithm = cell["algorithm"]

        if algorithm == "exact-card":
            k = constraint.cardinality_k
            report = solve_exact_cardinality(
                oracle, k, LocalSearchConfig(seed=seed, epsilon=options.get("ls_epsilon", 1e-3))
            )
            value = report.value
            guarantee = 0.25
            regime = "full"
            opt = None
            if oracle.n <= SUBSET_LIMIT_N:
                opt, _ = brute_force_exact_cardinality(oracle, k)
        elif algorithm == "knapsacks":
            K = constraint.knapsacks
            cfg = _knapsack_config(K, seed, options)
            rep = solve_knapsacks(oracle, K, cfg)
            value, guarantee, regime = rep.value, rep.guarantee, rep.regime
            opt = None
            if oracle.n <= SUBSET_LIMIT_N:
                opt, _ = brute_force_packable(oracle, K.normalized())
        elif algorithm == "packing":
            est = ExtensionEstimator(backend="exact", seed=seed)
            cfg = PackingConfig(
                steps=options.get("steps"),
                beta_mode=options.get("beta_mode", "plain"),
                grid=options.get("grid"),
                seed=seed,
            )
            rep = solve_packing(oracle, est, constraint.polytope(), cfg)
            value, guarantee, regime = rep.value, rep.guarantee, rep.regime
            opt = None
            if constraint.matroid is not None and oracle.n <= SUBSET_LIMIT_N:
                # integral optimum; a valid baseline because the fractional
                # optimum over the constraint polytope can only be larger
                opt, _ = brute_force_matroid_knapsacks(
                    oracle, constraint.matroid, constraint.knapsacks
                )
        elif algorithm == "matroid-knapsacks":
            M, K = constraint.matroid, constraint.knapsacks
            cfg = _knapsack_config(K, seed, options)
            rep = solve_matroid_knapsacks(oracle, M, K, cfg)
            value, guarantee, regime = rep.value, rep.guarantee, rep.regime
            opt = None
            if oracle.n <= SUBSET_LIMIT_N:
                opt, _ = brute_force_matroid_knapsacks(
                    oracle, M, K.normalized() if K is not None else None
                )
        else:
            raise InvalidInputError(f"unknown algorithm {algorithm!r}")

        row["value"] = float(value)
        row["guarantee"] = float(guarantee)
        row["regime"] = regime
        if opt is not None:
            row["opt"] = float(opt)
            if opt > 0:
                ratio = float(value) / float(opt)
                row["ratio"] = ratio
                if ratio < guarantee * (1.0 - slack) - 1e-12:
                    row["status"] = "violation"
    except Exception as exc:  # cell failures are recorded, the batch continues
        row["status"] = f"error:{type(exc).__name__}"
    return row, time.perf_counter() - t0


def _knapsack_config(K: KnapsackSystem | None, seed: int, options: dict) -> KnapsackAlgoConfig:
    k = K.k if K is not None else 0
    default_eps = min(0.95 / (4.0 * k * k), 0.05) if k >= 1 else 0.05
    return KnapsackAlgoConfig(
        epsilon=options.get("epsilon", default_eps),
        num_knapsacks=k,
        enum_cap=options.get("enum_cap", 2),
        grid=options.get("grid", 0.25),
        seed=seed,
    )


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment(
    cells: list, slack: float = DEFAULT_SLACK, workers: int | None = None
) -> ExperimentReport:
    """Run every cell (optionally in a worker pool) and assemble the report.

    Cells are independent and internally deterministic; rows are ordered by
    (instance id, algorithm) regardless of the execution order.
    """
    workers = _worker_count(workers)
    results = []
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells, [slack] * len(cells)))
    else:
        results = [run_cell(cell, slack) for cell in cells]
    report = ExperimentReport(config={"slack": slack, "workers": workers})
    for (row, seconds), cell in zip(results, cells):
        report.rows.append(row)
        report.timings[f"{row['instance_id']}/{row['algorithm']}"] = seconds
    report.rows.sort(key=lambda r: (r["instance_id"], r["algorithm"]))
    return report


# ---------------------------------------------------------------------------
# default battery


def default_battery(master_seed: int = 0) -> list:
    """Exact-cardinality, knapsack, and packing cells at n in {8, 10, 12, 14}."""
    cells = []
    sizes = (8, 10, 12, 14)
    for n in sizes:
        for variant, k in (("low", max(2, n // 3)), ("high", n - max(2, n // 3))):
            iid = f"card-n{n}-{variant}"
            cells.append(
                {
                    "instance_id": iid,
                    "spec": {
                        "generator": "gnp-cut",
                        "n": n,
                        "p": 0.45,
                        "seed": spawn_seed(master_seed, "battery", iid),
                    },
                    "constraint": {"cardinality": {"k": k}},
                    "algorithm": "exact-card",
                    "seed": spawn_seed(master_seed, "battery-alg", iid),
                }
            )
    for n in sizes:
        for k in (1, 2):
            iid = f"knap-n{n}-k{k}"
            inst_seed = spawn_seed(master_seed, "battery", iid)
            rng = substream(inst_seed, "weights")
            weights = rng.uniform(0.15, 0.6, size=(k, n))
            cells.append(
                {
                    "instance_id": iid,
                    "spec": {"generator": "gnp-cut", "n": n, "p": 0.45, "seed": inst_seed},
                    "constraint": {
                        "knapsacks": {
                            "weights": weights.tolist(),
                            "capacities": [1.0] * k,
                        }
                    },
                    "algorithm": "knapsacks",
                    "seed": spawn_seed(master_seed, "battery-alg", iid),
                }
            )
    for n in sizes:
        iid = f"pack-n{n}"
        cells.append(
            {
                "instance_id": iid,
                "spec": {
                    "generator": "gnp-cut",
                    "n": n,
                    "p": 0.45,
                    "seed": spawn_seed(master_seed, "battery", iid),
                },
                "constraint": {"matroid": {"kind": "uniform", "rank": max(2, n // 4)}},
                "algorithm": "packing",
                "seed": spawn_seed(master_seed, "battery-alg", iid),
            }
        )
    return cells


# ---------------------------------------------------------------------------
# property-verification suites


def _suite_pool(seed: int, sizes=(6, 8, 10, 12), tables=True):
    """A deterministic pool of mixed-family oracles for the batteries."""
    pool = []
    for i, n in enumerate(sizes):
        pool.append(
            oracle_from_dict(
                generate_instance(
                    {"generator": "gnp-cut", "n": n, "p": 0.5, "seed": spawn_seed(seed, "pool-cut", i)}
                )
            )
        )
        pool.append(
            oracle_from_dict(
                generate_instance(
                    {"generator": "coverage", "n": n, "seed": spawn_seed(seed, "pool-cov", i)}
                )
            )
        )
        if tables and n <= 10:
            pool.append(
                oracle_from_dict(
                    generate_instance(
                        {
                            "generator": "explicit-table",
                            "n": n,
                            "seed": spawn_seed(seed, "pool-tab", i),
                        }
                    )
                )
            )
    return pool


def _summary(suite, trials, violations, worst_margin, **details) -> dict:
    out = {
        "suite": suite,
        "trials": int(trials),
        "violations": int(violations),
        "worst_margin": float(worst_margin),
        "passed": violations == 0,
    }
    out.update(details)
    if trials == 0:
        out["warning"] = "zero trials: vacuous pass"
        out["passed"] = True
    return out


def _suite_three_set_inequality(trials: int, seed: int) -> dict:
    """f(S1|C) + f(S1&C) + f(S2|C') >= f(C) with S2 avoiding S1, C' = C\\S1."""
    pool = _suite_pool(seed, sizes=(6, 8, 10, 12, 14, 16), tables=True)
    violations = 0
    worst = math.inf
    done = 0
    idx = 0
    while done < trials:
        oracle = pool[idx % len(pool)]
        idx += 1
        n = oracle.n
        batch = min(trials - done, 512)
        rng = substream(seed, "three-set", idx)
        c = rng.random((batch, n)) < rng.random((batch, 1))
        s1 = rng.random((batch, n)) < rng.random((batch, 1))
        s2 = (rng.random((batch, n)) < rng.random((batch, 1))) & ~s1
        cprime = c & ~s1
        lhs = (
            oracle.evaluate_masks(s1 | c)
            + oracle.evaluate_masks(s1 & c)
            + oracle.evaluate_masks(s2 | cprime)
        )
        rhs = oracle.evaluate_masks(c)
        margins = lhs - rhs
        violations += int(np.sum(margins < -1e-9))
        worst = min(worst, float(np.min(margins)))
        done += batch
    return _summary("three-set-inequality", trials, violations, worst if trials else 0.0)


def _suite_submodularity(trials: int, seed: int) -> dict:
    pool = _suite_pool(seed)
    per = max(trials // max(len(pool), 1), 1) if trials else 0
    worst = 0.0
    for oracle in pool if trials else []:
        worst = max(worst, submodularity_violation_sampled(oracle, per, seed))
    return _summary("submodularity", trials, int(worst > 1e-9), -worst)


def _rounding_points(seed: int):
    """Deterministic (matroid, x) pairs used by the rounding batteries."""
    rng = substream(seed, "round-pts")
    pairs = []
    n = 10
    for rank in (1, 3, 5):
        m = Matroid.uniform(n, rank)
        x = sample_members(MatroidPolytope(m), 1, rng)[0]
        pairs.append((m, x))
    blocks = [[0, 1, 2], [3, 4, 5], [6, 7, 8, 9]]
    m = Matroid.partition(n, blocks, [1, 2, 2])
    pairs.append((m, sample_members(MatroidPolytope(m), 1, rng)[0]))
    return pairs


def _suite_rounding_marginals(trials: int, seed: int) -> dict:
    violations = 0
    worst = math.inf
    if trials == 0:
        return _summary("rounding-marginals", 0, 0, 0.0)
    for pi, (matroid, x) in enumerate(_rounding_points(seed)):
        rows = pipage_round_many(matroid, x, spawn_seed(seed, "pm", pi), trials)
        freq = rows.mean(axis=0)
        sigma = np.sqrt(np.maximum(x * (1 - x), 1e-12) / trials)
        gap = 4 * sigma - np.abs(freq - x)
        violations += int(np.sum(gap < 0))
        worst = min(worst, float(np.min(gap)))
    # independent rounding marginals, vectorized
    rng = substream(seed, "im")
    x = rng.random(12)
    draws = rng.random((trials, 12)) < x
    freq = draws.mean(axis=0)
    sigma = np.sqrt(np.maximum(x * (1 - x), 1e-12) / trials)
    gap = 4 * sigma - np.abs(freq - x)
    violations += int(np.sum(gap < 0))
    worst = min(worst, float(np.min(gap)))
    return _summary("rounding-marginals", trials, violations, worst)


def _suite_rounding_tails(trials: int, seed: int, deltas=(0.2, 0.5, 1.0)) -> dict:
    """Empirical Pr[X >= (1+d) mu] <= exp(-mu d^2 / 3) + 3 CI half-widths."""
    if trials == 0:
        return _summary("rounding-tails", 0, 0, 0.0)
    rng = substream(seed, "tail-pts")
    pairs = _rounding_points(seed)
    violations = 0
    worst = math.inf
    checks = 0
    for pi in range(20):
        matroid, x = pairs[pi % len(pairs)]
        n = len(x)
        a = rng.random(n)
        mu = float(a @ x)
        if mu <= 1e-9:
            continue
        use_pipage = pi % 2 == 0
        if use_pipage:
            rows = pipage_round_many(matroid, x, spawn_seed(seed, "tail", pi), trials)
            totals = rows @ a
        else:
            draws = substream(seed, "tail-ind", pi).random((trials, n)) < x
            totals = draws @ a
        for d in deltas:
            freq = float(np.mean(totals >= (1 + d) * mu - 1e-12))
            bound = math.exp(-mu * d * d / 3.0)
            half = math.sqrt(max(freq * (1 - freq), 1e-12) / trials)
            margin = bound + 3 * half - freq
            checks += 1
            if margin < 0:
                violations += 1
            worst = min(worst, margin)
    return _summary("rounding-tails", trials, violations, worst, checks=checks)


def _suite_rounding_expectation(trials: int, seed: int) -> dict:
    """Pipage: mean f(R) >= F(x) - 4 sigma-hat; independent: equal within 4 sigma-hat."""
    if trials == 0:
        return _summary("rounding-expectation", 0, 0, 0.0)
    oracle = oracle_from_dict(
        generate_instance({"generator": "gnp-cut", "n": 10, "p": 0.5, "seed": spawn_seed(seed, "re")})
    )
    est = ExtensionEstimator(backend="exact")
    violations = 0
    worst = math.inf
    for pi, (matroid, x) in enumerate(_rounding_points(seed)):
        fx = est.value(oracle, x)
        rows = pipage_round_many(matroid, x, spawn_seed(seed, "rex", pi), trials)
        vals = oracle.evaluate_masks(rows)
        sig = float(np.std(vals)) / math.sqrt(trials)
        margin = float(np.mean(vals)) - (fx - 4 * sig)
        if margin < 0:
            violations += 1
        worst = min(worst, margin)
    # independent rounding matches F(x) exactly in expectation
    rng = substream(seed, "rei")
    x = rng.random(oracle.n) * 0.9
    draws = rng.random((trials, oracle.n)) < x
    vals = oracle.evaluate_masks(draws)
    sig = float(np.std(vals)) / math.sqrt(trials)
    margin = 4 * sig - abs(float(np.mean(vals)) - est.value(oracle, x))
    if margin < 0:
        violations += 1
    worst = min(worst, margin)
    return _summary("rounding-expectation", trials, violations, worst)


def _suite_box_search_bound(trials: int, seed: int) -> dict:
    """(1/beta) F(y) + f_max/(4 n^2) + slack >= F(z) over the search grid."""
    if trials == 0:
        return _summary("box-search-bound", 0, 0, 0.0)
    est = ExtensionEstimator(backend="exact")
    count = max(1, min(trials, 8))
    violations = 0
    worst = math.inf
    beta = 1.0 / 3.0
    for t in range(count):
        n = (4, 6, 8)[t % 3]
        oracle = oracle_from_dict(
            generate_instance(
                {"generator": "gnp-cut", "n": n, "p": 0.6, "seed": spawn_seed(seed, "bsb", t)}
            )
        )
        rng = substream(seed, "bsb-u", t)
        upper = rng.random(n)
        grid = 0.25
        y = box_local_search(oracle, est, upper, grid=grid, mode="plain")
        fy = est.value(oracle, y)
        f_max = max(oracle.evaluate([i]) for i in range(n))
        slack = 0.01 * f_max + 1e-9
        copies = np.floor(upper / grid + 1e-12).astype(int)
        axes = [np.arange(c + 1) * grid for c in copies]
        mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        values = exact_values_batch(oracle, mesh)
        margin = float(np.min(fy / beta + f_max / (4 * n * n) + slack - values))
        if margin < 0:
            violations += 1
        worst = min(worst, margin)
    return _summary("box-search-bound", trials, violations, worst, instances=count)


def _suite_residual_greedy_bound(trials: int, seed: int) -> dict:
    """F(y(1)) >= (1 - 1/e)(F(x | y(1)) - residual peak) - (2/T) max f."""
    if trials == 0:
        return _summary("residual-greedy-bound", 0, 0, 0.0)
    est = ExtensionEstimator(backend="exact")
    count = max(1, min(trials, 10))
    violations = 0
    worst = math.inf
    from .bruteforce import brute_force_grid  # local import to avoid a cycle at module load

    for t in range(count):
        n = 5 if t % 2 == 0 else 6
        rank = 2
        oracle = oracle_from_dict(
            generate_instance(
                {"generator": "gnp-cut", "n": n, "p": 0.6, "seed": spawn_seed(seed, "rgb", t)}
            )
        )
        polytope = MatroidPolytope(Matroid.uniform(n, rank))
        T = n * n
        run = continuous_greedy(oracle, est, polytope, T)
        resolution = 0.05 if n <= 5 else 0.25
        _, x = brute_force_grid(oracle, polytope, resolution)
        upper = est.value(oracle, np.maximum(x, run.y_final))
        fmax = float(np.max(oracle.value_table()))
        bound = (1 - math.exp(-1)) * (upper - run.best_residual_value) - 2.0 * fmax / T
        margin = est.value(oracle, run.y_final) - bound
        if margin < -1e-9:
            violations += 1
        worst = min(worst, margin)
    return _summary("residual-greedy-bound", trials, violations, worst, instances=count)


def _random_polytopes(seed: int):
    rng = substream(seed, "polys")
    out = [
        MatroidPolytope(Matroid.uniform(8, 3)),
        MatroidPolytope(Matroid.partition(8, [[0, 1, 2], [3, 4], [5, 6, 7]], [1, 1, 2])),
        KnapsackBoxPolytope(
            KnapsackSystem(rng.uniform(0.1, 0.6, size=(2, 8)), np.ones(2)), 1.0
        ),
    ]
    out.append(out[0].restrict_upper(rng.random(8)))
    return out


def _suite_polytope_downmono(trials: int, seed: int) -> dict:
    if trials == 0:
        return _summary("polytope-downmono", 0, 0, 0.0)
    violations = 0
    for pi, P in enumerate(_random_polytopes(seed)):
        rng = substream(seed, "dm", pi)
        y = sample_members(P, trials // 4 + 1, rng)
        x = y * rng.random(y.shape)
        violations += int(np.sum(~P.contains_batch(x)))
    return _summary("polytope-downmono", trials, violations, 0.0 if violations == 0 else -1.0)


def _suite_linear_oracle_dominance(trials: int, seed: int) -> dict:
    if trials == 0:
        return _summary("linear-oracle-dominance", 0, 0, 0.0)
    violations = 0
    worst = math.inf
    directions = max(8, int(math.isqrt(trials)))
    members = max(64, trials // directions)
    for pi, P in enumerate(_random_polytopes(seed)):
        rng = substream(seed, "lod", pi)
        xs = sample_members(P, members, rng)
        for _ in range(directions):
            c = rng.uniform(-1, 1, size=P.n)
            star = P.maximize_linear(c)
            margin = float(c @ star - np.max(xs @ c))
            if margin < -1e-9:
                violations += 1
            worst = min(worst, margin)
    return _summary("linear-oracle-dominance", trials, violations, worst)


SUITES = {
    "three-set-inequality": _suite_three_set_inequality,
    "submodularity": _suite_submodularity,
    "rounding-marginals": _suite_rounding_marginals,
    "rounding-tails": _suite_rounding_tails,
    "rounding-expectation": _suite_rounding_expectation,
    "box-search-bound": _suite_box_search_bound,
    "residual-greedy-bound": _suite_residual_greedy_bound,
    "polytope-downmono": _suite_polytope_downmono,
    "linear-oracle-dominance": _suite_linear_oracle_dominance,
}


def verify_properties(suite: str, trials: int, seed: int = 0) -> dict:
    """Run a named invariant battery; returns counts and worst-case margins."""
    if suite not in SUITES:
        raise InvalidInputError(f"unknown suite {suite!r}; known: {sorted(SUITES)}")
    if trials < 0:
        raise InvalidInputError("trials must be non-negative")
    return SUITES[suite](int(trials), int(seed))
