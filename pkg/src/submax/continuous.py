"""Fractional solvers built on the multilinear extension.

* ``continuous_greedy``: Euler-discretized ascent y <- y + (1/T) * v where
  v maximizes v . grad F(y) over the polytope.  The run records the whole
  trajectory and the best value of F(y(1) - y(t)) over the grid, which is
  the correction term the non-monotone guarantee needs.
* ``box_local_search``: maximizes F over {0 <= y <= u} by local search on
  a multiset with floor(u_i / delta) copies of element i.  All copies of
  one element are interchangeable, so the search runs directly on the
  per-element copy counts (moves are count +/- 1, the complement is s - c);
  this is the copy-collapsed form of running the unconstrained add/delete
  search on the blown-up ground set.
* ``solve_packing``: two greedy runs (the second on the polytope with
  y <= 1 - y1 added), the box search under y1, and the two residual peaks;
  returns the best of the five candidates.
* ``fractional_local_search``: grid coordinate ascent run twice (second
  pass on the residual box), used as the fractional engine of the
  multi-knapsack driver.
* ``solve_knapsacks`` / ``solve_matroid_knapsacks``: enumerate small seed
  sets, prune large-marginal and heavy leftovers, solve the residual
  fractional problem, round, and keep the best packable candidate.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .extension import ExtensionEstimator, as_point
from .local_search import accept_threshold
from .oracle import ContractedOracle, SetFunctionOracle, as_subset
from .polytopes import (
    IntersectionPolytope,
    KnapsackBoxPolytope,
    KnapsackSystem,
    Matroid,
    MatroidPolytope,
    PackingPolytope,
)
from .reports import SolveReport
from .rng import spawn_seed
from .rounding import independent_round, pipage_round

BETA_PLAIN = 1.0 / 3.0
BETA_SMOOTHED = 0.4


def packing_guarantee(beta: float) -> float:
    """Approximation factor of the five-candidate driver at inner ratio beta."""
    e = math.e
    return beta * (e - 1.0) / ((4.0 * e - 2.0) * beta + (e - 1.0))


def knapsack_guarantee(epsilon: float) -> float:
    return 0.25 - 2.0 * epsilon


# ---------------------------------------------------------------------------
# continuous greedy


@dataclass(frozen=True)
class TrajectoryRecord:
    """Grid times, points y(t_m), and their estimated F values."""

    times: np.ndarray
    points: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class GreedyRunResult:
    y_final: np.ndarray
    trajectory: TrajectoryRecord
    best_residual_point: np.ndarray
    best_residual_value: float


def continuous_greedy(
    oracle: SetFunctionOracle,
    est: ExtensionEstimator,
    polytope: PackingPolytope,
    steps: int,
    stats: dict | None = None,
) -> GreedyRunResult:
    """Run T Euler steps of the greedy ascent and scan the residual grid.

    Coordinates are clamped at 1 (gradient noise can overshoot); clamping
    only lowers coordinates, so every grid point stays in the polytope.
    """
    n = oracle.n
    T = int(steps)
    if T < 1:
        raise InvalidInputError("steps must be at least 1")
    points = np.zeros((T + 1, n))
    values = np.empty(T + 1)
    y = np.zeros(n)
    values[0] = est.value(oracle, y, stream=("cg-val",))
    for m in range(1, T + 1):
        grad = est.gradient(oracle, y, stream=("cg-grad", m))
        v = polytope.maximize_linear(grad)
        y = np.minimum(y + v / T, 1.0)
        points[m] = y
        values[m] = est.value(oracle, y, stream=("cg-val",))
    if stats is not None:
        stats["value_evals"] = stats.get("value_evals", 0) + 2 * (T + 1)
        stats["gradient_evals"] = stats.get("gradient_evals", 0) + T

    residuals = np.maximum(points[T][None, :] - points, 0.0)
    rvalues = np.array(
        [est.value(oracle, r, stream=("cg-val",)) for r in residuals]
    )
    best = int(np.argmax(rvalues))
    trajectory = TrajectoryRecord(np.arange(T + 1) / T, points, values)
    return GreedyRunResult(
        y_final=points[T].copy(),
        trajectory=trajectory,
        best_residual_point=residuals[best].copy(),
        best_residual_value=float(rvalues[best]),
    )


# ---------------------------------------------------------------------------
# box-constrained smoothed local search


def default_box_grid(n: int, fine: bool = False) -> float:
    # the fine grid makes the multiset Theta(n^5) large; only for tiny n
    return 1.0 / (8 * n**4) if fine else 1.0 / (4 * n)


def box_local_search(
    oracle: SetFunctionOracle,
    est: ExtensionEstimator,
    upper,
    *,
    grid: float | None = None,
    fine_grid: bool = False,
    mode: str = "plain",
    epsilon: float = 1e-3,
    max_iters: int = 100_000,
    stats: dict | None = None,
) -> np.ndarray:
    """Maximize F over {0 <= y <= upper} on the grid; returns the found point.

    ``mode="plain"`` scores moves on F itself (a third of the box optimum,
    up to the accept slack and grid error); ``mode="smoothed"`` scores
    moves on F at the blended point 0.9/0.1 on/off the current multiset,
    chasing the 0.4 inner ratio.  The winner against its multiset
    complement is always chosen on F directly.
    """
    n = oracle.n
    upper = as_point(upper, n)
    delta = grid if grid is not None else default_box_grid(n, fine_grid)
    if not (0 < delta <= 1):
        raise InvalidInputError("grid step must lie in (0, 1]")
    if mode not in ("plain", "smoothed"):
        raise InvalidInputError(f"unknown mode {mode!r}")

    copies = np.floor(upper / delta + 1e-12).astype(np.int64)
    evals = 0

    def point(counts) -> np.ndarray:
        return np.minimum(counts * delta, 1.0)

    def true_value(counts) -> float:
        nonlocal evals
        evals += 1
        return est.value(oracle, point(counts), stream=("box-ls",))

    def move_score(counts) -> float:
        nonlocal evals
        if mode == "plain":
            return true_value(counts)
        evals += 1
        blended = delta * (0.9 * counts + 0.1 * (copies - counts))
        return est.value(oracle, np.minimum(blended, 1.0), stream=("box-ls-blend",))

    total = int(copies.sum())
    if total == 0:
        return np.zeros(n)

    counts = np.zeros(n, dtype=np.int64)
    score = move_score(counts)
    for i in range(n):
        if copies[i] >= 1:
            cand = counts.copy()
            cand[i] = 1
            v = move_score(cand)
            if v > score:
                counts, score = cand, v

    steps = 0
    while steps < max_iters:
        threshold = accept_threshold(score, total, epsilon)
        best_move, best_val = None, threshold
        for i in range(n):
            for direction in (1, -1):
                ci = counts[i] + direction
                if ci < 0 or ci > copies[i]:
                    continue
                cand = counts.copy()
                cand[i] = ci
                v = move_score(cand)
                if v > best_val:
                    best_move, best_val = cand, v
        if best_move is None:
            break
        counts, score = best_move, best_val
        steps += 1

    mirrored = copies - counts
    winner = counts if true_value(counts) >= true_value(mirrored) else mirrored
    if stats is not None:
        stats["value_evals"] = stats.get("value_evals", 0) + evals
    return point(winner)


# ---------------------------------------------------------------------------
# packing-polytope driver


@dataclass(frozen=True)
class PackingConfig:
    steps: int | None = None  # default n^2
    beta_mode: str = "plain"  # "plain" (1/3) or "smoothed" (0.4 target)
    grid: float | None = None
    fine_grid: bool = False
    ls_epsilon: float = 1e-3
    max_iters: int = 100_000
    seed: int = 0
    samples: int | None = None

    def __post_init__(self):
        if self.beta_mode not in ("plain", "smoothed"):
            raise InvalidInputError(f"unknown beta mode {self.beta_mode!r}")
        if self.steps is not None and self.steps < 1:
            raise InvalidInputError("steps must be positive")

    @property
    def beta(self) -> float:
        return BETA_SMOOTHED if self.beta_mode == "smoothed" else BETA_PLAIN


def solve_packing(
    oracle: SetFunctionOracle,
    est: ExtensionEstimator,
    polytope: PackingPolytope,
    cfg: PackingConfig = PackingConfig(),
) -> SolveReport:
    """Five-candidate fractional maximization over a packing polytope.

    Candidates: the greedy endpoint, the greedy endpoint on the polytope
    restricted by y <= 1 - y1, the box search under y1, and the two
    residual peaks.  Every candidate lies in the polytope (residuals and
    the box search sit below y1 or y2, and the polytope is down-monotone).
    """
    t0 = time.perf_counter()
    n = oracle.n
    T = cfg.steps if cfg.steps is not None else n * n
    stats: dict = {}

    run1 = continuous_greedy(oracle, est, polytope, T, stats)
    y1 = run1.y_final
    box_point = box_local_search(
        oracle,
        est,
        y1,
        grid=cfg.grid,
        fine_grid=cfg.fine_grid,
        mode=cfg.beta_mode,
        epsilon=cfg.ls_epsilon,
        max_iters=cfg.max_iters,
        stats=stats,
    )
    residual_box = polytope.restrict_upper(np.maximum(1.0 - y1, 0.0))
    run2 = continuous_greedy(oracle, est, residual_box, T, stats)

    candidates = [
        ("greedy-1", y1),
        ("greedy-2", run2.y_final),
        ("box-search", box_point),
        ("residual-1", run1.best_residual_point),
        ("residual-2", run2.best_residual_point),
    ]
    scores = [est.value(oracle, p, stream=("select",)) for _, p in candidates]
    stats["value_evals"] = stats.get("value_evals", 0) + len(scores)
    best = int(np.argmax(scores))
    name, point = candidates[best]

    sample_counts = dict(stats)
    if est.backend == "monte-carlo":
        sample_counts["mc_samples_per_eval"] = est.samples_for(n)

    return SolveReport(
        algorithm="packing",
        value=float(scores[best]),
        guarantee=packing_guarantee(cfg.beta),
        regime="full",
        seed=cfg.seed,
        solution_point=point.copy(),
        sample_counts=sample_counts,
        wall_time_s=time.perf_counter() - t0,
        extra={
            "winner": name,
            "candidates": {nm: float(v) for (nm, _), v in zip(candidates, scores)},
            "steps": T,
            "beta": cfg.beta,
            "grid": cfg.grid if cfg.grid is not None else default_box_grid(n, cfg.fine_grid),
        },
    )


# ---------------------------------------------------------------------------
# fractional local search (grid coordinate ascent, two phases)


def fractional_local_search(
    oracle: SetFunctionOracle,
    est: ExtensionEstimator,
    polytope: PackingPolytope,
    grid: float = 0.25,
    *,
    epsilon: float = 1e-3,
    max_iters: int = 100_000,
    stats: dict | None = None,
) -> np.ndarray:
    """Best of two grid-local optima under single-coordinate +/- grid moves.

    The second run restricts the polytope to the box 1 - x of the first
    optimum, mirroring the two-phase structure the quarter-factor argument
    rests on.  Moves must stay feasible and beat the current value by the
    usual 1 + epsilon/n^4 factor.
    """
    n = oracle.n
    if not (0 < grid <= 1):
        raise InvalidInputError("grid step must lie in (0, 1]")
    evals = 0

    def value(x) -> float:
        nonlocal evals
        evals += 1
        return est.value(oracle, x, stream=("fls",))

    def phase(region: PackingPolytope):
        x = np.zeros(n)
        current = value(x)
        iters = 0
        while iters < max_iters:
            threshold = accept_threshold(current, n, epsilon)
            best, best_val = None, threshold
            for i in range(n):
                for direction in (1.0, -1.0):
                    xi = x[i] + direction * grid
                    if xi < -1e-12 or xi > 1 + 1e-12:
                        continue
                    cand = x.copy()
                    cand[i] = min(max(xi, 0.0), 1.0)
                    if not region.is_member(cand):
                        continue
                    v = value(cand)
                    if v > best_val:
                        best, best_val = cand, v
            if best is None:
                break
            x, current = best, best_val
            iters += 1
        return x, current

    x1, v1 = phase(polytope)
    x2, v2 = phase(polytope.restrict_upper(np.maximum(1.0 - x1, 0.0)))
    if stats is not None:
        stats["value_evals"] = stats.get("value_evals", 0) + evals
    return x1 if v1 >= v2 else x2


# ---------------------------------------------------------------------------
# multi-knapsack driver


@dataclass(frozen=True)
class KnapsackAlgoConfig:
    """Enumeration-plus-fractional driver parameters.

    ``epsilon`` must satisfy 0 < epsilon < 1/(4 k^2); ``enum_cap`` is the
    desk-scale stand-in for the 1/epsilon^4 seed-set size, so reports flag
    which guarantee regime applies.
    """

    epsilon: float
    num_knapsacks: int
    enum_cap: int = 2
    grid: float = 0.25
    ls_epsilon: float = 1e-3
    max_iters: int = 100_000
    seed: int = 0
    samples: int | None = None

    def __post_init__(self):
        k = self.num_knapsacks
        if k < 0:
            raise InvalidInputError("num_knapsacks must be non-negative")
        bound = 1.0 / (4.0 * k * k) if k >= 1 else 1.0
        if not (0 < self.epsilon < bound):
            raise InvalidInputError(
                f"epsilon must lie in (0, {bound:.6g}) for k={k} knapsacks"
            )
        if not (0 <= self.enum_cap <= 3):
            raise InvalidInputError("enum_cap must be between 0 and 3")
        if not (0 < self.grid <= 1):
            raise InvalidInputError("grid step must lie in (0, 1]")

    @property
    def full_enumeration_size(self) -> int:
        return int(math.ceil(1.0 / self.epsilon**4))


def _default_estimator(n: int, seed: int, samples: int | None) -> ExtensionEstimator:
    if samples is None and n <= 20:
        return ExtensionEstimator(backend="exact", seed=seed)
    return ExtensionEstimator(backend="monte-carlo", sample_count=samples, seed=seed)


def _usable_elements(K: KnapsackSystem, n: int):
    bad = set(K.infeasible_singletons)
    if bad:
        warnings.warn(
            f"dropping {len(bad)} element(s) that cannot be packed alone: {sorted(bad)}",
            stacklevel=3,
        )
    return [e for e in range(n) if e not in bad]


def _prune_leftovers(oracle, K: KnapsackSystem, seed_set, base_value, residual, epsilon, usable):
    """Elements outside the seed set that survive the marginal/weight cuts."""
    k = K.k
    kept = []
    for i in usable:
        if i in seed_set:
            continue
        if oracle.marginal(seed_set, i) > epsilon**4 * base_value + 1e-12:
            continue
        if k and np.any(K.weights[:, i] > k * epsilon**3 * residual + 1e-12):
            continue
        kept.append(i)
    return kept


def _residual_knapsacks(K: KnapsackSystem, kept, residual) -> KnapsackSystem:
    """Residual system over kept elements; exhausted rows must be untouchable."""
    if K.k == 0:
        return KnapsackSystem(np.zeros((0, len(kept))), np.zeros(0))
    live = residual > 1e-12
    weights = K.weights[:, kept]
    if not np.all(live):
        assert np.all(weights[~live] <= 1e-12), "pruning left weight in a full knapsack"
    return KnapsackSystem(weights[live], residual[live]) if live.any() else KnapsackSystem(
        np.zeros((0, len(kept))), np.zeros(0)
    )


def solve_knapsacks(
    oracle: SetFunctionOracle,
    knapsacks: KnapsackSystem,
    cfg: KnapsackAlgoConfig,
    est: ExtensionEstimator | None = None,
) -> SolveReport:
    """Enumerate small seed sets; per seed, prune, solve the residual
    fractional problem over the shrunk knapsack box, round independently,
    and keep the best packable candidate.  The output is always packable.
    """
    t0 = time.perf_counter()
    if knapsacks.n != oracle.n:
        raise InvalidInputError("knapsack system and oracle disagree on n")
    if cfg.num_knapsacks != knapsacks.k:
        raise InvalidInputError("config was validated for a different knapsack count")
    K = knapsacks.normalized()
    eps = cfg.epsilon
    est = est or _default_estimator(oracle.n, cfg.seed, cfg.samples)
    usable = _usable_elements(K, oracle.n)

    best_set: frozenset = frozenset()
    best_value = oracle.evaluate(best_set)
    stats: dict = {}
    enumerated = 0
    fractional_wins = 0

    for size in range(0, cfg.enum_cap + 1):
        for seed_set in itertools.combinations(usable, size):
            if not K.packable(seed_set):
                continue
            enumerated += 1
            base_value = oracle.evaluate(seed_set)
            if base_value > best_value:
                best_set, best_value = frozenset(seed_set), base_value

            residual = np.maximum(K.residual_capacities(seed_set), 0.0)
            kept = _prune_leftovers(oracle, K, set(seed_set), base_value, residual, eps, usable)
            if not kept:
                continue
            sub = ContractedOracle(oracle, seed_set, kept)
            region = KnapsackBoxPolytope(_residual_knapsacks(K, kept, residual), 1.0 - eps)
            x_star = fractional_local_search(
                sub,
                est,
                region,
                cfg.grid,
                epsilon=cfg.ls_epsilon,
                max_iters=cfg.max_iters,
                stats=stats,
            )
            rounded = independent_round(x_star, spawn_seed(cfg.seed, "round", enumerated))
            candidate = frozenset(seed_set) | {kept[i] for i in rounded.selected}
            if K.packable(candidate):
                v = oracle.evaluate(candidate)
                if v > best_value:
                    best_set, best_value = candidate, v
                    fractional_wins += 1

    assert K.packable(best_set), "driver produced an unpackable set"
    regime = (
        "full-guarantee"
        if cfg.enum_cap >= min(cfg.full_enumeration_size, oracle.n)
        else "heuristic-enumeration"
    )
    sample_counts = dict(stats)
    if est.backend == "monte-carlo":
        sample_counts["mc_samples_per_eval"] = est.samples_for(oracle.n)
    return SolveReport(
        algorithm="knapsacks",
        value=float(best_value),
        guarantee=knapsack_guarantee(eps),
        regime=regime,
        seed=cfg.seed,
        solution_set=best_set,
        sample_counts=sample_counts,
        wall_time_s=time.perf_counter() - t0,
        extra={
            "enumerated_seed_sets": enumerated,
            "fractional_improvements": fractional_wins,
            "epsilon": eps,
            "enum_cap": cfg.enum_cap,
        },
    )


def solve_matroid_knapsacks(
    oracle: SetFunctionOracle,
    matroid: Matroid,
    knapsacks: KnapsackSystem | None,
    cfg: KnapsackAlgoConfig,
    packing: PackingConfig | None = None,
    est: ExtensionEstimator | None = None,
) -> SolveReport:
    """One matroid plus knapsacks: the enumeration wrapper around the
    five-candidate packing driver, rounded by pipage on the contracted
    matroid.  The output is independent and packable.
    """
    t0 = time.perf_counter()
    n = oracle.n
    if matroid.n != n:
        raise InvalidInputError("matroid and oracle disagree on n")
    if knapsacks is None:
        knapsacks = KnapsackSystem(np.zeros((0, n)), np.zeros(0))
    if knapsacks.n != n:
        raise InvalidInputError("knapsack system and oracle disagree on n")
    K = knapsacks.normalized()
    eps = cfg.epsilon
    est = est or _default_estimator(n, cfg.seed, cfg.samples)
    packing = packing or PackingConfig(seed=cfg.seed, samples=cfg.samples)
    usable = _usable_elements(K, n)

    best_set: frozenset = frozenset()
    best_value = oracle.evaluate(best_set)
    enumerated = 0
    fractional_wins = 0
    stats: dict = {}

    for size in range(0, cfg.enum_cap + 1):
        for seed_set in itertools.combinations(usable, size):
            if not (matroid.is_independent(seed_set) and K.packable(seed_set)):
                continue
            enumerated += 1
            base_value = oracle.evaluate(seed_set)
            if base_value > best_value:
                best_set, best_value = frozenset(seed_set), base_value

            residual = np.maximum(K.residual_capacities(seed_set), 0.0)
            kept = _prune_leftovers(oracle, K, set(seed_set), base_value, residual, eps, usable)
            if not kept:
                continue
            sub = ContractedOracle(oracle, seed_set, kept)
            sub_matroid = matroid.contracted(seed_set, kept)
            parts = [MatroidPolytope(sub_matroid)]
            res_K = _residual_knapsacks(K, kept, residual)
            if res_K.k:
                parts.append(KnapsackBoxPolytope(res_K, 1.0 - eps))
            region = parts[0] if len(parts) == 1 else IntersectionPolytope(parts)

            report = solve_packing(sub, est, region, packing)
            for key, val in report.sample_counts.items():
                stats[key] = stats.get(key, 0) + val
            rounded = pipage_round(
                sub_matroid, report.solution_point, spawn_seed(cfg.seed, "round", enumerated)
            )
            candidate = frozenset(seed_set) | {kept[i] for i in rounded.selected}
            assert matroid.is_independent(candidate)
            if K.packable(candidate):
                v = oracle.evaluate(candidate)
                if v > best_value:
                    best_set, best_value = candidate, v
                    fractional_wins += 1

    assert matroid.is_independent(best_set) and K.packable(best_set)
    regime = (
        "full-guarantee"
        if cfg.enum_cap >= min(cfg.full_enumeration_size, n)
        else "heuristic-enumeration"
    )
    return SolveReport(
        algorithm="matroid-knapsacks",
        value=float(best_value),
        guarantee=packing_guarantee(packing.beta),
        regime=regime,
        seed=cfg.seed,
        solution_set=best_set,
        sample_counts=stats,
        wall_time_s=time.perf_counter() - t0,
        extra={
            "enumerated_seed_sets": enumerated,
            "fractional_improvements": fractional_wins,
            "epsilon": eps,
            "enum_cap": cfg.enum_cap,
            "beta": packing.beta,
        },
    )
