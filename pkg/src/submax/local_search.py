"""Set-valued local-search solvers.

* swap local search at fixed cardinality k (exchange one in, one out),
* the disjoint second-set routine on the leftover ground,
* the exact-cardinality driver that returns the better of the two sets
  (complementing the instance when k > n/2),
* unconstrained add/delete local search with a complement comparison
  (deterministic 1/3 guarantee) and an optional smoothed mode that judges
  moves on a blended fractional point.

Moves are only accepted when they improve the value by a factor of at
least 1 + epsilon/n^4, which bounds the number of accepted steps; the
slack this introduces is surfaced in every downstream guarantee.  Ties
break toward the lowest element index everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InvalidInputError
from .oracle import ComplementOracle, SetFunctionOracle, as_subset

_ZERO = 1e-12


@dataclass(frozen=True)
class LocalSearchConfig:
    epsilon: float = 1e-3
    max_iters: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise InvalidInputError("epsilon must lie in (0, 1)")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be positive")


@dataclass(frozen=True)
class CardinalitySolveReport:
    """Both candidate sets, the winner, and the swap counts that produced them."""

    s1: frozenset
    s2: frozenset
    winner: frozenset
    value_s1: float
    value_s2: float
    iterations: tuple
    complemented: bool = False

    @property
    def value(self) -> float:
        return max(self.value_s1, self.value_s2)


def accept_threshold(current: float, n: int, epsilon: float) -> float:
    if current <= _ZERO:
        return _ZERO
    return current * (1.0 + epsilon / n**4)


def _greedy_fill(oracle: SetFunctionOracle, ground: list, k: int) -> set:
    chosen: set = set()
    value = oracle.evaluate(chosen)
    for _ in range(k):
        best, best_val = None, None
        for y in ground:
            if y in chosen:
                continue
            v = oracle.evaluate(chosen | {y})
            if best is None or v > best_val:
                best, best_val = y, v
        chosen.add(best)
        value = best_val
    return chosen


def _swap_local_search(oracle, ground: list, k: int, cfg: LocalSearchConfig):
    """Greedy fill then best-improving swaps; returns (set, swap count)."""
    n = oracle.n
    current = _greedy_fill(oracle, ground, k)
    value = oracle.evaluate(current)
    outside = [y for y in ground if y not in current]
    swaps = 0
    while swaps < cfg.max_iters:
        threshold = accept_threshold(value, n, cfg.epsilon)
        best = None
        best_val = threshold
        for x in sorted(current):
            for y in outside:
                v = oracle.evaluate((current - {x}) | {y})
                if v > best_val:
                    best, best_val = (x, y), v
        if best is None:
            break
        x, y = best
        current = (current - {x}) | {y}
        outside = [z for z in ground if z not in current]
        value = best_val
        swaps += 1
    return frozenset(current), swaps


def local_search_cardinality(oracle, ground, k: int, cfg: LocalSearchConfig = LocalSearchConfig()) -> frozenset:
    """A size-k swap-stable set within `ground`.

    The returned set S satisfies, up to the accept-rule slack,
    2 f(S) >= f(S | C) + f(S & C) for every C of size exactly k in the
    ground, and 2 f(S) >= f(S | C) for every smaller C; those are the two
    facts the exact-cardinality driver consumes.
    """
    ground = sorted(as_subset(ground, oracle.n))
    if k > len(ground):
        raise InfeasibleError(f"cannot pick {k} elements from a ground of {len(ground)}")
    if k < 0:
        raise InvalidInputError("k must be non-negative")
    s, _ = _swap_local_search(oracle, ground, k, cfg)
    return s


def second_disjoint_set(oracle, forbidden, k: int, cfg: LocalSearchConfig = LocalSearchConfig()) -> frozenset:
    """Size-k swap-stable set avoiding `forbidden` entirely."""
    forbidden = as_subset(forbidden, oracle.n)
    ground = [e for e in range(oracle.n) if e not in forbidden]
    if k > len(ground):
        raise InfeasibleError("not enough elements outside the forbidden set")
    s, _ = _swap_local_search(oracle, ground, k, cfg)
    return s


def solve_exact_cardinality(oracle, k: int, cfg: LocalSearchConfig = LocalSearchConfig()) -> CardinalitySolveReport:
    """Two-candidate solver for max f(S) over |S| = k; 0.25-ish guarantee.

    When k > n/2 the instance is complemented (g(S) = f(X \\ S), k' = n - k)
    and the candidate sets are complemented back.
    """
    n = oracle.n
    if not (1 <= k <= n):
        raise InvalidInputError(f"k must be in [1, {n}]")
    if 2 * k <= n:
        ground = list(range(n))
        s1, it1 = _swap_local_search(oracle, ground, k, cfg)
        rest = [e for e in ground if e not in s1]
        s2, it2 = _swap_local_search(oracle, rest, k, cfg)
        v1, v2 = oracle.evaluate(s1), oracle.evaluate(s2)
        winner = s1 if v1 >= v2 else s2
        return CardinalitySolveReport(s1, s2, winner, v1, v2, (it1, it2), False)

    flipped = ComplementOracle(oracle)
    inner = solve_exact_cardinality(flipped, n - k, cfg) if n > k else None
    full = frozenset(range(n))
    if inner is None:
        # k == n: the only feasible set is the whole ground set
        v = oracle.evaluate(full)
        return CardinalitySolveReport(full, full, full, v, v, (0, 0), True)
    s1 = full - inner.s1
    s2 = full - inner.s2
    winner = s1 if inner.value_s1 >= inner.value_s2 else s2
    return CardinalitySolveReport(
        s1, s2, winner, inner.value_s1, inner.value_s2, inner.iterations, True
    )


def unconstrained_local_search(
    oracle,
    ground=None,
    cfg: LocalSearchConfig = LocalSearchConfig(),
    mode: str = "plain",
    estimator=None,
    blend=(0.9, 0.1),
) -> frozenset:
    """Add/delete local search returning the better of the optimum and its
    ground-complement.

    The plain mode guarantees a third of the unconstrained optimum (minus the
    accept-rule slack).  The smoothed mode scores moves on the multilinear
    extension at the blended point (`blend[0]` on the set, `blend[1]` off it),
    chasing the stronger 0.4 ratio; the final comparison is still on f.
    """
    if ground is None:
        ground = range(oracle.n)
    ground = sorted(as_subset(ground, oracle.n))
    if mode not in ("plain", "smoothed"):
        raise InvalidInputError(f"unknown mode {mode!r}")
    if mode == "smoothed" and estimator is None:
        raise InvalidInputError("smoothed mode needs an extension estimator")

    def score(subset: set) -> float:
        if mode == "plain":
            return oracle.evaluate(subset)
        z = np.zeros(oracle.n)
        z[ground] = blend[1]
        if subset:
            z[sorted(subset)] = blend[0]
        return estimator.value(oracle, z, stream=("sls",))

    # start from the better of the empty set and the best singleton
    current: set = set()
    cur_score = score(current)
    for y in ground:
        v = score({y})
        if v > cur_score:
            current, cur_score = {y}, v

    n = oracle.n
    steps = 0
    while steps < cfg.max_iters:
        threshold = accept_threshold(cur_score, n, cfg.epsilon)
        best_move, best_val = None, threshold
        for y in ground:
            cand = current - {y} if y in current else current | {y}
            v = score(cand)
            if v > best_val:
                best_move, best_val = y, v
        if best_move is None:
            break
        if best_move in current:
            current = current - {best_move}
        else:
            current = current | {best_move}
        cur_score = best_val
        steps += 1

    complement = set(ground) - current
    if oracle.evaluate(complement) > oracle.evaluate(current):
        return frozenset(complement)
    return frozenset(current)
