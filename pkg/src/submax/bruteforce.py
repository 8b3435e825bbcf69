"""Independent brute-force optima: the yardstick every ratio is measured by.

Subset enumeration is capped at n = 16 and grid search at 10^7 candidate
points; beyond those the functions refuse with the explicit bound rather
than silently degrade.  Witnesses are lexicographically least among the
maximizers, which keeps reports byte-stable.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import SizeLimitError
from .extension import exact_values_batch
from .oracle import SetFunctionOracle
from .polytopes import KnapsackSystem, Matroid, PackingPolytope

SUBSET_LIMIT_N = 16
GRID_LIMIT_POINTS = 10_000_000

_CHUNK = 1 << 15


def _check_subset_limit(n: int) -> None:
    if n > SUBSET_LIMIT_N:
        raise SizeLimitError(f"subset enumeration requires n <= {SUBSET_LIMIT_N}, got {n}")


def _mask_bits(masks: np.ndarray, n: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(n)) & 1).astype(bool)


def _best_over_masks(oracle: SetFunctionOracle, keep) -> tuple:
    """Max of f over bitmasks passing `keep`; first maximizer in mask order.

    Mask order is value order of the little-endian bitmask, so the returned
    witness is the lexicographically least maximizer under that encoding.
    """
    n = oracle.n
    size = 1 << n
    best_val, best_mask = -np.inf, None
    for lo in range(0, size, _CHUNK):
        masks = np.arange(lo, min(lo + _CHUNK, size), dtype=np.int64)
        rows = _mask_bits(masks, n)
        ok = keep(masks, rows)
        if not np.any(ok):
            continue
        vals = oracle.evaluate_masks(rows[ok])
        local = int(np.argmax(vals))
        if vals[local] > best_val:
            best_val = float(vals[local])
            best_mask = int(masks[ok][local])
    if best_mask is None:
        raise SizeLimitError("no feasible subset under the given constraint")
    witness = frozenset(i for i in range(n) if (best_mask >> i) & 1)
    return best_val, witness


def brute_force_exact_cardinality(oracle: SetFunctionOracle, k: int) -> tuple:
    _check_subset_limit(oracle.n)
    n = oracle.n
    best_val, best_set = -np.inf, None
    for combo in itertools.combinations(range(n), k):
        v = oracle.evaluate(combo)
        if v > best_val:
            best_val, best_set = v, frozenset(combo)
    return float(best_val), best_set


def brute_force_packable(oracle: SetFunctionOracle, knapsacks: KnapsackSystem) -> tuple:
    _check_subset_limit(oracle.n)
    return _best_over_masks(oracle, lambda masks, rows: knapsacks.packable_masks(rows))


def brute_force_matroid_knapsacks(
    oracle: SetFunctionOracle, matroid: Matroid, knapsacks: KnapsackSystem | None
) -> tuple:
    _check_subset_limit(oracle.n)

    def keep(masks, rows):
        ok = matroid.independent_masks(rows)
        if knapsacks is not None and knapsacks.k:
            ok &= knapsacks.packable_masks(rows)
        return ok

    return _best_over_masks(oracle, keep)


def grid_axis(resolution: float) -> np.ndarray:
    steps = int(round(1.0 / resolution))
    return np.arange(steps + 1) / steps


def brute_force_grid(
    oracle: SetFunctionOracle, polytope: PackingPolytope, resolution: float
) -> tuple:
    """Exact F maximized over the resolution-grid points inside the polytope."""
    n = oracle.n
    axis = grid_axis(resolution)
    m = len(axis)
    total = m**n
    if total > GRID_LIMIT_POINTS:
        raise SizeLimitError(
            f"grid search needs at most {GRID_LIMIT_POINTS} points, got {m}^{n} = {total}"
        )
    best_val, best_point = -np.inf, None
    powers = m ** np.arange(n)
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        digits = (idx[:, None] // powers) % m
        points = axis[digits]
        ok = polytope.contains_batch(points)
        if not np.any(ok):
            continue
        vals = exact_values_batch(oracle, points[ok])
        local = int(np.argmax(vals))
        if vals[local] > best_val:
            best_val = float(vals[local])
            best_point = points[ok][local].copy()
    if best_point is None:
        raise SizeLimitError("no grid point inside the polytope")
    return best_val, best_point


def brute_force(oracle: SetFunctionOracle, constraint) -> tuple:
    """Dispatch on a parsed constraint; returns (optimum value, witness)."""
    k = constraint.cardinality_k
    if k is not None:
        return brute_force_exact_cardinality(oracle, k)
    matroid = constraint.matroid
    knapsacks = constraint.knapsacks
    if matroid is not None:
        return brute_force_matroid_knapsacks(oracle, matroid, knapsacks)
    if knapsacks is not None:
        return brute_force_packable(oracle, knapsacks)
    raise SizeLimitError("constraint carries nothing to optimize over")
