"""Randomized rounding of fractional points to feasible sets.

Independent rounding keeps each coordinate as an independent Bernoulli, so
E[f(R)] equals the multilinear extension exactly.  Pipage rounding walks
two fractional coordinates of a common cardinality constraint toward a
boundary with martingale probabilities; per-coordinate marginals are
preserved and E[f(R)] can only go up because F is convex along e_i - e_j.
Uniform and partition matroids are the supported targets (their tight
sets are the global constraint and the blocks); the free matroid
degenerates to independent rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .extension import as_point
from .polytopes import Matroid, MatroidPolytope
from .rng import substream

_SNAP = 1e-9


@dataclass(frozen=True)
class RoundingOutcome:
    selected: frozenset
    seed: int
    method: str


def independent_round(x, seed: int) -> RoundingOutcome:
    """Include element i independently with probability x_i."""
    x = np.asarray(x, dtype=float)
    x = as_point(x, len(x))
    rng = substream(seed, "independent-round")
    chosen = np.nonzero(rng.random(len(x)) < x)[0]
    return RoundingOutcome(frozenset(int(i) for i in chosen), seed, "independent")


def _round_block(x: np.ndarray, block: list, cap: int, rng) -> None:
    """Round the block's coordinates in place, keeping the block sum <= cap."""
    frac = [i for i in block if _SNAP < x[i] < 1 - _SNAP]
    while len(frac) >= 2:
        i, j = frac[0], frac[1]
        up = min(1 - x[i], x[j])      # move along +(e_i - e_j)
        down = min(x[i], 1 - x[j])    # move along -(e_i - e_j)
        if rng.random() * (up + down) < down:
            x[i] += up
            x[j] -= up
        else:
            x[i] -= down
            x[j] += down
        frac = [i for i in frac if _SNAP < x[i] < 1 - _SNAP]
    if frac:
        # a single leftover fractional coordinate: the integral part of the
        # block sums to at most cap - 1, so rounding up stays independent
        i = frac[0]
        x[i] = 1.0 if rng.random() < x[i] else 0.0
    for i in block:
        x[i] = 0.0 if x[i] < 0.5 else 1.0


def _matroid_blocks(matroid: Matroid) -> list:
    if matroid.kind == "uniform":
        return [(list(range(matroid.n)), matroid.rank)]
    if matroid.kind == "partition":
        return list(zip(matroid.blocks, matroid.capacities))
    return [([i], 1) for i in range(matroid.n)]


def pipage_round(matroid: Matroid, x, seed: int) -> RoundingOutcome:
    """Round x in the matroid polytope to a random independent set.

    Marginals are preserved coordinate by coordinate and the output is
    independent in the matroid on every run.
    """
    x = as_point(x, matroid.n)
    if not MatroidPolytope(matroid).is_member(x):
        raise InfeasibleError("point is outside the matroid polytope")
    x = x.copy()
    x[x < _SNAP] = 0.0
    x[x > 1 - _SNAP] = 1.0
    rng = substream(seed, "pipage-round")

    for block, cap in _matroid_blocks(matroid):
        _round_block(x, block, cap, rng)

    selected = frozenset(int(i) for i in np.nonzero(x > 0.5)[0])
    if not matroid.is_independent(selected):
        raise InfeasibleError("pipage produced a dependent set")  # unreachable guard
    return RoundingOutcome(selected, seed, "pipage")


def _sweep_block_many(x_block: np.ndarray, rng) -> None:
    """Vectorized left-to-right pairing of fractional coordinates, in place.

    Per run: keep the lowest-index fractional coordinate as a carrier, pair
    it with the next fractional coordinate, shift martingale mass, repeat;
    a single leftover is rounded alone.  Identical in distribution to the
    one-run routine, just batched across runs.
    """
    runs, width = x_block.shape
    pair_draws = rng.random((runs, width))
    single_draws = rng.random(runs)
    carrier = np.full(runs, -1, dtype=np.int64)
    rows = np.arange(runs)
    for j in range(width):
        xj = x_block[:, j]
        frac_j = (xj > _SNAP) & (xj < 1 - _SNAP)
        adopt = frac_j & (carrier < 0)
        carrier[adopt] = j
        act = frac_j & ~adopt & (carrier >= 0)
        if not np.any(act):
            continue
        r = rows[act]
        ci = carrier[act]
        xi = x_block[r, ci]
        xjv = xj[act]
        up = np.minimum(1.0 - xi, xjv)
        down = np.minimum(xi, 1.0 - xjv)
        take_up = pair_draws[act, j] * (up + down) < down
        delta = np.where(take_up, up, -down)
        xi_new = xi + delta
        xj_new = xjv - delta
        x_block[r, ci] = xi_new
        x_block[r, j] = xj_new
        xi_frac = (xi_new > _SNAP) & (xi_new < 1 - _SNAP)
        xj_frac = (xj_new > _SNAP) & (xj_new < 1 - _SNAP)
        carrier[act] = np.where(xi_frac, ci, np.where(xj_frac, j, -1))
    has = carrier >= 0
    if np.any(has):
        r = rows[has]
        ci = carrier[has]
        x_block[r, ci] = (single_draws[has] < x_block[r, ci]).astype(float)


def pipage_round_many(matroid: Matroid, x, seed: int, count: int) -> np.ndarray:
    """`count` seeded pipage roundings at once, as boolean membership rows.

    The statistical batteries need 10^5+ roundings; this shares one RNG
    stream across runs instead of spinning up a generator per seed.
    """
    x = as_point(x, matroid.n)
    if not MatroidPolytope(matroid).is_member(x):
        raise InfeasibleError("point is outside the matroid polytope")
    x = x.copy()
    x[x < _SNAP] = 0.0
    x[x > 1 - _SNAP] = 1.0
    rng = substream(seed, "pipage-batch")

    if matroid.kind == "free":
        return rng.random((count, matroid.n)) < x

    state = np.tile(x, (count, 1))
    for block, _cap in _matroid_blocks(matroid):
        view = state[:, block]
        _sweep_block_many(view, rng)
        state[:, block] = view
    out = state > 0.5
    assert np.all(matroid.independent_masks(out))
    return out
