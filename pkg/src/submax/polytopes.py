"""Matroids, knapsack systems, and down-monotone packing polytopes.

Uniform, partition, and free matroids have closed-form rank constraints,
so membership and the greedy linear-maximization oracle are exact.
Knapsack boxes and intersections go through the built-in dense simplex.
Every polytope here contains the origin and is down-monotone, and all of
them expose their constraints as rows (A, b) so the LP assembly is shared.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import simplex
from .errors import InfeasibleError, InvalidInputError
from .oracle import as_subset

_TOL = 1e-9

# Row budget for the dense simplex (ground set size + constraint rows).
LP_DIMENSION_CAP = 200


class Matroid:
    """Uniform, partition, or free matroid with closed-form independence."""

    def __init__(self, kind: str, n: int, rank: int | None = None, blocks=None, capacities=None):
        n = int(n)
        if n < 1:
            raise InvalidInputError("matroid needs a non-empty ground set")
        self.kind = kind
        self.n = n
        if kind == "uniform":
            rank = int(rank)
            if rank < 0 or rank > n:
                raise InvalidInputError("uniform rank must be in [0, n]")
            self.rank = rank
            self.blocks = None
            self.capacities = None
        elif kind == "partition":
            blocks = [sorted(as_subset(b, n)) for b in blocks]
            seen = sorted(e for b in blocks for e in b)
            if seen != list(range(n)):
                raise InvalidInputError("blocks must partition the ground set")
            capacities = [int(c) for c in capacities]
            if len(capacities) != len(blocks) or any(c < 0 for c in capacities):
                raise InvalidInputError("need one non-negative capacity per block")
            self.blocks = blocks
            self.capacities = capacities
            self.rank = None
            self._block_of = np.empty(n, dtype=np.int64)
            for bi, block in enumerate(blocks):
                self._block_of[block] = bi
        elif kind == "free":
            self.rank = None
            self.blocks = None
            self.capacities = None
        else:
            raise InvalidInputError(f"unknown matroid kind {kind!r}")

    @classmethod
    def uniform(cls, n: int, rank: int) -> "Matroid":
        return cls("uniform", n, rank=rank)

    @classmethod
    def partition(cls, n: int, blocks, capacities) -> "Matroid":
        return cls("partition", n, blocks=blocks, capacities=capacities)

    @classmethod
    def free(cls, n: int) -> "Matroid":
        return cls("free", n)

    def is_independent(self, subset) -> bool:
        s = as_subset(subset, self.n)
        if self.kind == "uniform":
            return len(s) <= self.rank
        if self.kind == "partition":
            counts = [0] * len(self.blocks)
            for e in s:
                counts[self._block_of[e]] += 1
            return all(c <= cap for c, cap in zip(counts, self.capacities))
        return True

    def independent_masks(self, masks: np.ndarray) -> np.ndarray:
        """Vectorized independence check over boolean membership rows."""
        if self.kind == "uniform":
            return masks.sum(axis=1) <= self.rank
        if self.kind == "partition":
            ok = np.ones(masks.shape[0], dtype=bool)
            for block, cap in zip(self.blocks, self.capacities):
                ok &= masks[:, block].sum(axis=1) <= cap
            return ok
        return np.ones(masks.shape[0], dtype=bool)

    def contracted(self, pinned, kept) -> "Matroid":
        """The matroid after forcing `pinned` in, on the `kept` elements.

        `kept` ids are renumbered 0..len(kept)-1 in sorted order, matching
        the contracted-oracle convention.  `pinned` must be independent.
        """
        pinned = as_subset(pinned, self.n)
        kept = sorted(as_subset(kept, self.n))
        if not self.is_independent(pinned):
            raise InfeasibleError("cannot contract by a dependent set")
        m = len(kept)
        if self.kind == "uniform":
            return Matroid.uniform(max(m, 1), max(self.rank - len(pinned), 0))
        if self.kind == "partition":
            old_to_new = {e: i for i, e in enumerate(kept)}
            blocks, caps = [], []
            leftovers = []
            for block, cap in zip(self.blocks, self.capacities):
                newblock = [old_to_new[e] for e in block if e in old_to_new]
                used = sum(1 for e in block if e in pinned)
                if newblock:
                    blocks.append(newblock)
                    caps.append(max(cap - used, 0))
            if not blocks:
                return Matroid.free(max(m, 1))
            covered = sorted(e for b in blocks for e in b)
            # elements can only disappear, never appear, so blocks still partition
            assert covered == list(range(m)), leftovers
            return Matroid.partition(m, blocks, caps)
        return Matroid.free(max(m, 1))

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "n": self.n, "rank": self.rank}
        if self.kind == "partition":
            return {
                "kind": "partition",
                "n": self.n,
                "blocks": self.blocks,
                "capacities": self.capacities,
            }
        return {"kind": "free", "n": self.n}

    @classmethod
    def from_dict(cls, data: dict) -> "Matroid":
        kind = data["kind"]
        if kind == "uniform":
            return cls.uniform(data["n"], data["rank"])
        if kind == "partition":
            return cls.partition(data["n"], data["blocks"], data["capacities"])
        if kind == "free":
            return cls.free(data["n"])
        raise InvalidInputError(f"unknown matroid kind {kind!r}")


class KnapsackSystem:
    """k weight vectors with positive capacities; feasibility = packable."""

    def __init__(self, weights, capacities):
        weights = np.atleast_2d(np.asarray(weights, dtype=float))
        capacities = np.asarray(capacities, dtype=float).ravel()
        if weights.shape[0] != len(capacities):
            raise InvalidInputError("one capacity per weight vector required")
        if np.any(weights < 0):
            raise InvalidInputError("knapsack weights must be non-negative")
        if len(capacities) and np.any(capacities <= 0):
            raise InvalidInputError("capacities must be positive")
        self.weights = weights
        self.capacities = capacities
        self.k = len(capacities)
        self.n = weights.shape[1] if weights.size else int(weights.shape[1])

    @property
    def infeasible_singletons(self) -> tuple:
        """Elements that violate some knapsack all by themselves."""
        if self.k == 0:
            return ()
        bad = np.any(self.weights > self.capacities[:, None] + _TOL, axis=0)
        return tuple(int(i) for i in np.nonzero(bad)[0])

    def packable(self, subset) -> bool:
        s = as_subset(subset, self.n)
        if self.k == 0 or not s:
            return True
        load = self.weights[:, sorted(s)].sum(axis=1)
        return bool(np.all(load <= self.capacities + _TOL))

    def packable_masks(self, masks: np.ndarray) -> np.ndarray:
        if self.k == 0:
            return np.ones(masks.shape[0], dtype=bool)
        loads = masks.astype(float) @ self.weights.T
        return np.all(loads <= self.capacities + _TOL, axis=1)

    def normalized(self) -> "KnapsackSystem":
        """Equivalent system with every capacity rescaled to 1."""
        if self.k == 0:
            return self
        return KnapsackSystem(self.weights / self.capacities[:, None], np.ones(self.k))

    def restricted(self, kept) -> "KnapsackSystem":
        kept = sorted(as_subset(kept, self.n))
        return KnapsackSystem(self.weights[:, kept], self.capacities)

    def residual_capacities(self, subset) -> np.ndarray:
        s = sorted(as_subset(subset, self.n))
        if self.k == 0:
            return self.capacities.copy()
        used = self.weights[:, s].sum(axis=1) if s else np.zeros(self.k)
        return self.capacities - used

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "capacities": self.capacities.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "KnapsackSystem":
        return cls(data["weights"], data["capacities"])


# ---------------------------------------------------------------------------
# packing polytopes


class PackingPolytope:
    """Down-monotone polytope in [0,1]^n with exact membership and an LP oracle."""

    def __init__(self, n: int):
        self.n = int(n)

    def rows(self):
        """Constraint rows (A, b) excluding the ambient [0,1] box."""
        raise NotImplementedError

    def contains_batch(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        ok = np.all(points >= -_TOL, axis=1) & np.all(points <= 1 + _TOL, axis=1)
        A, b = self.rows()
        if len(b):
            ok &= np.all(points @ A.T <= b + _TOL, axis=1)
        return ok

    def is_member(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise InvalidInputError(f"expected a length-{self.n} vector")
        return bool(self.contains_batch(x[None, :])[0])

    def maximize_linear(self, c) -> np.ndarray:
        """A vertex maximizing c.x; coordinates with c_i <= 0 are pinned to 0."""
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n,):
            raise InvalidInputError(f"expected a length-{self.n} objective")
        return self._lp_maximize(c)

    def _lp_maximize(self, c: np.ndarray) -> np.ndarray:
        active = np.nonzero(c > 0)[0]
        x = np.zeros(self.n)
        if len(active) == 0:
            return x
        A, b = self.rows()
        rows_a = [A[:, active]] if len(b) else []
        rows_b = [b] if len(b) else []
        rows_a.append(np.eye(len(active)))
        rows_b.append(np.ones(len(active)))
        A_full = np.vstack(rows_a)
        b_full = np.concatenate(rows_b)
        if self.n + len(b_full) - len(active) > LP_DIMENSION_CAP:
            raise InvalidInputError(
                f"LP too large: n + rows exceeds the cap of {LP_DIMENSION_CAP}"
            )
        xa, _ = simplex.maximize(c[active], A_full, b_full)
        x[active] = np.minimum(xa, 1.0)
        return x

    def restrict_upper(self, upper) -> "PackingPolytope":
        """Intersection with the box {y : y_i <= upper_i}; stays down-monotone."""
        upper = np.asarray(upper, dtype=float)
        if upper.shape != (self.n,):
            raise InvalidInputError("upper-bound vector has the wrong length")
        if np.any(upper < -_TOL) or np.any(upper > 1 + _TOL):
            raise InvalidInputError("upper bounds must lie in [0, 1]")
        return IntersectionPolytope([self, BoxPolytope(np.clip(upper, 0.0, 1.0))])


class BoxPolytope(PackingPolytope):
    """{x : 0 <= x <= u}."""

    def __init__(self, upper):
        upper = np.asarray(upper, dtype=float)
        super().__init__(len(upper))
        if np.any(upper < 0) or np.any(upper > 1 + _TOL):
            raise InvalidInputError("box bounds must lie in [0, 1]")
        self.upper = np.clip(upper, 0.0, 1.0)

    def rows(self):
        return np.eye(self.n), self.upper.copy()

    def contains_batch(self, points):
        points = np.asarray(points, dtype=float)
        return np.all(points >= -_TOL, axis=1) & np.all(points <= self.upper + _TOL, axis=1)

    def maximize_linear(self, c):
        c = np.asarray(c, dtype=float)
        x = np.zeros(self.n)
        x[c > 0] = self.upper[c > 0]
        return x

    def restrict_upper(self, upper):
        upper = np.asarray(upper, dtype=float)
        return BoxPolytope(np.minimum(self.upper, np.clip(upper, 0.0, 1.0)))


class MatroidPolytope(PackingPolytope):
    """Rank-constraint polytope of a uniform/partition/free matroid."""

    def __init__(self, matroid: Matroid):
        super().__init__(matroid.n)
        self.matroid = matroid

    def rows(self):
        m = self.matroid
        if m.kind == "uniform":
            return np.ones((1, self.n)), np.array([float(m.rank)])
        if m.kind == "partition":
            A = np.zeros((len(m.blocks), self.n))
            for bi, block in enumerate(m.blocks):
                A[bi, block] = 1.0
            return A, np.asarray(m.capacities, dtype=float)
        return np.zeros((0, self.n)), np.zeros(0)

    def maximize_linear(self, c):
        # greedy on descending positive weights; ties go to the lower index
        c = np.asarray(c, dtype=float)
        x = np.zeros(self.n)
        order = np.lexsort((np.arange(self.n), -c))
        m = self.matroid
        if m.kind == "uniform":
            budget = m.rank
            for i in order:
                if budget == 0:
                    break
                if c[i] > 0:
                    x[i] = 1.0
                    budget -= 1
        elif m.kind == "partition":
            budgets = list(m.capacities)
            for i in order:
                bi = int(m._block_of[i])
                if c[i] > 0 and budgets[bi] > 0:
                    x[i] = 1.0
                    budgets[bi] -= 1
        else:
            x[c > 0] = 1.0
        return x


class KnapsackBoxPolytope(PackingPolytope):
    """{x in [0,1]^n : W x <= scale * C} for a knapsack system."""

    def __init__(self, knapsacks: KnapsackSystem, scale: float = 1.0):
        super().__init__(knapsacks.n)
        if not (0 < scale <= 1):
            raise InvalidInputError("scale must lie in (0, 1]")
        self.knapsacks = knapsacks
        self.scale = float(scale)

    def rows(self):
        K = self.knapsacks
        if K.k == 0:
            return np.zeros((0, self.n)), np.zeros(0)
        return K.weights.copy(), self.scale * K.capacities


class IntersectionPolytope(PackingPolytope):
    """Intersection of packing polytopes; nested intersections are flattened
    and box parts are merged into a single tightest box."""

    def __init__(self, parts):
        flat = []
        box = None
        for part in parts:
            sub = part.parts if isinstance(part, IntersectionPolytope) else [part]
            for p in sub:
                if isinstance(p, BoxPolytope):
                    box = p if box is None else BoxPolytope(np.minimum(box.upper, p.upper))
                else:
                    flat.append(p)
        if box is not None:
            flat.append(box)
        if not flat:
            raise InvalidInputError("intersection needs at least one polytope")
        n = flat[0].n
        if any(p.n != n for p in flat):
            raise InvalidInputError("intersected polytopes disagree on dimension")
        super().__init__(n)
        self.parts = flat

    def rows(self):
        As, bs = [], []
        for p in self.parts:
            A, b = p.rows()
            if len(b):
                As.append(A)
                bs.append(b)
        if not As:
            return np.zeros((0, self.n)), np.zeros(0)
        return np.vstack(As), np.concatenate(bs)

    def contains_batch(self, points):
        points = np.asarray(points, dtype=float)
        ok = np.all(points >= -_TOL, axis=1) & np.all(points <= 1 + _TOL, axis=1)
        for p in self.parts:
            ok &= p.contains_batch(points)
        return ok

    def maximize_linear(self, c):
        if len(self.parts) == 1:
            return self.parts[0].maximize_linear(np.asarray(c, dtype=float))
        return self._lp_maximize(np.asarray(c, dtype=float))


def restrict_upper(polytope: PackingPolytope, upper) -> PackingPolytope:
    return polytope.restrict_upper(upper)


def sample_members(polytope: PackingPolytope, count: int, rng) -> np.ndarray:
    """Random members, by scaling random directions back inside (down-monotone)."""
    A, b = polytope.rows()
    out = np.empty((count, polytope.n))
    u = rng.random((count, polytope.n))
    shrink = rng.random((count, 1))
    if len(b) == 0:
        return u * shrink
    loads = u @ A.T
    with np.errstate(divide="ignore"):
        limits = np.where(loads > _TOL, b / np.maximum(loads, _TOL), np.inf)
    t = np.minimum(limits.min(axis=1, keepdims=True), 1.0)
    return u * t * shrink


# ---------------------------------------------------------------------------
# constraint files


def polytope_from_dict(data: dict, n: int | None = None) -> PackingPolytope:
    if "matroid" in data:
        m = dict(data["matroid"])
        if "n" not in m and n is not None:
            m["n"] = n
        return MatroidPolytope(Matroid.from_dict(m))
    if "knapsacks" in data:
        scale = float(data.get("scale", 1.0))
        return KnapsackBoxPolytope(KnapsackSystem.from_dict(data["knapsacks"]), scale)
    if "box" in data:
        return BoxPolytope(np.asarray(data["box"], dtype=float))
    if "intersection" in data:
        return IntersectionPolytope(
            [polytope_from_dict(part, n) for part in data["intersection"]]
        )
    raise InvalidInputError("constraint dict has no recognized polytope key")


def load_constraint(path) -> dict:
    with open(Path(path), "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_constraint(path, data: dict) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True)
        fh.write("\n")
