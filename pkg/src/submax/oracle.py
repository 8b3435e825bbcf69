"""Non-negative submodular set functions on ground sets {0, ..., n-1}.

Built-in families: weighted graph cuts, weighted coverage, and explicit
2^n value tables.  Derived views (complement, contraction) expose the same
interface so the solvers never special-case them.  Oracles are immutable
after construction; batch evaluation takes a boolean membership matrix,
which is what the Monte Carlo machinery feeds them.

Table indexing convention: subset S maps to the bitmask with bit i set
iff element i is in S (little-endian element order).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import (
    BackendLimitError,
    InvalidElementError,
    InvalidInputError,
    PreconditionError,
)
from .rng import substream

# 2^20 subsets is the ceiling for full enumeration; beyond that the Monte
# Carlo backend is mandatory.
EXACT_ENUMERATION_LIMIT = 20

# Explicit tables get an exhaustive submodularity check up to this size,
# a sampled one above it.
TABLE_EXACT_CHECK_LIMIT = 12

_CHUNK = 1 << 14


def as_subset(subset, n: int) -> frozenset:
    """Validate and freeze a subset of {0, ..., n-1}."""
    out = frozenset(int(e) for e in subset)
    for e in out:
        if e < 0 or e >= n:
            raise InvalidElementError(f"element {e} outside ground set of size {n}")
    return out


def _bit_matrix(lo: int, hi: int, n: int) -> np.ndarray:
    """Membership rows for bitmasks lo..hi-1."""
    masks = np.arange(lo, hi, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(bool)


class SetFunctionOracle:
    """Base class: a non-negative set function with submodular structure."""

    kind = "abstract"

    def __init__(self, n: int):
        n = int(n)
        if n < 1:
            raise InvalidInputError("ground set must have at least one element")
        self.n = n
        self._table = None

    def evaluate_masks(self, masks: np.ndarray) -> np.ndarray:
        """Values for a batch of subsets given as boolean rows."""
        raise NotImplementedError

    def _mask_row(self, subset) -> np.ndarray:
        row = np.zeros(self.n, dtype=bool)
        s = as_subset(subset, self.n)
        if s:
            row[list(s)] = True
        return row

    def evaluate(self, subset) -> float:
        return float(self.evaluate_masks(self._mask_row(subset)[None, :])[0])

    def marginal(self, subset, element: int) -> float:
        """f(S + element) - f(S).  May be negative for non-monotone f."""
        s = as_subset(subset, self.n)
        element = int(element)
        if element < 0 or element >= self.n:
            raise InvalidElementError(f"element {element} outside ground set")
        if element in s:
            raise PreconditionError(f"element {element} already in the set")
        return self.evaluate(s | {element}) - self.evaluate(s)

    def value_table(self) -> np.ndarray:
        """All 2^n values, cached.  Only for n <= EXACT_ENUMERATION_LIMIT."""
        if self._table is None:
            if self.n > EXACT_ENUMERATION_LIMIT:
                raise BackendLimitError(
                    f"full enumeration needs n <= {EXACT_ENUMERATION_LIMIT}, got {self.n}"
                )
            size = 1 << self.n
            table = np.empty(size)
            for lo in range(0, size, _CHUNK):
                hi = min(lo + _CHUNK, size)
                table[lo:hi] = self.evaluate_masks(_bit_matrix(lo, hi, self.n))
            self._table = table
        return self._table


class GraphCutOracle(SetFunctionOracle):
    """Weighted cut function: total weight of edges with one endpoint in S."""

    kind = "graph-cut"

    def __init__(self, n: int, edges):
        super().__init__(n)
        us, vs, ws = [], [], []
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if u < 0 or u >= n or v < 0 or v >= n:
                raise InvalidElementError(f"edge ({u},{v}) outside ground set")
            if u == v:
                raise InvalidInputError("self-loops are not allowed")
            if w < 0:
                raise InvalidInputError("edge weights must be non-negative")
            us.append(u)
            vs.append(v)
            ws.append(w)
        self._u = np.array(us, dtype=np.int64)
        self._v = np.array(vs, dtype=np.int64)
        self._w = np.array(ws)

    @property
    def edges(self):
        return [(int(u), int(v), float(w)) for u, v, w in zip(self._u, self._v, self._w)]

    def evaluate_masks(self, masks: np.ndarray) -> np.ndarray:
        if len(self._w) == 0:
            return np.zeros(masks.shape[0])
        crossing = masks[:, self._u] != masks[:, self._v]
        return crossing.astype(float) @ self._w


class CoverageOracle(SetFunctionOracle):
    """Weighted coverage: weight of universe items covered by union of sets."""

    kind = "weighted-coverage"

    def __init__(self, universe_weights, cover_sets):
        super().__init__(len(cover_sets))
        self._uw = np.asarray(universe_weights, dtype=float)
        if self._uw.ndim != 1:
            raise InvalidInputError("universe weights must be a flat list")
        if np.any(self._uw < 0):
            raise InvalidInputError("universe weights must be non-negative")
        m = len(self._uw)
        cover = np.zeros((self.n, m), dtype=bool)
        for i, items in enumerate(cover_sets):
            for item in items:
                item = int(item)
                if item < 0 or item >= m:
                    raise InvalidInputError(f"universe item {item} out of range")
                cover[i, item] = True
        self._cover = cover

    @property
    def universe_weights(self):
        return self._uw.copy()

    @property
    def cover_sets(self):
        return [sorted(np.nonzero(row)[0].tolist()) for row in self._cover]

    def evaluate_masks(self, masks: np.ndarray) -> np.ndarray:
        covered = masks.astype(np.int64) @ self._cover.astype(np.int64) > 0
        return covered @ self._uw


class TableOracle(SetFunctionOracle):
    """Explicit 2^n value table, validated for non-negativity/submodularity."""

    kind = "explicit-table"

    def __init__(self, n: int, table, validate: bool = True, seed: int = 0):
        super().__init__(n)
        if n > EXACT_ENUMERATION_LIMIT:
            raise BackendLimitError(f"explicit tables require n <= {EXACT_ENUMERATION_LIMIT}")
        table = np.asarray(table, dtype=float)
        if table.shape != (1 << n,):
            raise InvalidInputError(f"table must have exactly 2^{n} entries")
        if np.any(table < -1e-12):
            raise InvalidInputError("table values must be non-negative")
        self._table = table.copy()
        if validate:
            if n <= TABLE_EXACT_CHECK_LIMIT:
                worst = submodularity_violation_exact(self)
            else:
                worst = submodularity_violation_sampled(self, trials=2000, seed=seed)
            if worst > 1e-9:
                raise InvalidInputError(f"table is not submodular (violation {worst:.3g})")
        self._pows = 1 << np.arange(n, dtype=np.int64)

    def evaluate_masks(self, masks: np.ndarray) -> np.ndarray:
        idx = masks.astype(np.int64) @ self._pows
        return self._table[idx]


class ComplementOracle(SetFunctionOracle):
    """g(S) = f(X \\ S).  Submodular and non-negative whenever f is."""

    kind = "complement"

    def __init__(self, base: SetFunctionOracle):
        super().__init__(base.n)
        self.base = base

    def evaluate_masks(self, masks: np.ndarray) -> np.ndarray:
        return self.base.evaluate_masks(~masks)


class ContractedOracle(SetFunctionOracle):
    """f with a pinned set forced in, restricted to the kept elements.

    Element i of this oracle is kept[i] of the base; the value of S is
    f(pinned | {kept[i] : i in S}).  Non-negative and submodular.
    """

    kind = "contracted"

    def __init__(self, base: SetFunctionOracle, pinned, kept):
        self.pinned = as_subset(pinned, base.n)
        kept = sorted(as_subset(kept, base.n))
        if self.pinned & set(kept):
            raise InvalidInputError("pinned and kept elements must be disjoint")
        super().__init__(len(kept) if kept else 1)
        if not kept:
            raise InvalidInputError("contraction needs at least one kept element")
        self.base = base
        self.kept = tuple(kept)
        self._kept_arr = np.array(kept, dtype=np.int64)
        self._pinned_list = sorted(self.pinned)

    def lift(self, subset) -> frozenset:
        """Map a subset of this oracle back to base elements, plus pinned."""
        s = as_subset(subset, self.n)
        return frozenset(self.kept[i] for i in s) | self.pinned

    def evaluate_masks(self, masks: np.ndarray) -> np.ndarray:
        full = np.zeros((masks.shape[0], self.base.n), dtype=bool)
        full[:, self._kept_arr] = masks
        if self._pinned_list:
            full[:, self._pinned_list] = True
        return self.base.evaluate_masks(full)


def modular_oracle(weights) -> CoverageOracle:
    """Modular f(S) = sum of weights over S, as disjoint singleton coverage."""
    weights = np.asarray(weights, dtype=float)
    return CoverageOracle(weights, [[i] for i in range(len(weights))])


# ---------------------------------------------------------------------------
# submodularity checks


def submodularity_violation_exact(oracle: SetFunctionOracle) -> float:
    """Worst violation of the diminishing-marginals condition, exhaustively.

    f is submodular iff f(S+i) + f(S+j) >= f(S) + f(S+i+j) for all S and
    i != j outside S; this is 2^n * n^2 checks instead of 4^n pairs.
    """
    table = oracle.value_table()
    n = oracle.n
    masks = np.arange(1 << n, dtype=np.int64)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            base = masks[((masks >> i) & 1 == 0) & ((masks >> j) & 1 == 0)]
            lhs = table[base | (1 << i)] + table[base | (1 << j)]
            rhs = table[base] + table[base | (1 << i) | (1 << j)]
            gap = float(np.max(rhs - lhs)) if len(base) else 0.0
            worst = max(worst, gap)
    return worst


def submodularity_violation_sampled(oracle: SetFunctionOracle, trials: int, seed: int = 0) -> float:
    """Worst violation of f(A)+f(B) >= f(A|B)+f(A&B) over random pairs."""
    rng = substream(seed, "submod-check")
    n = oracle.n
    a = rng.random((trials, n)) < rng.random((trials, 1))
    b = rng.random((trials, n)) < rng.random((trials, 1))
    lhs = oracle.evaluate_masks(a) + oracle.evaluate_masks(b)
    rhs = oracle.evaluate_masks(a | b) + oracle.evaluate_masks(a & b)
    return float(np.max(rhs - lhs, initial=0.0))


# ---------------------------------------------------------------------------
# instance files


def oracle_to_dict(oracle: SetFunctionOracle) -> dict:
    if isinstance(oracle, GraphCutOracle):
        return {"kind": "graph-cut", "n": oracle.n, "edges": [list(e) for e in oracle.edges]}
    if isinstance(oracle, CoverageOracle):
        return {
            "kind": "weighted-coverage",
            "n": oracle.n,
            "coverage": {
                "universe_weights": oracle.universe_weights.tolist(),
                "sets": oracle.cover_sets,
            },
        }
    if isinstance(oracle, TableOracle):
        return {"kind": "explicit-table", "n": oracle.n, "table": oracle.value_table().tolist()}
    raise InvalidInputError(f"cannot serialize oracle kind {oracle.kind!r}")


def oracle_from_dict(data: dict) -> SetFunctionOracle:
    kind = data.get("kind")
    n = int(data.get("n", 0))
    if kind == "graph-cut":
        return GraphCutOracle(n, data["edges"])
    if kind == "weighted-coverage":
        cov = data["coverage"]
        oracle = CoverageOracle(cov["universe_weights"], cov["sets"])
        if oracle.n != n:
            raise InvalidInputError("coverage sets disagree with declared n")
        return oracle
    if kind == "explicit-table":
        return TableOracle(n, data["table"])
    raise InvalidInputError(f"unknown instance kind {kind!r}")


def load_instance(path) -> SetFunctionOracle:
    with open(Path(path), "r", encoding="utf-8") as fh:
        return oracle_from_dict(json.load(fh))


def save_instance(path, oracle_or_dict) -> None:
    data = oracle_or_dict
    if isinstance(oracle_or_dict, SetFunctionOracle):
        data = oracle_to_dict(oracle_or_dict)
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True)
        fh.write("\n")
