"""Multilinear extension F(x) = E[f(random subset drawn from x)].

Two interchangeable backends:

* ``exact``: the full sum over 2^n subsets (n <= 20), computed with an
  iterative doubling of subset probabilities; gradients come from the
  identity dF/dx_j = F(x, x_j=1) - F(x, x_j=0) evaluated in one pass.
* ``monte-carlo``: the empirical mean over seeded random subsets.
  Gradients reuse one common sample batch for both endpoint evaluations
  of every coordinate (common random numbers), which is what makes the
  argmax direction stable inside the greedy loop.

Both backends are deterministic given (x, seed, sample_count, substream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BackendLimitError, InvalidInputError
from .oracle import EXACT_ENUMERATION_LIMIT, SetFunctionOracle
from .rng import substream

DEFAULT_EPSILON = 0.05
_MC_CHUNK = 1 << 16


def as_point(x, n: int) -> np.ndarray:
    """Validate a fractional point in [0,1]^n."""
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise InvalidInputError(f"expected a length-{n} vector, got shape {x.shape}")
    if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
        raise InvalidInputError("coordinates must lie in [0, 1]")
    return np.clip(x, 0.0, 1.0)


def subset_probs(x: np.ndarray) -> np.ndarray:
    """Probability of every bitmask under independent inclusion probs x."""
    q = np.array([1.0])
    for xi in x:
        q = np.concatenate([q * (1.0 - xi), q * xi])
    return q


def exact_values_batch(oracle: SetFunctionOracle, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Exact F at many points; chunked so the (rows x 2^n) block stays small."""
    table = oracle.value_table()
    n = oracle.n
    out = np.empty(len(points))
    for lo in range(0, len(points), chunk):
        block = points[lo : lo + chunk]
        q = np.ones((len(block), 1))
        for i in range(n):
            xi = block[:, i : i + 1]
            q = np.concatenate([q * (1.0 - xi), q * xi], axis=1)
        out[lo : lo + chunk] = q @ table
    return out


@dataclass(frozen=True)
class ExtensionEstimator:
    """Evaluates F and its gradient with the configured backend.

    ``sample_count=None`` uses the default ceil(10 n^2 / epsilon^2).
    Immutable; safe for concurrent reads.
    """

    backend: str = "exact"
    sample_count: int | None = None
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0

    def __post_init__(self):
        if self.backend not in ("exact", "monte-carlo"):
            raise InvalidInputError(f"unknown backend {self.backend!r}")
        if self.sample_count is not None and self.sample_count < 1:
            raise InvalidInputError("sample_count must be positive")
        if self.epsilon <= 0:
            raise InvalidInputError("epsilon must be positive")

    def samples_for(self, n: int) -> int:
        if self.sample_count is not None:
            return self.sample_count
        return int(math.ceil(10.0 * n * n / (self.epsilon * self.epsilon)))

    # -- values ------------------------------------------------------------

    def value(self, oracle: SetFunctionOracle, x, stream=()) -> float:
        x = as_point(x, oracle.n)
        if self.backend == "exact":
            self._check_exact(oracle.n)
            return float(subset_probs(x) @ oracle.value_table())
        rng = substream(self.seed, "ext-value", *stream)
        total = 0.0
        remaining = self.samples_for(oracle.n)
        count = remaining
        while remaining > 0:
            m = min(remaining, _MC_CHUNK)
            masks = rng.random((m, oracle.n)) < x
            total += float(np.sum(oracle.evaluate_masks(masks)))
            remaining -= m
        return total / count

    def gradient(self, oracle: SetFunctionOracle, x, stream=()) -> np.ndarray:
        x = as_point(x, oracle.n)
        if self.backend == "exact":
            self._check_exact(oracle.n)
            return self._exact_gradient(oracle, x)
        return self._mc_gradient(oracle, x, stream)

    # -- internals ----------------------------------------------------------

    def _check_exact(self, n: int) -> None:
        if n > EXACT_ENUMERATION_LIMIT:
            raise BackendLimitError(
                f"exact backend supports n <= {EXACT_ENUMERATION_LIMIT}, got {n}"
            )

    def _exact_gradient(self, oracle: SetFunctionOracle, x: np.ndarray) -> np.ndarray:
        # dF/dx_j = sum over masks without j of P_-j(mask) * (f(mask|j) - f(mask)).
        # P_-j = q / (1 - x_j) on those masks; masks containing j contribute a
        # zero difference, so no explicit filtering is needed.
        table = oracle.value_table()
        n = oracle.n
        q = subset_probs(x)
        idx = np.arange(1 << n, dtype=np.int64)
        grad = np.empty(n)
        for j in range(n):
            diff = table[idx | (1 << j)] - table
            if 1.0 - x[j] > 1e-9:
                grad[j] = float(q @ diff) / (1.0 - x[j])
            else:
                xz = x.copy()
                xz[j] = 0.0
                grad[j] = float(subset_probs(xz) @ diff)
        return grad

    def _mc_gradient(self, oracle: SetFunctionOracle, x: np.ndarray, stream) -> np.ndarray:
        rng = substream(self.seed, "ext-grad", *stream)
        n = oracle.n
        samples = self.samples_for(n)
        grad = np.zeros(n)
        remaining = samples
        while remaining > 0:
            m = min(remaining, _MC_CHUNK)
            base = rng.random((m, n)) < x
            for j in range(n):
                on = base.copy()
                on[:, j] = True
                off = base
                off_col = base[:, j].copy()
                off[:, j] = False
                grad[j] += float(
                    np.sum(oracle.evaluate_masks(on) - oracle.evaluate_masks(off))
                )
                base[:, j] = off_col
            remaining -= m
        return grad / samples
