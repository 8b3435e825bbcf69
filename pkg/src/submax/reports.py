"""Solve reports: the common result record every driver returns."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class SolveReport:
    """Solution, certified factor, and the bookkeeping needed to reproduce it."""

    algorithm: str
    value: float
    guarantee: float
    regime: str
    seed: int
    solution_set: frozenset | None = None
    solution_point: np.ndarray | None = None
    sample_counts: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "algorithm": self.algorithm,
            "value": float(self.value),
            "guarantee": float(self.guarantee),
            "regime": self.regime,
            "seed": int(self.seed),
            "sample_counts": {k: int(v) for k, v in sorted(self.sample_counts.items())},
            "extra": _plain(self.extra),
        }
        if self.solution_set is not None:
            out["solution_set"] = sorted(int(e) for e in self.solution_set)
        if self.solution_point is not None:
            out["solution_point"] = [float(v) for v in self.solution_point]
        if include_timing:
            out["wall_time_s"] = float(self.wall_time_s)
        return out

    def to_json(self, path=None, include_timing: bool = True) -> str:
        text = json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _plain(value):
    """Recursively convert numpy scalars/arrays and sets to JSON-safe types."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_plain(v) for v in value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value
