"""Seeded instance generators and constraint parsing.

Generators emit the same JSON dicts the instance files use, so a run can
be reproduced either from the spec (generator + seed) or from the written
file.  Every generated function is submodular by construction and the
explicit-table generator re-validates on materialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .oracle import (
    CoverageOracle,
    GraphCutOracle,
    SetFunctionOracle,
    TableOracle,
    modular_oracle,
    oracle_from_dict,
    oracle_to_dict,
)
from .polytopes import (
    KnapsackSystem,
    Matroid,
    MatroidPolytope,
    PackingPolytope,
    polytope_from_dict,
)
from .rng import substream


def generate_gnp_cut(n: int, p: float, weight_range=(0.5, 1.5), seed: int = 0) -> dict:
    """Random-graph cut function; guaranteed to have at least one edge."""
    rng = substream(seed, "gnp-cut")
    lo, hi = float(weight_range[0]), float(weight_range[1])
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append([u, v, float(rng.uniform(lo, hi))])
    if not edges:
        edges.append([0, min(1, n - 1), 1.0])
    return {"kind": "graph-cut", "n": n, "edges": edges}


def generate_coverage(n: int, universe: int | None = None, density: float = 0.3, seed: int = 0) -> dict:
    rng = substream(seed, "coverage")
    universe = universe if universe is not None else 2 * n
    weights = rng.uniform(0.1, 1.0, size=universe)
    sets = []
    for _ in range(n):
        members = np.nonzero(rng.random(universe) < density)[0].tolist()
        if not members:
            members = [int(rng.integers(0, universe))]
        sets.append(members)
    return {
        "kind": "weighted-coverage",
        "n": n,
        "coverage": {"universe_weights": weights.tolist(), "sets": sets},
    }


def generate_modular(n: int, weight_range=(0.2, 1.0), seed: int = 0) -> dict:
    rng = substream(seed, "modular")
    weights = rng.uniform(float(weight_range[0]), float(weight_range[1]), size=n)
    return {
        "kind": "weighted-coverage",
        "n": n,
        "coverage": {
            "universe_weights": weights.tolist(),
            "sets": [[i] for i in range(n)],
        },
    }


def generate_table_mixture(n: int, distribution: str = "cut-coverage", seed: int = 0) -> dict:
    """Random submodular table as a positive mixture of built-in families."""
    if n > 12:
        raise InvalidInputError("table generation is limited to n <= 12")
    rng = substream(seed, "table-mix")
    parts = []
    if distribution in ("cut-coverage", "cut"):
        cut = oracle_from_dict(generate_gnp_cut(n, 0.5, (0.5, 1.5), seed=int(rng.integers(2**31))))
        parts.append((float(rng.uniform(0.5, 1.5)), cut))
    if distribution in ("cut-coverage", "coverage"):
        cov = oracle_from_dict(
            generate_coverage(n, 2 * n, 0.3, seed=int(rng.integers(2**31)))
        )
        parts.append((float(rng.uniform(0.2, 0.8)), cov))
    if not parts:
        raise InvalidInputError(f"unknown table distribution {distribution!r}")
    table = np.zeros(1 << n)
    for coeff, oracle in parts:
        table += coeff * oracle.value_table()
    return {"kind": "explicit-table", "n": n, "table": table.tolist()}


_GENERATORS = {
    "gnp-cut": lambda spec: generate_gnp_cut(
        spec["n"], spec.get("p", 0.5), spec.get("weight_range", (0.5, 1.5)), spec.get("seed", 0)
    ),
    "coverage": lambda spec: generate_coverage(
        spec["n"], spec.get("universe"), spec.get("density", 0.3), spec.get("seed", 0)
    ),
    "modular": lambda spec: generate_modular(
        spec["n"], spec.get("weight_range", (0.2, 1.0)), spec.get("seed", 0)
    ),
    "explicit-table": lambda spec: generate_table_mixture(
        spec["n"], spec.get("distribution", "cut-coverage"), spec.get("seed", 0)
    ),
}


def generate_instance(spec: dict) -> dict:
    name = spec.get("generator")
    if name not in _GENERATORS:
        raise InvalidInputError(f"unknown generator {name!r}")
    return _GENERATORS[name](spec)


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class ParsedConstraint:
    """One constraint file, decoded into whichever objects apply."""

    data: dict
    n: int

    @property
    def cardinality_k(self) -> int | None:
        card = self.data.get("cardinality")
        return int(card["k"]) if card else None

    @property
    def matroid(self) -> Matroid | None:
        if "matroid" in self.data:
            m = dict(self.data["matroid"])
            m.setdefault("n", self.n)
            return Matroid.from_dict(m)
        if "intersection" in self.data:
            for part in self.data["intersection"]:
                if "matroid" in part:
                    m = dict(part["matroid"])
                    m.setdefault("n", self.n)
                    return Matroid.from_dict(m)
        return None

    @property
    def knapsacks(self) -> KnapsackSystem | None:
        if "knapsacks" in self.data:
            return KnapsackSystem.from_dict(self.data["knapsacks"])
        if "intersection" in self.data:
            for part in self.data["intersection"]:
                if "knapsacks" in part:
                    return KnapsackSystem.from_dict(part["knapsacks"])
        return None

    def polytope(self) -> PackingPolytope:
        data = {k: v for k, v in self.data.items() if k != "cardinality"}
        if not data:
            raise InvalidInputError("constraint carries no polytope description")
        return polytope_from_dict(data, self.n)


def parse_constraint(data: dict, n: int) -> ParsedConstraint:
    known = {"cardinality", "matroid", "knapsacks", "box", "intersection"}
    unknown = set(data) - known
    if unknown:
        raise InvalidInputError(f"unknown constraint keys: {sorted(unknown)}")
    return ParsedConstraint(data, n)


# ---------------------------------------------------------------------------
# batch files


def load_json(path):
    with open(Path(path), "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_json(path, data) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def materialize_batch(batch: dict, out_dir) -> list:
    """Write instance/constraint files for every entry of a generation spec.

    The spec is {"instances": [{generator fields, "constraint": {...},
    "count": int, "seed": int}, ...]}; returns the manifest rows.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    index = 0
    for entry in batch.get("instances", []):
        count = int(entry.get("count", 1))
        base_seed = int(entry.get("seed", 0))
        for rep in range(count):
            spec = dict(entry)
            spec["seed"] = base_seed + rep
            spec.pop("count", None)
            constraint = spec.pop("constraint", None)
            instance = generate_instance(spec)
            iid = f"instance_{index:04d}"
            inst_path = out / f"{iid}.json"
            save_json(inst_path, instance)
            row = {"id": iid, "instance": inst_path.name, "spec": spec}
            if constraint is not None:
                parse_constraint(constraint, instance["n"])  # validate early
                cons_path = out / f"{iid}.constraint.json"
                save_json(cons_path, constraint)
                row["constraint"] = cons_path.name
            manifest.append(row)
            index += 1
    save_json(out / "manifest.json", {"instances": manifest})
    return manifest


def oracle_from_spec(spec: dict) -> SetFunctionOracle:
    return oracle_from_dict(generate_instance(spec))


__all__ = [
    "CoverageOracle",
    "GraphCutOracle",
    "MatroidPolytope",
    "ParsedConstraint",
    "SetFunctionOracle",
    "TableOracle",
    "generate_coverage",
    "generate_gnp_cut",
    "generate_instance",
    "generate_modular",
    "generate_table_mixture",
    "load_json",
    "materialize_batch",
    "modular_oracle",
    "oracle_from_spec",
    "oracle_to_dict",
    "parse_constraint",
    "save_json",
]
