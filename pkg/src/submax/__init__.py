"""Constrained non-monotone submodular maximization at desk scale.

Solvers for exact-cardinality, multi-knapsack, matroid, and general
packing-polytope constraints, together with the multilinear-extension
machinery, randomized rounding, brute-force oracles, and a seeded
experiment harness that measures every solver against them.
"""

from .continuous import (
    GreedyRunResult,
    KnapsackAlgoConfig,
    PackingConfig,
    TrajectoryRecord,
    box_local_search,
    continuous_greedy,
    fractional_local_search,
    knapsack_guarantee,
    packing_guarantee,
    solve_knapsacks,
    solve_matroid_knapsacks,
    solve_packing,
)
from .extension import ExtensionEstimator, as_point
from .local_search import (
    CardinalitySolveReport,
    LocalSearchConfig,
    local_search_cardinality,
    second_disjoint_set,
    solve_exact_cardinality,
    unconstrained_local_search,
)
from .oracle import (
    ComplementOracle,
    ContractedOracle,
    CoverageOracle,
    GraphCutOracle,
    SetFunctionOracle,
    TableOracle,
    load_instance,
    modular_oracle,
    oracle_from_dict,
    oracle_to_dict,
    save_instance,
)
from .polytopes import (
    BoxPolytope,
    IntersectionPolytope,
    KnapsackBoxPolytope,
    KnapsackSystem,
    Matroid,
    MatroidPolytope,
    PackingPolytope,
    restrict_upper,
)
from .reports import SolveReport
from .rounding import RoundingOutcome, independent_round, pipage_round

__version__ = "0.1.0"
