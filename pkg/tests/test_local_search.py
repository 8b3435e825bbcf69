import itertools

import numpy as np
import pytest

from submax.errors import InfeasibleError, InvalidInputError
from submax.extension import ExtensionEstimator
from submax.local_search import (
    CardinalitySolveReport,
    LocalSearchConfig,
    local_search_cardinality,
    second_disjoint_set,
    solve_exact_cardinality,
    unconstrained_local_search,
)
from submax.oracle import GraphCutOracle, TableOracle, modular_oracle
from submax.rng import substream

TRIANGLE = GraphCutOracle(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


def random_cut(n, seed, p=0.5):
    rng = substream(seed, "lsgraph")
    edges = [
        (u, v, float(rng.uniform(0.2, 1.5)))
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < p
    ]
    if not edges:
        edges = [(0, 1, 1.0)]
    return GraphCutOracle(n, edges)


def best_of_size(oracle, ground, k):
    return max(
        (oracle.evaluate(c) for c in itertools.combinations(sorted(ground), k)), default=0.0
    )


class TestLocalSearchCardinality:
    def test_single_edge_k1(self):
        oracle = GraphCutOracle(2, [(0, 1, 1.0)])
        s = local_search_cardinality(oracle, {0, 1}, 1)
        assert s in ({0}, {1}) and oracle.evaluate(s) == 1.0

    def test_k_equals_ground(self):
        s = local_search_cardinality(TRIANGLE, {0, 1, 2}, 3)
        assert s == frozenset({0, 1, 2})

    def test_triangle_k2(self):
        s = local_search_cardinality(TRIANGLE, {0, 1, 2}, 2)
        assert len(s) == 2 and TRIANGLE.evaluate(s) == pytest.approx(2.0)

    def test_infeasible_k(self):
        with pytest.raises(InfeasibleError):
            local_search_cardinality(TRIANGLE, {0, 1}, 3)

    def test_swap_stability(self):
        cfg = LocalSearchConfig(epsilon=1e-3)
        for seed in range(6):
            oracle = random_cut(9, seed)
            k = 3
            s = local_search_cardinality(oracle, range(9), k, cfg)
            value = oracle.evaluate(s)
            factor = 1 + cfg.epsilon / oracle.n**4
            for x in s:
                for y in set(range(9)) - s:
                    swapped = (s - {x}) | {y}
                    assert oracle.evaluate(swapped) <= max(value * factor, 1e-12)

    def test_pairwise_guarantee_at_full_size(self):
        # 2 f(S) >= f(S|C) + f(S&C) for |C| = k, exhaustively at n=6
        for seed in range(5):
            oracle = random_cut(6, seed + 50)
            k = 3
            s = local_search_cardinality(oracle, range(6), k)
            fs = oracle.evaluate(s)
            for c in itertools.combinations(range(6), k):
                c = frozenset(c)
                assert 2 * 1.001 * fs + 1e-9 >= oracle.evaluate(s | c) + oracle.evaluate(s & c)

    def test_union_guarantee_any_smaller_set(self):
        # 2 f(S) >= f(S|C) for every |C| <= k, exhaustively at n=6
        for seed in range(5):
            oracle = random_cut(6, seed + 80)
            k = 3
            s = local_search_cardinality(oracle, range(6), k)
            fs = oracle.evaluate(s)
            for size in range(k + 1):
                for c in itertools.combinations(range(6), size):
                    assert 2 * 1.001 * fs + 1e-9 >= oracle.evaluate(s | frozenset(c))


class TestSecondDisjointSet:
    def test_path_graph(self):
        oracle = GraphCutOracle(3, [(0, 1, 1.0), (1, 2, 1.0)])
        s = second_disjoint_set(oracle, forbidden={1}, k=1)
        assert s in ({0}, {2}) and oracle.evaluate(s) == 1.0

    def test_empty_forbidden_reduces_to_plain(self):
        oracle = random_cut(7, 3)
        a = second_disjoint_set(oracle, frozenset(), 3)
        b = local_search_cardinality(oracle, range(7), 3)
        assert a == b

    def test_avoids_forbidden(self):
        oracle = random_cut(8, 4)
        s1 = local_search_cardinality(oracle, range(8), 2)
        s2 = second_disjoint_set(oracle, s1, 2)
        assert not (s1 & s2) and len(s2) == 2

    def test_union_bound_versus_exhaustive(self):
        # the property the exact-cardinality proof consumes from the second set
        for seed in range(4):
            oracle = random_cut(6, seed + 200)
            k = 2
            s1 = local_search_cardinality(oracle, range(6), k)
            s2 = second_disjoint_set(oracle, s1, k)
            f2 = oracle.evaluate(s2)
            rest = sorted(set(range(6)) - s1)
            for size in range(k + 1):
                for c in itertools.combinations(rest, size):
                    assert 2 * 1.001 * f2 + 1e-9 >= oracle.evaluate(s2 | frozenset(c))


class TestSolveExactCardinality:
    def test_single_edge_opt(self):
        oracle = GraphCutOracle(2, [(0, 1, 1.0)])
        rep = solve_exact_cardinality(oracle, 1)
        assert rep.value == pytest.approx(1.0)
        assert len(rep.winner) == 1

    def test_k_equals_n(self):
        rep = solve_exact_cardinality(TRIANGLE, 3)
        assert rep.winner == frozenset({0, 1, 2})
        assert rep.value == pytest.approx(0.0)

    def test_quarter_of_optimum_many_instances(self):
        for seed in range(10):
            oracle = random_cut(10, seed + 300)
            k = 3
            rep = solve_exact_cardinality(oracle, k)
            opt = best_of_size(oracle, range(10), k)
            assert len(rep.winner) == k
            assert rep.value >= 0.25 * (1 - 1e-2) * opt

    def test_complement_route_sizes(self):
        oracle = random_cut(9, 17)
        rep = solve_exact_cardinality(oracle, 7)
        assert rep.complemented
        assert len(rep.winner) == 7
        assert rep.value == pytest.approx(oracle.evaluate(rep.winner))
        opt = best_of_size(oracle, range(9), 7)
        assert rep.value >= 0.25 * (1 - 1e-2) * opt

    def test_complement_trick_equivalence_on_tables(self):
        # solving at k > n/2 matches solving the hand-complemented instance
        rng = np.random.default_rng(8)
        n = 6
        cut = random_cut(n, 23)
        k = 4
        rep = solve_exact_cardinality(cut, k)
        table = cut.value_table()
        flipped = [table[(~m) & (2**n - 1)] for m in range(2**n)]
        comp = TableOracle(n, flipped)
        rep_c = solve_exact_cardinality(comp, n - k)
        assert rep.value == pytest.approx(rep_c.value)

    def test_invalid_k(self):
        with pytest.raises(InvalidInputError):
            solve_exact_cardinality(TRIANGLE, 0)
        with pytest.raises(InvalidInputError):
            solve_exact_cardinality(TRIANGLE, 4)

    def test_report_invariants(self):
        rep = solve_exact_cardinality(TRIANGLE, 1)
        assert isinstance(rep, CardinalitySolveReport)
        assert rep.value == max(rep.value_s1, rep.value_s2)
        assert rep.winner in (rep.s1, rep.s2)


class TestUnconstrainedLocalSearch:
    def test_modular_picks_positive_weights(self):
        oracle = modular_oracle([0.5, 1.0, 2.0])
        s = unconstrained_local_search(oracle)
        assert s == frozenset({0, 1, 2})

    def test_single_edge(self):
        oracle = GraphCutOracle(2, [(0, 1, 1.0)])
        s = unconstrained_local_search(oracle)
        assert oracle.evaluate(s) == pytest.approx(1.0)

    def test_third_of_optimum_on_tables(self):
        from submax.instances import generate_table_mixture
        from submax.oracle import oracle_from_dict

        for seed in range(6):
            oracle = oracle_from_dict(generate_table_mixture(10, seed=seed))
            s = unconstrained_local_search(oracle)
            opt = float(np.max(oracle.value_table()))
            assert oracle.evaluate(s) >= (1.0 / 3.0 - 1e-2) * opt

    def test_restricted_ground(self):
        oracle = GraphCutOracle(4, [(0, 1, 1.0), (2, 3, 5.0)])
        s = unconstrained_local_search(oracle, ground=[0, 1])
        assert s <= {0, 1} and oracle.evaluate(s) == pytest.approx(1.0)

    def test_smoothed_mode_runs(self):
        oracle = random_cut(6, 77)
        est = ExtensionEstimator(backend="exact")
        s = unconstrained_local_search(oracle, mode="smoothed", estimator=est)
        opt = float(np.max(oracle.value_table()))
        assert oracle.evaluate(s) >= (1.0 / 3.0 - 1e-2) * opt

    def test_smoothed_requires_estimator(self):
        with pytest.raises(InvalidInputError):
            unconstrained_local_search(TRIANGLE, mode="smoothed")


def test_config_validation():
    with pytest.raises(InvalidInputError):
        LocalSearchConfig(epsilon=0.0)
    with pytest.raises(InvalidInputError):
        LocalSearchConfig(max_iters=0)
