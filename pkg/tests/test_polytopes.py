import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from submax.errors import InfeasibleError, InvalidInputError
from submax.polytopes import (
    BoxPolytope,
    IntersectionPolytope,
    KnapsackBoxPolytope,
    KnapsackSystem,
    Matroid,
    MatroidPolytope,
    polytope_from_dict,
    sample_members,
)
from submax.rng import substream


class TestMatroid:
    def test_uniform_independence(self):
        m = Matroid.uniform(4, 2)
        assert m.is_independent({0, 3})
        assert not m.is_independent({0, 1, 2})

    def test_partition_independence(self):
        m = Matroid.partition(5, [[0, 1, 2], [3, 4]], [1, 2])
        assert m.is_independent({0, 3, 4})
        assert not m.is_independent({0, 1})

    def test_partition_must_cover(self):
        with pytest.raises(InvalidInputError):
            Matroid.partition(4, [[0, 1]], [1])

    def test_contraction_uniform(self):
        m = Matroid.uniform(5, 3).contracted({0, 1}, [2, 3, 4])
        assert m.kind == "uniform" and m.rank == 1 and m.n == 3

    def test_contraction_partition_capacities(self):
        m = Matroid.partition(5, [[0, 1, 2], [3, 4]], [2, 1])
        sub = m.contracted({0}, [1, 2, 3])
        assert sub.is_independent({0, 2})
        assert sub.is_independent({0})
        assert not sub.is_independent({0, 1})

    def test_contract_dependent_raises(self):
        with pytest.raises(InfeasibleError):
            Matroid.uniform(4, 1).contracted({0, 1}, [2, 3])

    def test_roundtrip(self):
        for m in (
            Matroid.uniform(4, 2),
            Matroid.partition(4, [[0, 1], [2, 3]], [1, 1]),
            Matroid.free(3),
        ):
            clone = Matroid.from_dict(m.to_dict())
            assert clone.kind == m.kind and clone.n == m.n


class TestKnapsackSystem:
    def test_packable_examples(self):
        K = KnapsackSystem([[2.0, 3.0]], [3.0])
        assert K.packable({0})
        assert not K.packable({0, 1})
        assert K.packable(frozenset())

    def test_infeasible_singletons_flagged(self):
        K = KnapsackSystem([[2.0, 5.0]], [3.0])
        assert K.infeasible_singletons == (1,)

    def test_normalization(self):
        K = KnapsackSystem([[2.0, 3.0]], [4.0]).normalized()
        assert K.capacities == pytest.approx([1.0])
        assert K.weights[0] == pytest.approx([0.5, 0.75])

    def test_packable_iff_member_of_unit_box(self):
        rng = substream(12, "t")
        K = KnapsackSystem(rng.uniform(0.1, 0.8, size=(2, 6)), [1.0, 1.2])
        P = KnapsackBoxPolytope(K, 1.0)
        for mask in range(64):
            subset = {i for i in range(6) if mask >> i & 1}
            x = np.array([1.0 if i in subset else 0.0 for i in range(6)])
            assert K.packable(subset) == P.is_member(x)

    def test_capacities_positive(self):
        with pytest.raises(InvalidInputError):
            KnapsackSystem([[1.0]], [0.0])


class TestMembership:
    def test_uniform_rank2(self):
        P = MatroidPolytope(Matroid.uniform(3, 2))
        assert P.is_member([0.5, 0.5, 0.5])
        assert not P.is_member([1.0, 1.0, 0.5])

    def test_origin_always_member(self):
        for P in (
            MatroidPolytope(Matroid.uniform(3, 1)),
            KnapsackBoxPolytope(KnapsackSystem([[0.5, 0.5, 0.5]], [1.0]), 0.9),
            BoxPolytope([0.2, 0.0, 1.0]),
        ):
            assert P.is_member(np.zeros(3))

    def test_dimension_mismatch(self):
        P = MatroidPolytope(Matroid.uniform(3, 1))
        with pytest.raises(InvalidInputError):
            P.is_member([0.5, 0.5])


class TestMaximizeLinear:
    def test_uniform_rank1_greedy(self):
        P = MatroidPolytope(Matroid.uniform(2, 1))
        assert P.maximize_linear([3.0, 5.0]) == pytest.approx([0.0, 1.0])

    def test_zero_objective(self):
        P = MatroidPolytope(Matroid.uniform(2, 1))
        assert P.maximize_linear([0.0, 0.0]) == pytest.approx([0.0, 0.0])

    def test_negative_coordinates_zeroed(self):
        P = MatroidPolytope(Matroid.free(3))
        assert P.maximize_linear([1.0, -2.0, 0.0]) == pytest.approx([1.0, 0.0, 0.0])

    def test_knapsack_lp(self):
        P = KnapsackBoxPolytope(KnapsackSystem([[2.0, 3.0]], [3.0]), 1.0)
        assert P.maximize_linear([1.0, 1.0]) == pytest.approx([1.0, 1.0 / 3.0])

    def test_tie_breaks_toward_lower_index(self):
        P = MatroidPolytope(Matroid.uniform(3, 1))
        assert P.maximize_linear([1.0, 1.0, 1.0]) == pytest.approx([1.0, 0.0, 0.0])

    def test_partition_greedy(self):
        P = MatroidPolytope(Matroid.partition(4, [[0, 1], [2, 3]], [1, 1]))
        assert P.maximize_linear([2.0, 3.0, 1.0, 0.5]) == pytest.approx([0.0, 1.0, 1.0, 0.0])

    def test_greedy_agrees_with_simplex(self):
        rng = substream(4, "agree")
        for m in (
            Matroid.uniform(6, 3),
            Matroid.partition(6, [[0, 1, 2], [3, 4], [5]], [2, 1, 1]),
        ):
            P = MatroidPolytope(m)
            A, b = P.rows()
            for _ in range(40):
                c = rng.uniform(-1, 1, size=6)
                greedy_val = float(c @ P.maximize_linear(c))
                lp_val = float(c @ PackingLP(P).maximize_linear(c))
                assert abs(greedy_val - lp_val) <= 1e-8


class PackingLP(IntersectionPolytope):
    """Forces the generic simplex path for a single polytope (test helper)."""

    def __init__(self, part):
        super().__init__([part])

    def maximize_linear(self, c):
        return self._lp_maximize(np.asarray(c, dtype=float))


class TestRestrictUpper:
    def test_box_intersection_membership(self):
        P = BoxPolytope([1.0, 1.0]).restrict_upper([0.3, 1.0])
        assert not P.is_member([0.4, 0.0])
        assert P.is_member([0.3, 0.9])

    def test_all_ones_identity(self):
        base = MatroidPolytope(Matroid.uniform(3, 2))
        P = base.restrict_upper(np.ones(3))
        rng = substream(3, "id")
        pts = rng.random((200, 3))
        assert np.array_equal(base.contains_batch(pts), P.contains_batch(pts))

    def test_restricted_lp_by_hand(self):
        P = MatroidPolytope(Matroid.uniform(2, 1)).restrict_upper([0.5, 0.5])
        x = P.maximize_linear([1.0, 1.0])
        assert x == pytest.approx([0.5, 0.5])

    def test_repeated_restriction_merges_boxes(self):
        P = MatroidPolytope(Matroid.uniform(3, 2))
        Q = P.restrict_upper([0.8, 1.0, 1.0]).restrict_upper([1.0, 0.5, 1.0])
        assert isinstance(Q, IntersectionPolytope)
        assert len(Q.parts) == 2  # matroid + one merged box
        assert not Q.is_member([0.9, 0.0, 0.0])
        assert not Q.is_member([0.0, 0.6, 0.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_down_monotonicity(seed):
    rng = np.random.default_rng(seed)
    K = KnapsackSystem(rng.uniform(0.05, 0.9, size=(2, 5)), [1.0, 1.5])
    P = IntersectionPolytope([MatroidPolytope(Matroid.uniform(5, 3)), KnapsackBoxPolytope(K, 1.0)])
    y = sample_members(P, 50, rng)
    assert np.all(P.contains_batch(y))
    x = y * rng.random(y.shape)
    assert np.all(P.contains_batch(x))


def test_linear_oracle_dominates_members():
    rng = substream(17, "dom")
    K = KnapsackSystem(rng.uniform(0.1, 0.6, size=(2, 6)), [1.0, 1.0])
    P = KnapsackBoxPolytope(K, 1.0)
    members = sample_members(P, 500, rng)
    for _ in range(25):
        c = rng.uniform(-1, 1, size=6)
        star = P.maximize_linear(c)
        assert P.is_member(star)
        assert c @ star >= np.max(members @ c) - 1e-9


def test_polytope_from_dict():
    P = polytope_from_dict({"matroid": {"kind": "uniform", "rank": 2}}, n=4)
    assert isinstance(P, MatroidPolytope)
    Q = polytope_from_dict(
        {
            "intersection": [
                {"matroid": {"kind": "uniform", "rank": 2}},
                {"knapsacks": {"weights": [[0.5, 0.5, 0.5, 0.5]], "capacities": [1.0]}},
            ]
        },
        n=4,
    )
    assert isinstance(Q, IntersectionPolytope)
    with pytest.raises(InvalidInputError):
        polytope_from_dict({"nonsense": 1}, n=2)
