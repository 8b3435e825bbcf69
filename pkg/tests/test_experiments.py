import numpy as np
import pytest

from submax.errors import InvalidInputError
from submax.experiments import (
    SUITES,
    default_battery,
    run_cell,
    run_experiment,
    verify_properties,
)


def small_cells(seed=0):
    return [
        {
            "instance_id": "a",
            "spec": {"generator": "gnp-cut", "n": 8, "p": 0.5, "seed": seed},
            "constraint": {"cardinality": {"k": 3}},
            "algorithm": "exact-card",
            "seed": 1,
        },
        {
            "instance_id": "b",
            "spec": {"generator": "gnp-cut", "n": 8, "p": 0.5, "seed": seed + 1},
            "constraint": {
                "knapsacks": {
                    "weights": [[0.3, 0.25, 0.4, 0.2, 0.35, 0.3, 0.45, 0.25]],
                    "capacities": [1.0],
                }
            },
            "algorithm": "knapsacks",
            "seed": 2,
        },
    ]


class TestRunExperiment:
    def test_rows_have_ratios_and_pass(self):
        report = run_experiment(small_cells())
        assert len(report.rows) == 2
        for row in report.rows:
            assert row["status"] == "ok"
            assert row["ratio"] is not None and row["ratio"] >= row["guarantee"] * 0.99

    def test_empty_batch(self):
        report = run_experiment([])
        assert report.rows == [] and report.aggregate()["cells"] == 0
        assert report.to_csv().splitlines()[0].startswith("instance_id,")

    def test_deterministic_csv(self):
        a = run_experiment(small_cells()).to_csv()
        b = run_experiment(small_cells()).to_csv()
        assert a == b

    def test_error_cell_recorded_and_batch_continues(self):
        cells = small_cells()
        cells.insert(
            0,
            {
                "instance_id": "broken",
                "spec": {"generator": "nope", "n": 4},
                "constraint": {"cardinality": {"k": 1}},
                "algorithm": "exact-card",
                "seed": 0,
            },
        )
        report = run_experiment(cells)
        statuses = {r["instance_id"]: r["status"] for r in report.rows}
        assert statuses["broken"].startswith("error:")
        assert statuses["a"] == "ok" and statuses["b"] == "ok"

    def test_timings_excluded_from_csv(self):
        report = run_experiment(small_cells())
        assert report.timings  # collected...
        assert "wall" not in report.to_csv() and "time" not in report.to_csv()
        assert "timings_s" in report.sidecar()  # ...but only in the sidecar

    def test_unknown_algorithm_is_error_row(self):
        cell = dict(small_cells()[0], algorithm="mystery")
        row, _ = run_cell(cell)
        assert row["status"].startswith("error:")

    def test_worker_pool_matches_serial(self):
        serial = run_experiment(small_cells(), workers=1).to_csv()
        pooled = run_experiment(small_cells(), workers=2).to_csv()
        assert serial == pooled


class TestDefaultBattery:
    def test_shape(self):
        cells = default_battery(5)
        algos = {c["algorithm"] for c in cells}
        assert algos == {"exact-card", "knapsacks", "packing"}
        sizes = {c["spec"]["n"] for c in cells}
        assert sizes == {8, 10, 12, 14}

    def test_battery_deterministic(self):
        assert default_battery(5) == default_battery(5)
        assert default_battery(5) != default_battery(6)


class TestVerifyProperties:
    @pytest.mark.parametrize(
        "suite,trials",
        [
            ("three-set-inequality", 1500),
            ("submodularity", 600),
            ("rounding-marginals", 4000),
            ("rounding-tails", 4000),
            ("rounding-expectation", 4000),
            ("box-search-bound", 3),
            ("residual-greedy-bound", 3),
            ("polytope-downmono", 800),
            ("linear-oracle-dominance", 400),
        ],
    )
    def test_all_suites_pass_quick(self, suite, trials):
        summary = verify_properties(suite, trials, seed=7)
        assert summary["passed"], summary
        assert summary["violations"] == 0

    def test_zero_trials_vacuous(self):
        for suite in SUITES:
            summary = verify_properties(suite, 0, seed=1)
            assert summary["passed"] and "warning" in summary

    def test_unknown_suite(self):
        with pytest.raises(InvalidInputError):
            verify_properties("mystery", 10)

    def test_negative_trials(self):
        with pytest.raises(InvalidInputError):
            verify_properties("submodularity", -1)
