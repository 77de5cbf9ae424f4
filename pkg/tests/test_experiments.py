import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from boolnl.bounds import binomial_tail_exact, expectation_upper_bound, lambda_n
from boolnl.core import TruthTable
from boolnl.errors import CapExceeded, DomainError
from boolnl.experiments import (
    DEFAULT_SEED,
    RECORD_HEADER,
    ExperimentManifest,
    check_joint_hypothesis,
    dumps,
    exact_joint,
    exact_oracle,
    records_csv,
    reports_csv,
    run_concentration,
    run_convergence,
    run_joint,
    theta_grid,
)

from oracles import bfs_distances_to_code

ORACLE_COUNTS = {
    (3, 1): {0: 16, 1: 128, 2: 112},
    (4, 1): {0: 32, 1: 512, 2: 3840, 3: 17920, 4: 28000, 5: 14336, 6: 896},
    (4, 2): {0: 2048, 1: 32768, 2: 30720},
}
ORACLE_MEAN_Y = {(3, 1): Fraction(21, 4), (4, 1): Fraction(8540, 1024), (4, 2): Fraction(105, 8)}

X1 = TruthTable.coordinate(4, 1)
X2 = TruthTable.coordinate(4, 2)


class TestExactOracle:
    @pytest.mark.parametrize("key", sorted(ORACLE_COUNTS))
    def test_counts(self, key):
        dist = exact_oracle(*key)
        assert dist.counts == ORACLE_COUNTS[key]
        assert sum(dist.counts.values()) == dist.denominator

    def test_counts_match_bfs(self):
        for n, r in [(3, 1), (3, 2), (2, 1)]:
            values = bfs_distances_to_code(n, r)
            expected = {}
            for v in values:
                expected[v] = expected.get(v, 0) + 1
            assert exact_oracle(n, r).counts == expected

    @pytest.mark.parametrize("key", sorted(ORACLE_MEAN_Y))
    def test_mean_and_bound(self, key):
        dist = exact_oracle(*key)
        assert dist.mean_y == ORACLE_MEAN_Y[key]
        assert float(dist.mean_y) < expectation_upper_bound(*key)

    def test_upper_tail_decreasing(self):
        dist = exact_oracle(4, 1)
        tails = [dist.upper_tail(e) for e in np.linspace(-1, 1, 41)]
        assert all(a >= b for a, b in zip(tails, tails[1:]))
        assert dist.upper_tail(-1) == 1

    def test_as_dict(self):
        d = exact_oracle(3, 1).as_dict()
        assert Fraction(d["mean_Nr_num"], d["mean_Nr_den"]) == exact_oracle(3, 1).mean_nr
        assert d["denominator_log2"] == 8

    def test_caps(self):
        with pytest.raises(CapExceeded):
            exact_oracle(5, 1)
        with pytest.raises(DomainError):
            exact_oracle(3, 4)


@pytest.mark.parametrize("key", sorted(ORACLE_COUNTS))
def test_monte_carlo_agrees_with_oracle(key):
    n, r = key
    m = 4096
    summaries, records = run_convergence(ExperimentManifest("converge", [n], r=r, samples=m))
    s = summaries[0]
    exact = float(ORACLE_MEAN_Y[key])
    assert abs(s["mean_y"] - exact) <= 4 * s["std_y"] / math.sqrt(m)
    # per-value frequencies within 4 sigma of the exact distribution
    counts = ORACLE_COUNTS[key]
    den = 1 << (1 << n)
    observed = {}
    for rec in records:
        observed[rec.nonlinearity] = observed.get(rec.nonlinearity, 0) + 1
    assert set(observed) <= set(counts)
    for v, c in counts.items():
        p = c / den
        assert abs(observed.get(v, 0) / m - p) <= 4 * math.sqrt(p * (1 - p) / m) + 1e-12


class TestConvergence:
    def test_records(self):
        man = ExperimentManifest("converge", [6, 7], r=1, samples=50)
        summaries, records = run_convergence(man)
        assert len(records) == 100 and [s["n"] for s in summaries] == [6, 7]
        for rec in records:
            assert rec.y == (1 << rec.n) - 2 * rec.nonlinearity
            assert rec.lam == lambda_n(rec.n, 1)
            assert rec.ratio == pytest.approx(rec.y / rec.lam, rel=1e-15)
        s = summaries[0]
        assert s["min_ratio"] <= s["mean_ratio"] <= s["max_ratio"]
        assert s["e_ub"] == expectation_upper_bound(6, 1)

    def test_deterministic_across_jobs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_convergence(ExperimentManifest("converge", [5, 8], r=1, samples=300, output_path=str(a)), jobs=1)
        run_convergence(ExperimentManifest("converge", [5, 8], r=1, samples=300, output_path=str(b)), jobs=4)
        assert a.read_bytes() == b.read_bytes()

    def test_streamed_file_matches_records_csv(self, tmp_path):
        path = tmp_path / "r.csv"
        _, records = run_convergence(ExperimentManifest("converge", [5], samples=20, output_path=str(path)))
        text = path.read_text()
        assert text == records_csv(records)
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == RECORD_HEADER and len(rows) == 21

    def test_seed_changes_output(self):
        _, a = run_convergence(ExperimentManifest("converge", [6], samples=30))
        _, b = run_convergence(ExperimentManifest("converge", [6], samples=30, master_seed=DEFAULT_SEED ^ 1))
        assert records_csv(a) != records_csv(b)

    def test_prefix_stability(self):
        # extending m never changes the earlier samples
        _, a = run_convergence(ExperimentManifest("converge", [7], samples=10))
        _, b = run_convergence(ExperimentManifest("converge", [7], samples=40))
        assert a == b[:10]

    def test_kind_mismatch(self):
        with pytest.raises(DomainError):
            run_convergence(ExperimentManifest("joint", [4]))


class TestManifest:
    @pytest.mark.parametrize(
        "kwargs,err",
        [
            ({"kind": "nope", "n_values": [4]}, DomainError),
            ({"kind": "converge", "n_values": []}, DomainError),
            ({"kind": "converge", "n_values": [4], "samples": 0}, DomainError),
            ({"kind": "converge", "n_values": [4], "r": 5}, DomainError),
            ({"kind": "converge", "n_values": [8], "r": 3}, CapExceeded),
            ({"kind": "converge", "n_values": [28]}, CapExceeded),
            ({"kind": "exact-oracle", "n_values": [5]}, CapExceeded),
            ({"kind": "converge", "n_values": [4], "master_seed": -1}, ValueError),
        ],
    )
    def test_validate(self, kwargs, err):
        with pytest.raises(err):
            ExperimentManifest(**kwargs).validate()

    def test_metadata_echo(self):
        meta = ExperimentManifest("converge", [4], output_path="x.csv").metadata()
        assert "output_path" not in meta and "jobs" not in meta
        assert meta["master_seed"] == DEFAULT_SEED and meta["format_version"]


class TestJoint:
    def test_hypothesis(self):
        assert check_joint_hypothesis(X1, X2, 1) == 0
        with pytest.raises(DomainError):
            check_joint_hypothesis(X1, X1, 1)
        with pytest.raises(DomainError):
            check_joint_hypothesis(X1, TruthTable.monomial(4, 3), 1)

    def test_exact(self):
        joint, mg, mh = exact_joint(X1, X2, lambda_n(4, 1))
        assert joint == 0
        assert mg == mh == Fraction(697, 65536) == binomial_tail_exact(16, lambda_n(4, 1))

    def test_run(self):
        reports = run_joint(ExperimentManifest("joint", [4], samples=2000), X1, X2)
        by_name = {r.name: r for r in reports}
        assert by_name["joint_tail_exact"].comparison == 0.0 and by_name["joint_tail_exact"].satisfied
        assert by_name["marginal_g_exact"].satisfied and by_name["marginal_h_exact"].satisfied
        assert by_name["joint_tail_mc"].satisfied
        assert by_name["marginal_g_mc"].satisfied and by_name["marginal_h_mc"].satisfied

    def test_larger_n_has_no_exact_rows(self):
        g, h = TruthTable.coordinate(8, 1), TruthTable.coordinate(8, 5)
        reports = run_joint(ExperimentManifest("joint", [8], samples=200), g, h)
        assert not any(r.name.endswith("_exact") for r in reports)

    def test_n_mismatch(self):
        with pytest.raises(DomainError):
            run_joint(ExperimentManifest("joint", [5], samples=10), X1, X2)

    def test_deterministic(self):
        a = reports_csv(run_joint(ExperimentManifest("joint", [4], samples=500), X1, X2, jobs=1))
        b = reports_csv(run_joint(ExperimentManifest("joint", [4], samples=500), X1, X2, jobs=3))
        assert a == b


class TestConcentration:
    def test_grid(self):
        grid = theta_grid(10)
        assert grid[0] == 0 and len(grid) == 13
        assert all(a < b for a, b in zip(grid, grid[1:]))

    def test_reports(self):
        reports = run_concentration(ExperimentManifest("concentration", [8], samples=300))
        assert len(reports) == 13
        assert reports[0].comparison == 1.0 and reports[0].bound_value == 1.0
        assert all(r.satisfied for r in reports)
        freqs = [r.comparison for r in reports]
        assert all(a >= b for a, b in zip(freqs, freqs[1:]))


def test_dumps_round_trip():
    d = exact_oracle(3, 1).as_dict()
    assert json.loads(dumps(d)) == d and dumps(d).endswith("\n")
