import math

import numpy as np
import pytest

from mrlocal import (
    ALL_METHODS,
    Balanced,
    MrLocalConfig,
    SimulationSetting,
    monte_carlo,
    setting_a,
    setting_e,
    write_per_rep_tsv,
    write_report,
)
from mrlocal.harness import _replicate_task
from mrlocal.rng import derive_seed
from mrlocal.simulate import generate

SMALL = setting_a(0.1, p=120)
CFG = MrLocalConfig(grid_size=300)


@pytest.fixture(scope="module")
def small_reports():
    return monte_carlo(SMALL, CFG, ALL_METHODS, 6, 42)


class TestMonteCarlo:
    def test_replicate_determinism(self, small_reports):
        again = monte_carlo(SMALL, CFG, ALL_METHODS, 6, 42)
        assert again == small_reports

    def test_worker_count_does_not_change_results(self, small_reports):
        parallel = monte_carlo(SMALL, CFG, ALL_METHODS, 6, 42, workers=3)
        assert parallel == small_reports

    def test_paired_datasets_across_methods(self):
        # every method inside one replicate consumes the same dataset:
        # the per-replicate seed fully determines it
        rep, results = _replicate_task((SMALL, CFG, ("mr_local", "ivw_all"), 2, 42))
        ds, _ = generate(SMALL, derive_seed(42, 2))
        rep2, results2 = _replicate_task((SMALL, CFG, ("mr_local",), 2, 42))
        assert rep == rep2 == 2
        assert results["mr_local"] == results2["mr_local"]

    def test_aggregate_invariants(self, small_reports):
        for method, report in small_reports.items():
            ok = [r for r in report.per_rep if r.error is None]
            assert report.n_reps == 6
            assert report.n_errors == 6 - len(ok)
            mae = np.mean([abs(r.beta_hat - 0.1) for r in ok])
            assert report.mae == pytest.approx(mae, rel=1e-12)
            cov = np.mean([r.ci_low <= 0.1 <= r.ci_high for r in ok])
            assert report.coverage == pytest.approx(cov, rel=1e-12)
            band = math.sqrt(report.coverage * (1 - report.coverage) / len(ok))
            assert report.coverage_mc_se == pytest.approx(band, abs=1e-12)

    def test_mr_local_beats_pooled_baselines_on_directional_data(self):
        s = setting_e(0.0, p=600)
        reports = monte_carlo(
            s, MrLocalConfig(),
            ("mr_local", "mr_local_plus", "divw_all", "ivw_all"), 5, 9,
        )
        assert reports["mr_local"].mae < reports["divw_all"].mae
        assert reports["mr_local"].mae < reports["ivw_all"].mae
        assert reports["mr_local_plus"].mae < reports["divw_all"].mae

    def test_valid_iv_null_calibration(self):
        # no pleiotropy at all: nominal 95% intervals in the log-scaled
        # bandwidth regime where cluster truncation effects vanish
        s = SimulationSetting(
            name="bal0", p=2000, n_d=100_000, n_y=100_000, h_d=0.1,
            beta=0.1, pleiotropy=Balanced(0.0),
        )
        cfg = MrLocalConfig(tau0_mode="theory", screen=False)
        rep = monte_carlo(s, cfg, ("mr_local",), 100, 13)["mr_local"]
        assert 0.90 <= rep.coverage <= 0.99

    def test_mr_local_plus_coverage_with_bootstrap(self):
        s = setting_a(0.0)
        cfg = MrLocalConfig(use_plus=True, bootstrap_reps=50)
        rep = monte_carlo(s, cfg, ("mr_local_plus",), 50, 21)["mr_local_plus"]
        assert rep.n_errors == 0
        assert rep.coverage >= 0.90

    def test_estimator_errors_recorded_not_raised(self):
        # a single instrument cannot enter the pipeline: every replicate errors
        bad = SimulationSetting(
            name="bad", p=1, n_d=10, n_y=10, h_d=1e-8,
            beta=0.0, pleiotropy=Balanced(0.0),
        )
        reports = monte_carlo(bad, MrLocalConfig(screen=False, grid_size=50),
                              ("mr_local", "divw_all"), 4, 0)
        assert reports["mr_local"].n_errors == 4
        assert math.isnan(reports["mr_local"].mae)
        assert all(r.error for r in reports["mr_local"].per_rep)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match="unknown method"):
            monte_carlo(SMALL, CFG, ("nope",), 2, 0)

    def test_cluster_median_close_to_truth(self, small_reports):
        assert small_reports["cluster_median"].mae < 0.1


class TestReports:
    def test_golden_layout(self, tmp_path, small_reports):
        path = tmp_path / "report.tsv"
        write_report({"mr_local": small_reports["mr_local"]}, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "method\tmetric\tvalue\tmc_se"
        metrics = [line.split("\t")[1] for line in lines[1:]]
        assert metrics == [
            "n_reps", "n_errors", "mae", "coverage", "mean_sd",
            "valid_prop", "empty_b_rate",
        ]
        cov_line = lines[4].split("\t")
        assert cov_line[3] != ""
        assert float(cov_line[2]) == small_reports["mr_local"].coverage

    def test_byte_identical_across_runs(self, tmp_path):
        r1 = monte_carlo(SMALL, CFG, ("mr_local", "ivw_all"), 4, 7)
        r2 = monte_carlo(SMALL, CFG, ("mr_local", "ivw_all"), 4, 7, workers=2)
        p1 = tmp_path / "a.tsv"
        p2 = tmp_path / "b.tsv"
        write_report(r1, p1)
        write_report(r2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_method_set_gives_header_only(self, tmp_path):
        path = tmp_path / "empty.tsv"
        write_report({}, path)
        assert path.read_text() == "method\tmetric\tvalue\tmc_se\n"

    def test_per_rep_detail(self, tmp_path, small_reports):
        path = tmp_path / "detail.tsv"
        write_per_rep_tsv(small_reports, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 6 * len(small_reports)
        assert lines[0].split("\t") == [
            "method", "rep", "beta_hat", "ci_low", "ci_high",
            "sigma_hat", "path", "cluster_valid_frac", "error",
        ]

    def test_method_order_is_canonical(self, tmp_path, small_reports):
        path = tmp_path / "all.tsv"
        write_report(small_reports, path)
        methods = []
        for line in path.read_text().splitlines()[1:]:
            name = line.split("\t")[0]
            if name not in methods:
                methods.append(name)
        assert methods == list(ALL_METHODS)
