import numpy as np
import pytest

from mrlocal import load_summary_tsv
from mrlocal.cli import main

HEADER = "snp\tbeta_exposure\tse_exposure\tbeta_outcome\tse_outcome"


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def sim_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "sim.tsv"
    code = run("simulate", "--setting", "a", "--beta", "0.1", "--p", "300",
               "--seed", "7", "--output", str(path))
    assert code == 0
    return path


class TestSimulate:
    def test_deterministic_outputs(self, tmp_path):
        a = tmp_path / "a.tsv"
        b = tmp_path / "b.tsv"
        for out in (a, b):
            assert run("simulate", "--setting", "a", "--beta", "0.1",
                       "--seed", "7", "--p", "200", "--output", str(out)) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.with_suffix(".truth.tsv").read_bytes() == b.with_suffix(".truth.tsv").read_bytes()

    def test_p_override(self, tmp_path):
        out = tmp_path / "small.tsv"
        assert run("simulate", "--setting", "b", "--p", "200", "--output", str(out)) == 0
        ds, _ = load_summary_tsv(out)
        assert ds.p == 200

    def test_setting_e_valid_fraction(self, tmp_path):
        out = tmp_path / "e.tsv"
        assert run("simulate", "--setting", "e", "--p", "1000", "--output", str(out)) == 0
        truth_lines = out.with_suffix(".truth.tsv").read_text().splitlines()[1:]
        n_valid = sum(int(line.split("\t")[3]) for line in truth_lines)
        assert n_valid == 280

    def test_setting_from_file(self, tmp_path):
        cfg = tmp_path / "setting.txt"
        cfg.write_text(
            "name = custom\np = 150\nn_d = 10000\nn_y = 10000\nh_d = 0.1\n"
            "beta = 0.2\npleiotropy = balanced\nsigma_pi_sq = 0.0\n"
        )
        out = tmp_path / "cust.tsv"
        assert run("simulate", "--setting", "file", "--input", str(cfg),
                   "--output", str(out)) == 0
        ds, _ = load_summary_tsv(out)
        assert ds.p == 150


class TestAnalyze:
    def test_result_keys_and_profile(self, sim_file, tmp_path):
        out = tmp_path / "res.txt"
        assert run("analyze", "--input", str(sim_file), "--output", str(out)) == 0
        text = dict(
            line.split(" = ", 1) for line in out.read_text().splitlines()
            if " = " in line
        )
        for key in ("beta_hat", "sigma_hat", "ci_low", "ci_high", "path",
                    "b_set_empty", "selected_b", "cluster_snps", "c_beta",
                    "tau0", "seed", "n_used"):
            assert key in text
        assert text["path"] == "plurality"
        assert abs(float(text["beta_hat"]) - 0.1) < 0.1
        profile = out.with_suffix(".profile.tsv").read_text().splitlines()
        assert profile[0] == "b\tcluster_size\tq"
        assert len(profile) == 1 + 2000

    def test_balanced_note_on_fallback(self, tmp_path, capsys):
        sim = tmp_path / "c.tsv"
        assert run("simulate", "--setting", "c", "--beta", "0", "--seed", "3",
                   "--output", str(sim)) == 0
        out = tmp_path / "res.txt"
        assert run("analyze", "--input", str(sim), "--output", str(out)) == 0
        text = out.read_text()
        assert "path = balanced_fallback" in text
        assert "b_set_empty = true" in text
        assert "note = " in text
        assert "balanced" in capsys.readouterr().err

    def test_missing_input_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("analyze", "--output", "/tmp/x.txt")
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_nonexistent_input_exits_2(self, tmp_path):
        out = tmp_path / "res.txt"
        assert run("analyze", "--input", str(tmp_path / "ghost.tsv"),
                   "--output", str(out)) == 2

    def test_bad_rows_exit_2(self, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text(HEADER + "\nrs1\t0.1\t-1\t0.2\t0.04\n")
        assert run("analyze", "--input", str(bad), "--output",
                   str(tmp_path / "r.txt")) == 2

    def test_weak_instrument_degeneracy_exits_3(self, tmp_path):
        # exposure effects far below their standard errors: the debiased
        # denominator is negative on any path
        rows = [HEADER]
        for i in range(8):
            rows.append(f"rs{i}\t0.01\t1.0\t{0.1 * (i - 4)}\t1.0")
        weak = tmp_path / "weak.tsv"
        weak.write_text("\n".join(rows) + "\n")
        assert run("analyze", "--input", str(weak), "--no-screen",
                   "--grid", "100", "--output", str(tmp_path / "r.txt")) == 3


class TestBenchmark:
    def test_deterministic_across_runs_and_workers(self, tmp_path):
        outs = []
        for i, workers in enumerate(("1", "2", "1")):
            out = tmp_path / f"rep{i}.tsv"
            code = run("benchmark", "--setting", "a", "--beta", "0.1",
                       "--p", "100", "--grid", "200", "--reps", "4",
                       "--seed", "5", "--workers", workers,
                       "--methods", "mr_local,ivw_all", "--output", str(out))
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_single_rep_and_per_rep_file(self, tmp_path):
        out = tmp_path / "r.tsv"
        detail = tmp_path / "d.tsv"
        code = run("benchmark", "--setting", "d", "--beta", "0", "--p", "100",
                   "--grid", "200", "--reps", "1", "--seed", "2",
                   "--methods", "mr_local", "--output", str(out),
                   "--per-rep", str(detail))
        assert code == 0
        rows = detail.read_text().splitlines()
        assert len(rows) == 2
        assert out.with_suffix(".config.txt").exists()

    def test_report_contains_requested_methods(self, tmp_path):
        out = tmp_path / "r.tsv"
        assert run("benchmark", "--setting", "a", "--p", "100", "--grid", "200",
                   "--reps", "2", "--methods", "mr_local,divw_all",
                   "--output", str(out)) == 0
        methods = {line.split("\t")[0] for line in out.read_text().splitlines()[1:]}
        assert methods == {"mr_local", "divw_all"}


class TestDensity:
    def test_ratio_table_and_profile(self, sim_file, tmp_path):
        out = tmp_path / "dens.tsv"
        assert run("density", "--input", str(sim_file), "--output", str(out),
                   "--grid", "500") == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "snp\tratio\tweight"
        ds, _ = load_summary_tsv(sim_file)
        assert len(rows) - 1 <= ds.p
        profile = out.with_suffix(".profile.tsv").read_text().splitlines()
        assert len(profile) == 1 + 500

    def test_ratios_center_near_truth_on_valid_data(self, tmp_path):
        sim = tmp_path / "valid.tsv"
        cfgf = tmp_path / "valid.setting.txt"
        cfgf.write_text(
            "name = v\np = 400\nn_d = 100000\nn_y = 100000\nh_d = 0.1\n"
            "beta = 0.25\npleiotropy = balanced\nsigma_pi_sq = 0.0\n"
        )
        assert run("simulate", "--setting", "file", "--input", str(cfgf),
                   "--output", str(sim), "--seed", "4") == 0
        out = tmp_path / "dens.tsv"
        assert run("density", "--input", str(sim), "--output", str(out)) == 0
        rows = out.read_text().splitlines()[1:]
        ratios = np.array([float(r.split("\t")[1]) for r in rows])
        weights = np.array([float(r.split("\t")[2]) for r in rows])
        weighted_mean = np.sum(ratios * weights) / np.sum(weights)
        assert weighted_mean == pytest.approx(0.25, abs=0.02)

    def test_empty_dataset_exits_2(self, tmp_path):
        empty = tmp_path / "empty.tsv"
        empty.write_text(HEADER + "\n")
        assert run("density", "--input", str(empty),
                   "--output", str(tmp_path / "o.tsv")) == 2
