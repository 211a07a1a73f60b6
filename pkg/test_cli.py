"""
End-to-end tests of the command-line pipeline on toy problems.
"""

import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from bayesqst import storage
from bayesqst.bures import rho_stack
from bayesqst.main import main
from bayesqst.qmatrix import DensityMatrix


@pytest.fixture
def counts_path(tmp_path):
    path = tmp_path / "counts.json"
    assert main(["simulate", "--qubits", "1", "--seed", "7", "--out", str(path)]) == 0
    return path


def sample(counts_path, out_dir, *extra):
    return main([
        "sample", "--counts", str(counts_path), "--chains", "2", "--samples", "40",
        "--seed", "5", "--workers", "1", "--out-dir", str(out_dir), *extra,
    ])


class TestSimulate:
    def test_w_state_single_qubit(self, tmp_path):
        out = tmp_path / "w.json"
        assert main(["simulate", "--qubits", "1", "--seed", "7", "--ground-truth", "w", "--out", str(out)]) == 0
        raw = json.loads(out.read_text())
        assert [s["basis"] for s in raw["settings"]] == ["X", "Y", "Z"]
        assert raw["shots_per_setting"] == 50
        assert sum(sum(s["counts"]) for s in raw["settings"]) == 150
        # W_1 = |1>, so Z always reports outcome 1
        assert raw["settings"][2]["counts"] == [0, 50]
        truth = storage.read_density(tmp_path / "w_truth.json")
        assert_allclose(truth.mat, np.diag([0.0, 1.0]), atol=1e-15)

    def test_explicit_shots(self, tmp_path):
        out = tmp_path / "c.json"
        assert main(["simulate", "--qubits", "2", "--shots", "10", "--seed", "1", "--out", str(out)]) == 0
        data = storage.read_counts(out)
        assert len(data.settings) == 9
        assert all(counts.sum() == 10 for _, counts in data.settings)

    def test_byte_identical_reruns(self, tmp_path):
        for name in ("a.json", "b.json"):
            assert main(["simulate", "--qubits", "2", "--seed", "99", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        assert (tmp_path / "a_truth.json").read_bytes() == (tmp_path / "b_truth.json").read_bytes()

    def test_ground_truth_file(self, tmp_path):
        state = tmp_path / "state.json"
        storage.write_density(state, DensityMatrix.maximally_mixed(2))
        out = tmp_path / "c.json"
        assert main(["simulate", "--qubits", "1", "--seed", "1", "--ground-truth", str(state), "--out", str(out)]) == 0
        assert storage.read_counts(out).total_counts == 150

    def test_invalid_ground_truth_file(self, tmp_path):
        state = tmp_path / "state.json"
        state.write_text(json.dumps({"dim": 2, "re": [[2, 0], [0, -1]], "im": [[0, 0], [0, 0]]}))
        assert main(["simulate", "--qubits", "1", "--seed", "1", "--ground-truth", str(state),
                     "--out", str(tmp_path / "c.json")]) == 5

    def test_ground_truth_dimension_mismatch(self, tmp_path):
        state = tmp_path / "state.json"
        storage.write_density(state, DensityMatrix.maximally_mixed(4))
        assert main(["simulate", "--qubits", "1", "--seed", "1", "--ground-truth", str(state),
                     "--out", str(tmp_path / "c.json")]) == 5

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["simulate", "--qubits", "1", "--seed", "1", "--out", str(blocker / "c.json")]) == 6

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "--qubits", "1"])
        assert excinfo.value.code == 2

    def test_too_many_qubits(self, tmp_path):
        assert main(["simulate", "--qubits", "11", "--seed", "1", "--out", str(tmp_path / "c.json")]) == 2


class TestSample:
    def test_single_chain(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert main(["sample", "--counts", str(counts_path), "--chains", "1", "--samples", "8", "--thin", "1",
                     "--seed", "3", "--out-dir", str(out_dir)]) == 0
        assert storage.list_chain_indices(out_dir) == [0]
        header, samples = storage.read_chain_samples(storage.chain_sample_path(out_dir, 0))
        assert samples.shape == (8, 16)
        manifest = storage.read_manifest(out_dir)
        assert manifest.counts_sha256 == storage.file_sha256(counts_path)
        assert manifest.chain_config.samples_kept == 8

    def test_worker_limit_does_not_change_samples(self, tmp_path, counts_path):
        assert sample(counts_path, tmp_path / "one", "--chains", "4") == 0
        assert main(["sample", "--counts", str(counts_path), "--chains", "4", "--samples", "40", "--seed", "5",
                     "--workers", "4", "--out-dir", str(tmp_path / "four")]) == 0
        for r in range(4):
            one = storage.chain_sample_path(tmp_path / "one", r).read_bytes()
            four = storage.chain_sample_path(tmp_path / "four", r).read_bytes()
            assert one == four

    def test_env_overrides_workers(self, tmp_path, counts_path, monkeypatch):
        monkeypatch.setenv("QST_WORKERS", "2")
        assert sample(counts_path, tmp_path / "run") == 0
        assert storage.read_manifest(tmp_path / "run").worker_limit == 2

    def test_missing_counts(self, tmp_path):
        assert sample(tmp_path / "missing.json", tmp_path / "run") == 4

    def test_invalid_beta(self, tmp_path, counts_path):
        assert sample(counts_path, tmp_path / "run", "--beta0", "1.5") == 2

    def test_reused_directory(self, tmp_path, counts_path):
        assert sample(counts_path, tmp_path / "run") == 0
        assert sample(counts_path, tmp_path / "run") == 6


class TestEstimate:
    def test_single_sample_pool(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert main(["sample", "--counts", str(counts_path), "--chains", "1", "--samples", "1",
                     "--seed", "3", "--out-dir", str(out_dir)]) == 0
        report = tmp_path / "report.json"
        assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(report)]) == 0
        _, samples = storage.read_chain_samples(storage.chain_sample_path(out_dir, 0))
        estimate = storage.read_density(tmp_path / "report_rho.json")
        assert_allclose(estimate.mat, rho_stack(samples)[0], atol=1e-14)
        raw = json.loads(report.read_text())
        assert raw["N"] == 1 and raw["R"] == 1

    def test_reference_is_the_estimate(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        first = tmp_path / "first.json"
        assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(first)]) == 0
        second = tmp_path / "second.json"
        assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(second),
                     "--reference", str(tmp_path / "first_rho.json"), "--target-w"]) == 0
        report = json.loads(second.read_text())
        assert report["fidelity_vs_reference"] == pytest.approx(1.0, abs=1e-9)
        assert report["frob_err_sq"] == pytest.approx(0.0, abs=1e-20)
        assert 0.0 <= report["w_overlap"] <= 1.0
        assert report["w_overlap_std"] >= 0.0
        assert 0.5 <= report["purity"] <= 1.0

    def test_reports_are_reproducible(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        for name in ("a.json", "b.json"):
            assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_burn_in(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        report = tmp_path / "report.json"
        assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(report), "--burn-in", "10"]) == 0
        raw = json.loads(report.read_text())
        assert raw["N"] == 30 and raw["burn_in"] == 10
        assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(report), "--burn-in", "40"]) == 2

    def test_reference_dimension_mismatch(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        reference = tmp_path / "ref.json"
        storage.write_density(reference, DensityMatrix.maximally_mixed(4))
        assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(tmp_path / "r.json"),
                     "--reference", str(reference)]) == 3

    def test_empty_sample_directory(self, tmp_path):
        (tmp_path / "empty").mkdir()
        assert main(["estimate", "--samples-dir", str(tmp_path / "empty"), "--out", str(tmp_path / "r.json")]) == 7


class TestDiagnose:
    def test_writes_tables(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        assert main(["estimate", "--samples-dir", str(out_dir), "--out", str(tmp_path / "est.json")]) == 0
        diag = tmp_path / "diag"
        assert main(["diagnose", "--samples-dir", str(out_dir), "--max-lag", "10", "--out-dir", str(diag),
                     "--reference", str(tmp_path / "est_rho.json"), "--subsets", "1,2"]) == 0

        acf_rows = pd.read_csv(diag / "acf.csv")
        assert list(acf_rows.columns) == ["chain", "lag", "acf"]
        assert (acf_rows[acf_rows["lag"] == 0]["acf"] == 1.0).all()
        assert len(acf_rows) == 2 * 11

        iact_rows = pd.read_csv(diag / "iact.csv")
        assert list(iact_rows.columns) == ["chain", "tau", "n_eff", "final_beta", "mean_acceptance"]

        scaling = pd.read_csv(diag / "scaling.csv")
        assert list(scaling["R"]) == [1, 2]
        assert scaling["frob_err_sq"].iloc[-1] == pytest.approx(0.0, abs=1e-20)

    def test_lag_too_large(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        assert main(["diagnose", "--samples-dir", str(out_dir), "--max-lag", "2000",
                     "--out-dir", str(tmp_path / "diag")]) == 2

    def test_subsets_need_reference(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        assert main(["diagnose", "--samples-dir", str(out_dir), "--max-lag", "10",
                     "--out-dir", str(tmp_path / "diag"), "--subsets", "1,2"]) == 2

    def test_subset_larger_than_pool(self, tmp_path, counts_path):
        out_dir = tmp_path / "run"
        assert sample(counts_path, out_dir) == 0
        storage.write_density(tmp_path / "ref.json", DensityMatrix.maximally_mixed(2))
        assert main(["diagnose", "--samples-dir", str(out_dir), "--max-lag", "10", "--out-dir", str(tmp_path / "d"),
                     "--reference", str(tmp_path / "ref.json"), "--subsets", "1,4"]) == 2

    def test_missing_sample_directory(self, tmp_path):
        assert main(["diagnose", "--samples-dir", str(tmp_path / "nope"), "--out-dir", str(tmp_path / "d")]) == 7


class TestTiming:
    def test_writes_table(self, tmp_path, counts_path):
        dirs = []
        for thin in ("1", "2"):
            out_dir = tmp_path / f"thin_{thin}"
            assert sample(counts_path, out_dir, "--thin", thin) == 0
            dirs.append(str(out_dir))
        storage.write_density(tmp_path / "ref.json", DensityMatrix.maximally_mixed(2))
        out = tmp_path / "timing.csv"
        assert main(["timing", "--samples-dirs", *dirs, "--reference", str(tmp_path / "ref.json"),
                     "--cores", "2", "--out", str(out)]) == 0
        table = pd.read_csv(out)
        assert list(table.columns) == ["samples_dir", "thin", "R", "wall_clock_s", "avg_wall_clock_s", "one_minus_fidelity"]
        assert list(table["thin"]) == [1, 2]
        assert (tmp_path / "timing_thresholds.csv").exists()
