import json

import numpy as np
import pytest
from click.testing import CliRunner

from cmgec.cli import main
from cmgec.pipeline import read_report


@pytest.fixture
def runner():
    return CliRunner()


FAST_ARGS = ["--m", "5", "--h1", "12", "--h2", "8", "--k-g", "4",
             "--epochs-gfn", "15", "--epochs-mgae", "20",
             "--kmeans-restarts", "5", "--runs", "2"]


def make_dataset(runner, tmp_path, extra=()):
    out = tmp_path / "data"
    result = runner.invoke(main, ["make-synth", "--blobs", "3", "--n", "24",
                                  "--views", "2", "--seed", "0",
                                  "--out", str(out), *extra])
    assert result.exit_code == 0, result.output
    return out


class TestMakeSynth:
    def test_creates_loadable_directory(self, runner, tmp_path):
        out = make_dataset(runner, tmp_path)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["n"] == 24 and manifest["v"] == 2
        assert (out / "labels.csv").exists()

    def test_per_view_noise(self, runner, tmp_path):
        out = make_dataset(runner, tmp_path, extra=["--noise", "0.5,2.0"])
        assert (out / "manifest.json").exists()

    def test_bad_noise_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["make-synth", "--blobs", "2", "--n", "10",
                                      "--views", "2", "--noise", "a,b",
                                      "--out", str(tmp_path / "x")])
        assert result.exit_code == 2


class TestRun:
    def test_full_run_writes_report(self, runner, tmp_path):
        data = make_dataset(runner, tmp_path)
        report_path = tmp_path / "report.json"
        result = runner.invoke(main, ["run", "--data", str(data), "--seed", "0",
                                      "--out", str(report_path), *FAST_ARGS])
        assert result.exit_code == 0, result.output
        assert "acc:" in result.output
        report = read_report(report_path)
        assert report["metrics"]["runs"] == 2
        assert report["config"]["ablation"] == "full"

    def test_ablation_flag(self, runner, tmp_path):
        data = make_dataset(runner, tmp_path)
        report_path = tmp_path / "r.json"
        result = runner.invoke(main, ["run", "--data", str(data), "--ablation", "pgs",
                                      "--out", str(report_path), *FAST_ARGS])
        assert result.exit_code == 0, result.output
        assert read_report(report_path)["config"]["ablation"] == "pgs"

    def test_exports(self, runner, tmp_path):
        data = make_dataset(runner, tmp_path)
        cons = tmp_path / "consensus.csv"
        emb = tmp_path / "embedding.csv"
        result = runner.invoke(main, ["run", "--data", str(data),
                                      "--out", str(tmp_path / "r.json"),
                                      "--export-consensus", str(cons),
                                      "--export-embedding", str(emb), *FAST_ARGS])
        assert result.exit_code == 0, result.output
        consensus = np.loadtxt(cons, delimiter=",")
        assert consensus.shape == (24, 24)
        np.testing.assert_allclose(consensus, consensus.T, atol=1e-15)
        embedding = np.loadtxt(emb, delimiter=",")
        assert embedding.shape == (24, 5)

    def test_export_consensus_rejected_for_pgs(self, runner, tmp_path):
        data = make_dataset(runner, tmp_path)
        result = runner.invoke(main, ["run", "--data", str(data), "--ablation", "pgs",
                                      "--out", str(tmp_path / "r.json"),
                                      "--export-consensus", str(tmp_path / "c.csv"),
                                      *FAST_ARGS])
        assert result.exit_code == 2

    def test_missing_data_dir_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["run", "--data", str(tmp_path / "nope")])
        assert result.exit_code == 2  # click validates the path itself

    def test_unlabeled_data_without_clusters_exits_2(self, runner, tmp_path):
        data = make_dataset(runner, tmp_path)
        manifest = json.loads((data / "manifest.json").read_text())
        manifest.pop("labels_csv")
        manifest.pop("cluster_count", None)
        (data / "manifest.json").write_text(json.dumps(manifest))
        result = runner.invoke(main, ["run", "--data", str(data), *FAST_ARGS,
                                      "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 2

    def test_corrupt_dataset_exits_3(self, runner, tmp_path):
        data = make_dataset(runner, tmp_path)
        (data / "manifest.json").write_text("{broken")
        result = runner.invoke(main, ["run", "--data", str(data),
                                      "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 3


class TestEval:
    def test_scores_label_files(self, runner, tmp_path):
        pred = tmp_path / "pred.csv"
        truth = tmp_path / "truth.csv"
        pred.write_text("0\n0\n1\n1\n")
        truth.write_text("1\n1\n0\n0\n")
        result = runner.invoke(main, ["eval", "--pred", str(pred), "--truth", str(truth)])
        assert result.exit_code == 0, result.output
        scores = json.loads(result.output)
        assert scores["acc"] == 1.0 and scores["ari"] == 1.0

    def test_length_mismatch_exits_3(self, runner, tmp_path):
        pred = tmp_path / "pred.csv"
        truth = tmp_path / "truth.csv"
        pred.write_text("0\n1\n")
        truth.write_text("0\n1\n0\n")
        result = runner.invoke(main, ["eval", "--pred", str(pred), "--truth", str(truth)])
        assert result.exit_code == 3
