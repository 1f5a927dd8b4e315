"""Command-line behaviour: exit codes, output files and reproducibility."""

import argparse
import json

import pytest

from phylab.cli import OUTPUT_ROOT_ENV, cmd_gradcheck, main
from phylab.experiments import ExperimentName, read_dataset
from phylab.nn import backward

SMALL_DOA = """
[experiment]
name = doa_estimation
master_seed = 11
snr_grid_db = [0, 10]
trials_per_point = 30

[channel]
num_antennas = 8
max_angle_deg = 20
sample_step_deg = 0.5
cell_step_deg = 2
train_size = 300
val_size = 50
test_size = 50
music_grid_step_deg = 0.5

[network]
hidden_sizes = [16]

[train]
num_iterations = 100
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "doa.cfg"
    path.write_text(SMALL_DOA)
    return path


def read_rows(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestList:
    def test_plain(self, capsys):
        assert main(["experiment", "list"]) == 0
        names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
        assert names == [n.value for n in ExperimentName]

    def test_json(self, capsys):
        assert main(["experiment", "list", "--json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert [r["name"] for r in rows] == [n.value for n in ExperimentName]
        assert all(r["description"] for r in rows)

    def test_schema(self, capsys):
        assert main(["experiment", "schema"]) == 0
        assert "[experiment]" in capsys.readouterr().out


class TestRun:
    def test_grid_override_and_outputs(self, cfg_path, tmp_path):
        out = tmp_path / "run"
        code = main(["experiment", "run", str(cfg_path), "--set", "snr_grid_db=[0,10,20]", "--out", str(out)])
        assert code == 0
        rows = read_rows(out / "results.csv")
        for method in ("dnn", "music"):
            assert sorted(float(r["snr_db"]) for r in rows if r["method"] == method) == [0.0, 10.0, 20.0]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 11
        assert manifest["overrides"] == ["snr_grid_db=[0,10,20]"]
        assert manifest["config"]["experiment"]["snr_grid_db"] == [0.0, 10.0, 20.0]
        assert (out / "model_classifier.npz").exists()
        assert json.loads((out / "run_info.json").read_text())["rows"] == len(rows)

    def test_rerun_is_byte_identical(self, cfg_path, tmp_path):
        for d in ("a", "b"):
            assert main(["experiment", "run", str(cfg_path), "--out", str(tmp_path / d)]) == 0
        assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()
        for model in (tmp_path / "a").glob("model_*.npz"):
            assert model.read_bytes() == (tmp_path / "b" / model.name).read_bytes()

    def test_default_output_root(self, cfg_path, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
        assert main(["experiment", "run", str(cfg_path)]) == 0
        (run_dir,) = (tmp_path / "root").iterdir()
        assert run_dir.name.startswith("doa_estimation-")
        assert (run_dir / "results.csv").exists()

    @pytest.mark.parametrize("key", ["name", "master_seed", "snr_grid_db"])
    def test_missing_key_exits_2(self, tmp_path, capsys, key):
        path = tmp_path / "bad.cfg"
        path.write_text("\n".join(line for line in SMALL_DOA.splitlines() if not line.startswith(key)))
        assert main(["experiment", "run", str(path), "--out", str(tmp_path / "o")]) == 2
        assert f"experiment.{key}" in capsys.readouterr().err

    def test_bad_override_exits_2(self, cfg_path, tmp_path, capsys):
        assert main(["experiment", "run", str(cfg_path), "--set", "num_antenas=4", "--out", str(tmp_path)]) == 2
        assert "num_antenas" in capsys.readouterr().err

    def test_divergence_exits_3(self, cfg_path, tmp_path, capsys):
        code = main(["experiment", "run", str(cfg_path), "--set", "learning_rate=1e9", "--out", str(tmp_path / "o")])
        assert code == 3
        assert "diverged at iteration" in capsys.readouterr().err

    def test_missing_file_exits_nonzero(self, tmp_path):
        assert main(["experiment", "run", str(tmp_path / "nope.cfg")]) != 0


class TestDatasetGen:
    def test_split_sizes_and_determinism(self, cfg_path, tmp_path, capsys):
        for d in ("a", "b"):
            assert main(["dataset", "gen", str(cfg_path), "--out", str(tmp_path / d)]) == 0
        a = tmp_path / "a/doa_estimation.phyds"
        assert a.read_bytes() == (tmp_path / "b/doa_estimation.phyds").read_bytes()
        assert read_dataset(a).split_counts == {"train": 300, "validation": 50, "test": 50}
        assert "train=300" in capsys.readouterr().out

    def test_online_experiment_exits_2(self, tmp_path, capsys):
        path = tmp_path / "ae.cfg"
        path.write_text("[experiment]\nname = autoencoder_74\nmaster_seed = 1\nsnr_grid_db = [0]\n")
        assert main(["dataset", "gen", str(path), "--out", str(tmp_path / "o")]) == 2
        assert "no dataset" in capsys.readouterr().err


def sign_flipped_backward(mlp, trace, d_out, kind):
    g = backward(mlp, trace, d_out, kind)
    g.d_weights[0] = -g.d_weights[0]
    return g


class TestGradcheck:
    def test_passes(self, capsys):
        assert main(["gradcheck"]) == 0
        out = capsys.readouterr().out
        assert "gradcheck passed" in out
        body = out.splitlines()[:-1]
        assert body and all(line.startswith("ok") and "L0:W=" in line for line in body)

    def test_sabotaged_backward_fails(self, capsys):
        assert cmd_gradcheck(argparse.Namespace(seed=7), backward_fn=sign_flipped_backward) != 0
        out = capsys.readouterr().out
        assert "gradcheck FAILED" in out
        assert any(line.startswith("FAIL") for line in out.splitlines())
