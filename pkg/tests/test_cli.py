import json

import numpy as np
import pytest

from msinpaint.cli import main
from msinpaint.synthdata import generate_scene_pair

TINY_NET = {"input_channels": 13, "scales": 2, "down_channels": [8, 12],
            "skip_channels": 2, "out_channels": 13}


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_ds")
    assert main(["synth", "--out", str(root), "--n", "2",
                 "--height", "16", "--width", "16", "--seed", "50"]) == 0
    return root


@pytest.fixture(scope="module")
def config_file(tmp_path_factory, dataset):
    path = tmp_path_factory.mktemp("cfg") / "config.json"
    path.write_text(json.dumps({
        "dataset_dir": str(dataset),
        "methods": ["mock"],
        "mock_backend": True,
        "train_spec": {"steps": 2},
        "skip_config": TINY_NET,
    }))
    return path


def test_synth_layout(dataset):
    dirs = sorted(p.name for p in dataset.iterdir())
    assert dirs == ["sample_000", "sample_001"]
    dn = np.load(dataset / "sample_000" / "s2.npy")
    pair = generate_scene_pair(16, 16, seed=50)
    assert np.array_equal(dn, pair.current.values * 10000.0)


def test_mask_command(tmp_path):
    out = tmp_path / "m.npy"
    assert main(["mask", "--out", str(out), "--height", "16", "--width", "16",
                 "--coverage", "0.25", "--seed", "3"]) == 0
    mask = np.load(out)
    assert mask.shape == (16, 16)
    assert int(mask.sum()) == 64


def test_run_and_report_and_panel(dataset, config_file, tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(config_file), "--out", str(out)]) == 0
    assert (out / "reports.csv").exists()

    summary = tmp_path / "agg.csv"
    assert main(["report", "--reports", str(out / "reports.csv"),
                 "--out", str(summary)]) == 0
    lines = summary.read_text().splitlines()
    assert lines[0].startswith("method,scope")
    assert len(lines) == 2  # one method, one scope

    panel = tmp_path / "panel.png"
    assert main(["panel", "--run-dir", str(out), "--dataset", str(dataset),
                 "--out", str(panel)]) == 0
    assert panel.stat().st_size > 0


def test_inpaint_single_sample(dataset, config_file, tmp_path):
    out = tmp_path / "single"
    assert main(["inpaint", "--sample", str(dataset / "sample_000"),
                 "--config", str(config_file), "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert "sample_000_mock.npy" in files


def test_sweep_command(dataset, config_file, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"num_steps": [20, 50]}))
    out_csv = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(config_file), "--grid", str(grid),
                 "--out", str(out_csv)]) == 0
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 3


def test_gradcheck_command():
    assert main(["gradcheck", "--probes", "10", "--size", "8"]) == 0
    assert main(["gradcheck", "--probes", "10", "--size", "8", "--no-norm"]) == 0


def test_usage_and_config_errors(tmp_path):
    assert main([]) == 1
    assert main(["run"]) == 1  # no dataset anywhere
    assert main(["frobnicate"]) == 1
    assert main(["mask", "--out", str(tmp_path / "m.npy"),
                 "--coverage", "2.0"]) == 1
    # sd-inpaint without endpoint or mock is a config error
    assert main(["run", "--dataset", str(tmp_path), "--method", "sd-inpaint",
                 "--out", str(tmp_path / "o")]) == 1


def test_run_partial_failure_exit_code(dataset, tmp_path):
    code = main(["run", "--dataset", str(dataset), "--method", "sd-inpaint",
                 "--backend-endpoint", "http://127.0.0.1:1",
                 "--out", str(tmp_path / "fail")])
    assert code == 2


def test_run_creates_no_output_dir_flagless(dataset, config_file):
    # no --out: metrics only, nothing written
    assert main(["run", "--config", str(config_file)]) == 0
