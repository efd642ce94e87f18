import subprocess
import sys

import pytest

from varith.cli import ConfigInvalid, load_config, main
from varith.experiments import ExperimentConfig


def test_unknown_experiment(tmp_path, capsys):
    assert main(["nosuch", "--out", str(tmp_path)]) == 2
    assert "unknown experiment" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text",
    ["kappa = -1\n", "samples = 1\n", "colour = red\n", "no equals sign\n", "fft_orders = 30\n", "seed = abc\n"],
)
def test_invalid_config_file(tmp_path, text):
    cfg = tmp_path / "c.txt"
    cfg.write_text(text)
    assert main(["moments", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["moments", "--config", str(tmp_path / "absent"), "--out", str(tmp_path)]) == 2


def test_config_precedence():
    cfg = load_config({"seed": "7", "samples": "50", "matrix_sizes": "4, 5"}, {"seed": 9, "samples": None})
    assert cfg.seed == 9 and cfg.samples == 50 and cfg.matrix_sizes == (4, 5)
    assert load_config({}, {}) == ExperimentConfig()
    with pytest.raises(ConfigInvalid):
        load_config({}, {"kappa": 0.0})


def test_bounding_run_passes_and_is_deterministic(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# quick run\nbounding_trials = 200\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["bounding", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["bounding", "--config", str(cfg), "--out", str(b)]) == 0
    assert (a / "bounding.csv").read_bytes() == (b / "bounding.csv").read_bytes()
    lines = (a / "acceptance.txt").read_text().splitlines()
    assert lines[-1] == "overall: PASS"
    assert all(l.startswith("bounding: [PASS] criterion 10") for l in lines[:-1])
    assert main(["bounding", "--config", str(cfg), "--seed", "3", "--out", str(b)]) == 0
    assert (a / "bounding.csv").read_bytes() != (b / "bounding.csv").read_bytes()


def test_failing_criterion_exits_one(tmp_path):
    # the double factorial comparison at n = 4 misses its stated bound
    assert main(["moments", "--out", str(tmp_path)]) == 1
    text = (tmp_path / "acceptance.txt").read_text()
    assert "[FAIL] criterion 1" in text and text.endswith("overall: FAIL\n")
    assert (tmp_path / "moments.csv").exists()


def test_console_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "varith.cli", "nosuch", "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert r.returncode == 2
