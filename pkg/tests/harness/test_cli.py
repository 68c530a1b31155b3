import json

import pytest

from boltzbit.harness.cli import EXIT_USAGE, main
from boltzbit.models import load_checkpoint


@pytest.fixture
def sample_config(tmp_path):
    def write(**fields):
        document = {"target": "gaussian", "sampler": "bctm_is", "nfe": 4, "samples": 50, **fields}
        path = tmp_path / "sample.yaml"
        path.write_text("".join(f"{key}: {value}\n" for key, value in document.items()))
        return path

    return write


def test_help():
    assert main(["--help"]) == 0


def test_unknown_command():
    assert main(["teleport"]) == EXIT_USAGE


def test_missing_config(tmp_path):
    assert main(["sample", str(tmp_path / "absent.yaml")]) == 3


def test_sample_writes_ensemble(tmp_path, sample_config):
    output_dir = tmp_path / "out"
    assert main(["--output-dir", str(output_dir), "sample", str(sample_config())]) == 0

    lines = (output_dir / "samples.csv").read_text().splitlines()
    assert "# nfe=4" in lines
    assert "x0,x1,log_weight" in lines
    manifest = json.loads((output_dir / "manifest.json").read_text())
    assert manifest["command"] == "sample"
    assert manifest["outputs"] == ["samples.csv"]
    assert manifest["seeds"] == [0]


def test_sample_override(tmp_path, sample_config):
    output_dir = tmp_path / "out"
    assert main(["--output-dir", str(output_dir), "sample", str(sample_config()), "--samples", "7"]) == 0
    lines = (output_dir / "samples.csv").read_text().splitlines()
    assert len(lines) == lines.index("x0,x1,log_weight") + 8


def test_odd_budget_rejected(tmp_path, sample_config):
    assert main(["--output-dir", str(tmp_path), "sample", str(sample_config(nfe=5))]) == 3


def test_invalid_override(tmp_path, sample_config):
    assert main(["--output-dir", str(tmp_path), "sample", str(sample_config()), "--samples", "0"]) == 3


def test_train_dm_estimates_sigma_data(tmp_path):
    config = tmp_path / "train.yaml"
    config.write_text(
        "target: {kind: gaussian, variance: 4.0}\n"
        "data_size: 512\n"
        "train: {iterations: 0, eval_size: 64}\n"
        "architecture: {dim: 2, width: 16, depth: 2, embedding_size: 4}\n"
    )
    output_dir = tmp_path / "out"
    assert main(["--output-dir", str(output_dir), "train-dm", str(config)]) == 0
    checkpoint = load_checkpoint(output_dir / "denoiser.pt", "denoiser")
    assert checkpoint.sigma_data == pytest.approx(2.0, abs=0.02)


def test_verify_single_check():
    assert main(["verify", "--check", "grid_fuzz"]) == 0


def test_verify_unknown_check():
    assert main(["verify", "--check", "no_such_check"]) == 1
