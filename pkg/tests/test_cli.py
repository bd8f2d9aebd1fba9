import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from dashrl.cli import main
from dashrl.net import NetSizes, NetworkParams

DATA = Path(__file__).parent.parent / "data"


@pytest.fixture()
def runner():
    return CliRunner()


def test_generate_command(runner, tmp_path):
    out = tmp_path / "topics.json"
    result = runner.invoke(
        main,
        ["generate", str(DATA / "seattle-weather.csv"), "--quota", "120",
         "--seed", "1", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "topic" in result.output
    payload = json.loads(out.read_text())
    assert payload and payload[0]["dashboards"]


def test_train_command(runner, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        f"""
total_steps: 120
worker_count: 1
seed: 2
lstm_hidden: 8
block_dim: 8
log_every: 40
datasets:
  - {DATA / 'seattle-weather.csv'}
"""
    )
    result = runner.invoke(
        main, ["train", "--config", str(cfg), "--out", str(tmp_path / "run")]
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "run" / "curve.csv").exists()
    assert (tmp_path / "run" / "final.ckpt").exists()


def test_eval_command(runner, tmp_path):
    params = NetworkParams.initialize(
        NetSizes(lstm_hidden=8, block_dim=8), np.random.default_rng(0)
    )
    ck = tmp_path / "p.ckpt"
    params.save(ck)
    result = runner.invoke(
        main,
        ["eval", "--checkpoint", str(ck), "--datasets",
         str(DATA / "seattle-weather.csv"), "--quota", "100"],
    )
    assert result.exit_code == 0, result.output
    stats = json.loads(result.output)
    assert stats["n_dashboards"] > 0


def test_ablate_command_tiny(runner, tmp_path):
    result = runner.invoke(
        main,
        [
            "ablate",
            "--variants", "full,ind",
            "--steps", "80",
            "--workers", "1",
            "--seeds", "1",
            "--datasets", str(DATA / "seattle-weather.csv"),
            "--out", str(tmp_path / "abl"),
            "--lr", "1e-3",
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "abl" / "summary.json").read_text())
    assert set(summary) == {"full", "independent_heads"}
    assert (tmp_path / "abl" / "full_seed0.csv").exists()


def test_bench_command(runner):
    result = runner.invoke(main, ["bench", "--rows", "3", "--hidden", "16", "--repeats", "5"])
    assert result.exit_code == 0, result.output
    assert "forward" in result.output
