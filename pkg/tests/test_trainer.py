import numpy as np
import pytest

from dashrl.config import EnvConfig
from dashrl.env import DashboardEnv
from dashrl.net import NetSizes, NetworkParams, PolicyNetwork
from dashrl.trainer import (
    GenerationStats,
    ReplayBuffer,
    ReturnCurve,
    SharedParams,
    TrainConfig,
    aggregate_curves,
    evaluate,
    make_variant,
    train,
)


def small_config(**kwargs) -> TrainConfig:
    base = dict(
        total_steps=200,
        worker_count=1,
        seed=7,
        lstm_hidden=8,
        block_dim=8,
        log_every=50,
        lr=1e-3,
    )
    base.update(kwargs)
    return TrainConfig(**base)


def test_make_variant_wiring():
    full = make_variant("full")
    ind = make_variant("ind")
    pen = make_variant("pen")
    dqn = make_variant("dqn")
    assert full.fused_blocks and full.constrained and full.algorithm == "a3c"
    assert not ind.fused_blocks and ind.constrained
    assert pen.fused_blocks and not pen.constrained
    assert dqn.algorithm == "dqn"
    with pytest.raises(ValueError):
        make_variant("nope")


def test_single_worker_run_is_reproducible(weather):
    cfg = small_config()
    p1, c1 = train(cfg, datasets=[weather])
    p2, c2 = train(cfg, datasets=[weather])
    assert np.array_equal(p1.flat, p2.flat)
    assert c1.points == c2.points
    assert not c1.meta["diverged"]
    assert c1.meta["total_steps"] >= 200


def test_multi_worker_run_completes(weather, mixed_small):
    cfg = small_config(worker_count=3, total_steps=300)
    params, curve = train(cfg, datasets=[weather, mixed_small])
    assert curve.meta["total_steps"] >= 300
    assert curve.points
    assert np.all(np.isfinite(params.flat))


def test_penalty_variant_trains(weather):
    cfg = small_config(variant="penalty", total_steps=150)
    params, curve = train(cfg, datasets=[weather])
    assert not curve.meta["diverged"]


def test_dqn_variant_stores_and_learns(weather):
    cfg = small_config(variant="dqn", total_steps=150, batch_size=8)
    params, curve = train(cfg, datasets=[weather])
    assert curve.meta["total_steps"] >= 150
    assert np.all(np.isfinite(params.flat))


def test_replay_buffer_contract(rng):
    buf = ReplayBuffer(capacity=5)
    for i in range(9):
        buf.push((i,))
    assert len(buf) == 5
    batch = buf.sample(3, rng)
    assert len(batch) == 3
    assert all(item[0] >= 4 for item in batch)


def test_shared_params_snapshot_is_complete():
    sizes = NetSizes(lstm_hidden=4, block_dim=4)
    params = NetworkParams.initialize(sizes, np.random.default_rng(0))
    store = SharedParams(params, lr=1e-2, grad_clip=5.0)
    snap = store.snapshot()
    grads = np.ones_like(params.flat)
    store.apply(grads)
    # old snapshot untouched; new snapshot is a different complete vector
    assert np.array_equal(snap.flat, params.flat)
    assert not np.array_equal(store.snapshot().flat, params.flat)
    assert store.updates == 1


def test_gradient_clipping_bounds_update_norm():
    sizes = NetSizes(lstm_hidden=4, block_dim=4)
    params = NetworkParams.initialize(sizes, np.random.default_rng(0))
    store = SharedParams(params, lr=1.0, grad_clip=5.0)
    huge = np.full_like(params.flat, 100.0)
    store.apply(huge)
    assert float(np.linalg.norm(store._m / 0.1)) <= 5.0 + 1e-9


def test_checkpoints_written(tmp_path, weather):
    cfg = small_config(
        worker_count=2, total_steps=120, sync_interval=60,
        checkpoint_dir=str(tmp_path / "ck"),
    )
    params, _ = train(cfg, datasets=[weather])
    final = tmp_path / "ck" / "final.ckpt"
    assert final.exists()
    loaded = NetworkParams.load(final)
    assert np.array_equal(loaded.flat, params.flat)


def test_curve_csv_and_aggregation(tmp_path, weather):
    cfg = small_config()
    _, curve = train(cfg, datasets=[weather])
    out = tmp_path / "curve.csv"
    curve.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "step,mean_return,episodes"
    assert len(lines) == len(curve.points) + 1

    agg = aggregate_curves([curve, curve])
    assert agg["runs"] == 2
    for row in agg["series"]:
        assert row["std"] == pytest.approx(0.0)

    # re-aggregation of identical runs reproduces the mean exactly
    for row, p in zip(agg["series"], curve.points):
        assert row["mean"] == pytest.approx(p.mean_return)


def test_curve_band_mean(weather):
    curve = ReturnCurve(
        points=[],
        meta={},
    )
    assert np.isnan(curve.mean_return_over(0.0, 0.1))


def test_evaluate_with_untrained_params(weather, mixed_small):
    sizes = NetSizes(lstm_hidden=8, block_dim=8)
    params = NetworkParams.initialize(sizes, np.random.default_rng(0))
    stats = evaluate(params, [weather, mixed_small], quota=120, seed=3)
    assert stats.n_dashboards > 0
    assert stats.steps >= 240
    assert np.isfinite(stats.charts_mean)
    assert set(stats.wall_time_per_dataset) == {"seattle-weather", "mixed_small"}


def test_evaluate_random_policy(weather):
    stats = evaluate(None, [weather], quota=100, seed=1)
    assert stats.n_dashboards > 0


def test_episode_trace_jsonl(tmp_path, weather, rng):
    import io
    import json

    from dashrl.rollout import run_episode

    env = DashboardEnv(weather)
    buf = io.StringIO()
    result = run_episode(env, None, rng, trace=buf)
    lines = [json.loads(l) for l in buf.getvalue().strip().splitlines()]
    assert len(lines) == len(result.steps)
    assert lines[-1]["done"] is True
    assert {"state", "decision", "reward", "done"} <= set(lines[0])
    total = sum(l["reward"] for l in lines)
    assert total == pytest.approx(result.episode_return)


def test_feature_dump_flag(tmp_path, weather, monkeypatch):
    from dashrl.charts import ChartSpec, DashboardState, Encoding
    from dashrl.encode import encode_dashboard

    monkeypatch.setenv("DASHRL_DUMP_FEATURES", str(tmp_path / "dumps"))
    state = DashboardState(
        key_column="wind",
        charts=(
            ChartSpec(mark="point", x=Encoding("wind"), y=Encoding("temp_max")),
        ),
    )
    feats = encode_dashboard(state, weather)
    dumps = list((tmp_path / "dumps").glob("*.csv"))
    assert dumps
    loaded = np.loadtxt(dumps[0], delimiter=",")
    assert loaded.shape == (feats.matrix.shape[1],)


def test_aggregate_to_csv(tmp_path, weather):
    from dashrl.trainer import aggregate_to_csv

    cfg = small_config()
    _, curve = train(cfg, datasets=[weather])
    agg = aggregate_curves([curve, curve])
    out = tmp_path / "agg.csv"
    aggregate_to_csv(agg, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "step,mean,std"
    assert len(lines) == len(agg["series"]) + 1


def test_config_yaml_round_trip(tmp_path):
    text = """
total_steps: 5000
worker_count: 2
seed: 3
variant: independent_heads
lr: 0.0003
datasets:
  - data/cars.csv
reward:
  alpha: 3.0
  n_best: 5
env:
  max_steps: 50
"""
    path = tmp_path / "cfg.yaml"
    path.write_text(text)
    cfg = TrainConfig.from_yaml(path)
    assert cfg.total_steps == 5000
    assert cfg.variant == "independent_heads"
    assert cfg.reward.alpha == 3.0
    assert cfg.datasets == ("data/cars.csv",)
