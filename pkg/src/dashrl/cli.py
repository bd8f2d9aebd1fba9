"""Command-line interface: train, generate, serve, ablate, eval, bench."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

import click
import numpy as np

from .data import load_dataset
from .generation import generate as run_generate
from .net import NetSizes, NetworkParams, PolicyNetwork
from .trainer import (
    TrainConfig,
    aggregate_curves,
    aggregate_to_csv,
    evaluate,
    make_variant,
    train as run_train,
)


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Reinforcement-learning dashboard generation engine."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default="runs/train", show_default=True)
def train(config_path: str, out: str) -> None:
    """Train a model from a YAML configuration file."""
    cfg = TrainConfig.from_yaml(config_path)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.checkpoint_dir is None:
        cfg.checkpoint_dir = str(out_dir / "checkpoints")
    params, curve = run_train(cfg)
    curve.to_csv(out_dir / "curve.csv")
    (out_dir / "curve.json").write_text(json.dumps(curve.to_json(), indent=2))
    params.save(out_dir / "final.ckpt")
    click.echo(f"trained {curve.meta['total_steps']} steps "
               f"({curve.meta['episodes']} episodes) -> {out_dir}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--quota", default=1000, show_default=True)
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Write topics JSON here.")
def generate(csv_path: str, quota: int, checkpoint: str | None, seed: int, out: str | None) -> None:
    """Generate topic-grouped dashboards for a CSV dataset."""
    dataset = load_dataset(Path(csv_path))
    params = NetworkParams.load(checkpoint) if checkpoint else None
    start = time.time()
    topics = run_generate(dataset, params, quota=quota, seed=seed)
    elapsed = time.time() - start
    click.echo(f"generated {sum(len(t.dashboards) for t in topics)} dashboards "
               f"in {len(topics)} topics ({elapsed:.1f}s)")
    for topic in topics:
        best = topic.dashboards[0]
        click.echo(
            f"  topic {topic.key_column!r}: {len(topic.dashboards)} dashboards, "
            f"best return {best.episode_return:.3f} "
            f"({len(best.state.charts)} charts)"
        )
    if out:
        payload = [
            {"key_column": t.key_column, "dashboards": [d.to_dict() for d in t.dashboards]}
            for t in topics
        ]
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True))
        click.echo(f"wrote {out}")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="dashrl-data", show_default=True)
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
def serve(port: int, host: str, data_dir: str, checkpoint: str | None) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir, checkpoint=checkpoint)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--variants", default="full,ind,pen,dqn", show_default=True)
@click.option("--steps", default=50_000, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--seeds", default=3, show_default=True)
@click.option(
    "--datasets",
    default="data/cars.csv,data/movies.csv,data/seattle-weather.csv",
    show_default=True,
)
@click.option("--out", type=click.Path(), default="runs/ablation", show_default=True)
@click.option("--lr", default=1e-4, show_default=True)
def ablate(variants: str, steps: int, workers: int, seeds: int, datasets: str, out: str, lr: float) -> None:
    """Run the ablation grid and write per-run and aggregated curves."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = [load_dataset(Path(p.strip())) for p in datasets.split(",")]
    summary = {}
    for tag in variants.split(","):
        variant = make_variant(tag.strip())
        curves = []
        for seed in range(seeds):
            cfg = TrainConfig(
                total_steps=steps,
                worker_count=workers,
                seed=seed,
                variant=variant.name,
                lr=lr,
            )
            t0 = time.time()
            params, curve = run_train(cfg, datasets=data)
            curve.to_csv(out_dir / f"{variant.name}_seed{seed}.csv")
            (out_dir / f"{variant.name}_seed{seed}.curve.json").write_text(
                json.dumps(curve.to_json())
            )
            params.save(out_dir / f"{variant.name}_seed{seed}.ckpt")
            curves.append(curve)
            click.echo(
                f"{variant.name} seed {seed}: final-band mean "
                f"{curve.mean_return_over(0.9, 1.0):.3f} "
                f"({time.time() - t0:.0f}s)"
            )
        agg = aggregate_curves(curves)
        (out_dir / f"{variant.name}_aggregate.json").write_text(
            json.dumps(agg, indent=2)
        )
        aggregate_to_csv(agg, out_dir / f"{variant.name}_aggregate.csv")
        summary[variant.name] = {
            "first_band": [c.mean_return_over(0.0, 0.1) for c in curves],
            "final_band": [c.mean_return_over(0.9, 1.0) for c in curves],
        }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    click.echo(json.dumps(summary, indent=2))


@main.command(name="eval")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option(
    "--datasets",
    default="data/cars.csv,data/movies.csv,data/seattle-weather.csv",
    show_default=True,
)
@click.option("--quota", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def eval_cmd(checkpoint: str, datasets: str, quota: int, seed: int) -> None:
    """Evaluate a checkpoint's generation statistics."""
    params = NetworkParams.load(checkpoint)
    data = [load_dataset(Path(p.strip())) for p in datasets.split(",")]
    stats = evaluate(params, data, quota=quota, seed=seed)
    click.echo(json.dumps(stats.to_dict(), indent=2))


@main.command()
@click.option("--rows", default=6, show_default=True, help="Chart rows per forward.")
@click.option("--hidden", default=128, show_default=True)
@click.option("--repeats", default=200, show_default=True)
def bench(rows: int, hidden: int, repeats: int) -> None:
    """Benchmark the compiled kernels against the numpy fallback."""
    from .net.backend import HAVE_COMPILED, get_kernels

    rng = np.random.default_rng(0)
    sizes = NetSizes(lstm_hidden=hidden)
    xp = rng.normal(size=(rows, 4 * hidden))
    Wh = rng.normal(size=(hidden, 4 * hidden)) * 0.1
    d_last = rng.normal(size=hidden)

    backends = ["python"] + (["compiled"] if HAVE_COMPILED else [])
    results = {}
    for name in backends:
        k = get_kernels(name)
        h, cache = k.lstm_sequence_forward(xp, Wh)  # warm-up
        t0 = time.perf_counter()
        for _ in range(repeats):
            h, cache = k.lstm_sequence_forward(xp, Wh)
        fwd = (time.perf_counter() - t0) / repeats
        t0 = time.perf_counter()
        for _ in range(repeats):
            k.lstm_sequence_backward(cache, Wh, d_last)
        bwd = (time.perf_counter() - t0) / repeats
        results[name] = (fwd, bwd)
        click.echo(
            f"{name:>9}: forward {fwd * 1e6:8.1f} us   backward {bwd * 1e6:8.1f} us"
        )
    if len(results) == 2:
        f_ratio = results["python"][0] / results["compiled"][0]
        b_ratio = results["python"][1] / results["compiled"][1]
        click.echo(f"speedup: forward x{f_ratio:.2f}, backward x{b_ratio:.2f}")

    # end-to-end policy forward comparison
    from .data import load_dataset as _ld
    from .encode import encode_dashboard
    from .env import DashboardEnv

    data_path = Path(__file__).parent.parent.parent / "data" / "cars.csv"
    if data_path.exists():
        ds = _ld(data_path)
        env = DashboardEnv(ds)
        env.reset(seed_key="Horsepower")
        feats = encode_dashboard(env.state, ds)
        masks = env.masks()
        params = NetworkParams.initialize(sizes, rng)
        for name in backends:
            policy = PolicyNetwork(params, backend=name)
            policy.forward(feats, masks)
            t0 = time.perf_counter()
            for _ in range(repeats):
                policy.forward(feats, masks)
            per = (time.perf_counter() - t0) / repeats
            click.echo(f"{name:>9}: full policy forward {per * 1e6:8.1f} us")


if __name__ == "__main__":
    main()
