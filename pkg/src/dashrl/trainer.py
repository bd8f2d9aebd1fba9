"""Asynchronous advantage actor-critic training plus the ablation baselines.

Worker threads each own a private environment; they read complete parameter
snapshots without locking (snapshots are swapped atomically) and apply whole
gradient updates under the optimizer lock. Staleness between snapshot and
update is tolerated by design.
"""

from __future__ import annotations

import collections
import csv
import json
import logging
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .config import EnvConfig, RewardConfig
from .data import Dataset, load_dataset
from .encode import encode_dashboard
from .env import (
    ACTION,
    ACTIONS,
    ACTIVE_HEADS,
    DUMMY,
    HEAD_ARITIES,
    HEAD_NAMES,
    ActionDecision,
    DashboardEnv,
)
from .net import NetSizes, NetworkParams, PolicyNetwork
from .rollout import run_episode

log = logging.getLogger(__name__)

VARIANTS = ("full", "independent_heads", "penalty", "dqn")
_VARIANT_ALIASES = {"ind": "independent_heads", "pen": "penalty"}


@dataclass(frozen=True)
class VariantSpec:
    """Module wiring for one ablation variant."""

    name: str
    fused_blocks: bool
    constrained: bool
    algorithm: str  # "a3c" | "dqn"


def make_variant(tag: str) -> VariantSpec:
    name = _VARIANT_ALIASES.get(tag, tag)
    if name == "full":
        return VariantSpec("full", fused_blocks=True, constrained=True, algorithm="a3c")
    if name == "independent_heads":
        return VariantSpec(
            "independent_heads", fused_blocks=False, constrained=True, algorithm="a3c"
        )
    if name == "penalty":
        return VariantSpec(
            "penalty", fused_blocks=True, constrained=False, algorithm="a3c"
        )
    if name == "dqn":
        return VariantSpec("dqn", fused_blocks=True, constrained=True, algorithm="dqn")
    raise ValueError(f"unknown variant: {tag}")


@dataclass
class TrainConfig:
    total_steps: int = 500_000
    worker_count: int = 4
    datasets: tuple = ()
    seed: int = 0
    sync_interval: int = 10_000
    variant: str = "full"
    run_count: int = 1
    lr: float = 1e-4
    grad_clip: float = 5.0
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    log_every: int = 1_000
    lstm_hidden: int = 128
    block_dim: int = 64
    reward: RewardConfig = field(default_factory=RewardConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    checkpoint_dir: str | None = None
    # counts environment steps; set to "updates" to count gradient updates
    step_counter: str = "env"
    # dqn-only knobs
    replay_capacity: int = 20_000
    batch_size: int = 32
    epsilon_start: float = 1.0
    epsilon_final: float = 0.1
    learn_every: int = 4

    @classmethod
    def from_yaml(cls, path: str | Path) -> "TrainConfig":
        raw = yaml.safe_load(Path(path).read_text()) or {}
        reward = RewardConfig(**raw.pop("reward", {}))
        env = EnvConfig(**raw.pop("env", {}))
        if "datasets" in raw:
            raw["datasets"] = tuple(raw["datasets"])
        return cls(reward=reward, env=env, **raw)

    def net_sizes(self, fused: bool) -> NetSizes:
        return NetSizes(
            lstm_hidden=self.lstm_hidden,
            block_dim=self.block_dim,
            fused_blocks=fused,
        )


@dataclass(frozen=True)
class CurvePoint:
    step: int
    mean_return: float
    episodes: int


@dataclass
class ReturnCurve:
    points: list[CurvePoint]
    meta: dict = field(default_factory=dict)

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "mean_return", "episodes"])
            for p in self.points:
                writer.writerow([p.step, f"{p.mean_return:.6f}", p.episodes])

    def to_json(self) -> dict:
        return {
            "points": [
                {"step": p.step, "mean_return": p.mean_return, "episodes": p.episodes}
                for p in self.points
            ],
            "meta": self.meta,
        }

    def mean_return_over(self, lo_frac: float, hi_frac: float) -> float:
        """Mean of curve points whose step falls inside the given fraction
        band of the final step."""
        if not self.points:
            return float("nan")
        last = self.points[-1].step
        chosen = [
            p.mean_return
            for p in self.points
            if lo_frac * last <= p.step <= hi_frac * last
        ]
        return float(np.mean(chosen)) if chosen else float("nan")


def aggregate_curves(curves: Sequence[ReturnCurve]) -> dict:
    """Across-run mean and std per logging bucket."""
    buckets: dict[int, list[float]] = collections.defaultdict(list)
    for curve in curves:
        for p in curve.points:
            buckets[p.step].append(p.mean_return)
    rows = [
        {
            "step": step,
            "mean": float(np.mean(vals)),
            "std": float(np.std(vals)),
            "runs": len(vals),
        }
        for step, vals in sorted(buckets.items())
    ]
    return {"series": rows, "runs": len(curves)}


def aggregate_to_csv(aggregate: dict, path: str | Path) -> None:
    """Write an aggregated curve as (step, mean, std) CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mean", "std"])
        for row in aggregate["series"]:
            writer.writerow([row["step"], f"{row['mean']:.6f}", f"{row['std']:.6f}"])


class SharedParams:
    """Shared parameter store with lock-free snapshot reads.

    Writers serialize on a lock, build the updated flat vector, and swap the
    snapshot reference atomically, so readers always observe a complete
    parameter vector (possibly slightly stale).
    """

    def __init__(self, params: NetworkParams, lr: float, grad_clip: float):
        self._current = params
        self.lr = lr
        self.grad_clip = grad_clip
        self._lock = threading.Lock()
        self._m = np.zeros_like(params.flat)
        self._v = np.zeros_like(params.flat)
        self._scratch = np.zeros_like(params.flat)
        self._t = 0
        self.updates = 0

    def snapshot(self) -> NetworkParams:
        return self._current

    def apply(self, grads: np.ndarray) -> None:
        norm = float(np.linalg.norm(grads))
        if norm > self.grad_clip:
            grads = grads * (self.grad_clip / norm)
        with self._lock:
            self._t += 1
            beta1, beta2, eps = 0.9, 0.999, 1e-8
            scratch = self._scratch
            self._m *= beta1
            np.multiply(grads, 1 - beta1, out=scratch)
            self._m += scratch
            self._v *= beta2
            np.multiply(grads, grads, out=scratch)
            scratch *= 1 - beta2
            self._v += scratch
            scale = self.lr * np.sqrt(1 - beta2**self._t) / (1 - beta1**self._t)
            np.sqrt(self._v, out=scratch)
            scratch += eps
            np.divide(self._m, scratch, out=scratch)
            scratch *= scale
            new_flat = self._current.flat - scratch
            self._current = NetworkParams(self._current.sizes, new_flat)
            self.updates += 1


class _Counter:
    def __init__(self):
        self.value = 0
        self._lock = threading.Lock()

    def add(self, n: int) -> int:
        with self._lock:
            self.value += n
            return self.value


class ReplayBuffer:
    """Uniform-sampling transition memory for the DQN baseline."""

    def __init__(self, capacity: int):
        self.buffer: collections.deque = collections.deque(maxlen=capacity)
        self._lock = threading.Lock()

    def push(self, transition: tuple) -> None:
        with self._lock:
            self.buffer.append(transition)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[tuple]:
        with self._lock:
            idx = rng.integers(0, len(self.buffer), size=batch_size)
            return [self.buffer[int(i)] for i in idx]

    def __len__(self) -> int:
        return len(self.buffer)


def _resolve_datasets(items: Sequence) -> list[Dataset]:
    out = []
    for item in items:
        if isinstance(item, Dataset):
            out.append(item)
        else:
            out.append(load_dataset(Path(item)))
    if not out:
        raise ValueError("no datasets configured")
    return out


def train(
    config: TrainConfig, datasets: Sequence[Dataset] | None = None
) -> tuple[NetworkParams, ReturnCurve]:
    """Train one run of the configured variant; returns final parameters and
    the logged return curve."""
    variant = make_variant(config.variant)
    data = _resolve_datasets(datasets if datasets is not None else config.datasets)
    seeds = np.random.SeedSequence(config.seed)
    init_rng = np.random.default_rng(seeds.spawn(1)[0])
    params = NetworkParams.initialize(config.net_sizes(variant.fused_blocks), init_rng)
    store = SharedParams(params, lr=config.lr, grad_clip=config.grad_clip)
    counter = _Counter()
    episode_counter = _Counter()
    records: list[tuple[int, float]] = []
    records_lock = threading.Lock()
    stop = threading.Event()
    diverged = threading.Event()
    replay = ReplayBuffer(config.replay_capacity) if variant.algorithm == "dqn" else None

    env_config = replace(config.env, allow_invalid=not variant.constrained)

    worker_seeds = seeds.spawn(config.worker_count)

    def a3c_worker(worker_id: int) -> None:
        rng = np.random.default_rng(worker_seeds[worker_id])
        envs = [
            DashboardEnv(ds, env_config, config.reward, key_rotation_start=worker_id)
            for ds in data
        ]
        while not stop.is_set() and counter.value < config.total_steps:
            episode_idx = episode_counter.add(1) - 1
            env = envs[episode_idx % len(envs)]
            policy = PolicyNetwork(
                store.snapshot(),
                value_coef=config.value_coef,
                entropy_coef=config.entropy_coef,
            )
            result = run_episode(env, policy, rng, shuffle=True)
            loss, grads, _ = policy.episode_loss(result.steps)
            if not np.isfinite(loss) or not np.all(np.isfinite(grads)):
                diverged.set()
                stop.set()
                return
            store.apply(grads)
            if config.step_counter == "updates":
                global_step = counter.add(1)
            else:
                global_step = counter.add(len(result.steps))
            with records_lock:
                records.append((global_step, result.episode_return))
            if global_step >= config.total_steps:
                stop.set()

    def dqn_worker(worker_id: int) -> None:
        rng = np.random.default_rng(worker_seeds[worker_id])
        envs = [
            DashboardEnv(ds, env_config, config.reward, key_rotation_start=worker_id)
            for ds in data
        ]
        since_learn = 0
        while not stop.is_set() and counter.value < config.total_steps:
            episode_idx = episode_counter.add(1) - 1
            env = envs[episode_idx % len(envs)]
            policy = PolicyNetwork(store.snapshot())
            frac = min(1.0, counter.value / max(1, config.total_steps // 2))
            epsilon = config.epsilon_start + frac * (
                config.epsilon_final - config.epsilon_start
            )
            episode_return, steps_taken = _dqn_episode(
                env, policy, replay, rng, epsilon
            )
            since_learn += steps_taken
            while since_learn >= config.learn_every:
                since_learn -= config.learn_every
                if len(replay) >= config.batch_size:
                    policy = PolicyNetwork(store.snapshot())
                    grads = _dqn_batch_gradients(
                        policy, replay.sample(config.batch_size, rng)
                    )
                    if not np.all(np.isfinite(grads)):
                        diverged.set()
                        stop.set()
                        return
                    store.apply(grads)
            global_step = counter.add(steps_taken)
            with records_lock:
                records.append((global_step, episode_return))
            if global_step >= config.total_steps:
                stop.set()

    target = a3c_worker if variant.algorithm == "a3c" else dqn_worker
    start_time = time.time()
    checkpoint_dir = Path(config.checkpoint_dir) if config.checkpoint_dir else None

    if config.worker_count == 1:
        target(0)
    else:
        threads = [
            threading.Thread(target=target, args=(i,), daemon=True)
            for i in range(config.worker_count)
        ]
        for t in threads:
            t.start()
        next_checkpoint = config.sync_interval
        while any(t.is_alive() for t in threads):
            for t in threads:
                t.join(timeout=0.2)
            if checkpoint_dir and counter.value >= next_checkpoint:
                store.snapshot().save(checkpoint_dir / f"step_{next_checkpoint}.ckpt")
                next_checkpoint += config.sync_interval

    final = store.snapshot()
    if checkpoint_dir:
        final.save(checkpoint_dir / "final.ckpt")

    points = _bucket_records(records, config.log_every)
    curve = ReturnCurve(
        points=points,
        meta={
            "variant": variant.name,
            "seed": config.seed,
            "total_steps": counter.value,
            "updates": store.updates,
            "episodes": episode_counter.value,
            "diverged": diverged.is_set(),
            "wall_time_s": time.time() - start_time,
            "workers": config.worker_count,
        },
    )
    return final, curve


def _bucket_records(
    records: Sequence[tuple[int, float]], log_every: int
) -> list[CurvePoint]:
    buckets: dict[int, list[float]] = collections.defaultdict(list)
    for step, ret in records:
        buckets[(max(step - 1, 0) // log_every + 1) * log_every].append(ret)
    return [
        CurvePoint(step=s, mean_return=float(np.mean(v)), episodes=len(v))
        for s, v in sorted(buckets.items())
    ]


# ---------------------------------------------------------------------------
# DQN pieces


def _greedy_masked(logits: np.ndarray, mask: np.ndarray) -> int:
    masked = np.where(mask, logits, -np.inf)
    return int(np.argmax(masked))


def _dqn_decision(
    policy: PolicyNetwork,
    out,
    masks,
    rng: np.random.Generator,
    epsilon: float,
) -> ActionDecision:
    """Sequential epsilon-greedy selection under the same masks."""
    selections = [DUMMY] * len(HEAD_NAMES)
    stored: list = [None] * len(HEAD_NAMES)

    def pick(head: int) -> None:
        mask = masks.head_mask(head, selections)
        options = np.flatnonzero(mask)
        if rng.random() < epsilon:
            choice = int(options[rng.integers(len(options))])
        else:
            choice = _greedy_masked(out.head_logits[head], mask)
        selections[head] = choice
        stored[head] = tuple(bool(b) for b in mask)

    pick(ACTION)
    action = ACTIONS[selections[ACTION]]
    for head in ACTIVE_HEADS[action][1:]:
        pick(head)
    return ActionDecision(action=action, choices=tuple(selections), masks=tuple(stored))


def _dqn_episode(env, policy, replay, rng, epsilon) -> tuple[float, int]:
    state = env.reset()
    total = 0.0
    steps = 0
    done = False
    feats = encode_dashboard(state, env.dataset).matrix
    while not done:
        masks = env.masks()
        out = policy.forward(feats, masks)
        decision = _dqn_decision(policy, out, masks, rng, epsilon)
        result = env.step(decision)
        next_feats = encode_dashboard(result.state, env.dataset).matrix
        next_action_mask = (
            tuple(bool(b) for b in env.masks().head_mask(ACTION, [DUMMY] * len(HEAD_NAMES)))
            if not result.done
            else None
        )
        replay.push((feats, decision, result.reward, next_feats, next_action_mask))
        total += result.reward
        steps += 1
        feats = next_feats
        done = result.done
    return total, steps


def _dqn_batch_gradients(policy: PolicyNetwork, batch: list[tuple]) -> np.ndarray:
    """TD(0) regression of the joint Q toward r + max_a Q(s', a)."""
    grads = np.zeros_like(policy.params.flat)
    gview = NetworkParams(policy.sizes, grads)
    n = len(batch)
    for feats, decision, reward, next_feats, next_action_mask in batch:
        out = policy.forward(feats, [np.ones(a, bool) for a in HEAD_ARITIES])
        active = ACTIVE_HEADS[decision.action]
        q_pred = float(
            np.mean([out.head_logits[h][decision.choices[h]] for h in active])
        )
        if next_action_mask is None:
            target = reward
        else:
            nxt = policy.forward(next_feats, [np.ones(a, bool) for a in HEAD_ARITIES])
            mask = np.asarray(next_action_mask, bool)
            target = reward + float(
                np.max(np.where(mask, nxt.head_logits[ACTION], -np.inf))
            )
        d_pred = 2.0 * (q_pred - target) / n
        d_logits = [np.zeros_like(lg) for lg in out.head_logits]
        for h in active:
            d_logits[h][decision.choices[h]] = d_pred / len(active)
        policy._backward(out.cache, d_logits, 0.0, gview)
    return grads


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class GenerationStats:
    n_dashboards: int
    charts_mean: float
    charts_std: float
    types_mean: float
    types_std: float
    return_mean: float
    return_std: float
    steps: int
    wall_time_per_dataset: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "n_dashboards": self.n_dashboards,
            "charts_mean": self.charts_mean,
            "charts_std": self.charts_std,
            "types_mean": self.types_mean,
            "types_std": self.types_std,
            "return_mean": self.return_mean,
            "return_std": self.return_std,
            "steps": self.steps,
            "wall_time_per_dataset": self.wall_time_per_dataset,
        }


def evaluate(
    params: NetworkParams | None,
    datasets: Sequence[Dataset],
    quota: int = 1_000,
    seed: int = 0,
    env_config: EnvConfig = EnvConfig(),
    reward_config: RewardConfig = RewardConfig(),
) -> GenerationStats:
    """Sampled rollouts under a per-dataset step quota; reports dashboard
    statistics. ``params`` None falls back to the masked-random policy."""
    rng = np.random.default_rng(seed)
    policy = PolicyNetwork(params) if params is not None else None
    charts: list[int] = []
    types: list[int] = []
    returns: list[float] = []
    walls: dict[str, float] = {}
    steps_total = 0
    for ds in datasets:
        env = DashboardEnv(ds, env_config, reward_config)
        begin = time.time()
        spent = 0
        while spent < quota:
            result = run_episode(env, policy, rng, keep_outputs=False)
            spent += len(result.steps)
            charts.append(len(result.final_state.charts))
            types.append(len({c.mark for c in result.final_state.charts}))
            returns.append(result.episode_return)
        walls[ds.name] = time.time() - begin
        steps_total += spent
    return GenerationStats(
        n_dashboards=len(charts),
        charts_mean=float(np.mean(charts)),
        charts_std=float(np.std(charts)),
        types_mean=float(np.mean(types)),
        types_std=float(np.std(types)),
        return_mean=float(np.mean(returns)),
        return_std=float(np.std(returns)),
        steps=steps_total,
        wall_time_per_dataset=walls,
    )
