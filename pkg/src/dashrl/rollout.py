"""Episode execution shared by training, evaluation, and recommendation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO

import numpy as np

from .charts import DashboardState
from .encode import encode_dashboard
from .env import ActionDecision, DashboardEnv, sample_masked_uniform
from .net.policy import PolicyNetwork, PolicyOutput
from .rewards import RewardBreakdown


@dataclass
class EpisodeResult:
    steps: list[tuple[PolicyOutput | None, ActionDecision, float]]
    final_state: DashboardState
    breakdown: RewardBreakdown
    episode_return: float


def run_episode(
    env: DashboardEnv,
    policy: PolicyNetwork | None,
    rng: np.random.Generator,
    start: DashboardState | None = None,
    seed_key: str | None = None,
    shuffle: bool = False,
    keep_outputs: bool = True,
    trace: IO[str] | None = None,
) -> EpisodeResult:
    """Run one episode to completion.

    ``policy`` None means the uniform masked-random policy. ``shuffle``
    randomizes the chart row order fed to the encoder (training-time
    augmentation); the environment state itself keeps canonical order.
    """
    state = env.reset(start=start, seed_key=seed_key)
    steps: list = []
    total = 0.0
    done = False
    while not done:
        masks = env.masks()
        if policy is None:
            out = None
            decision = sample_masked_uniform(masks, rng)
        else:
            order = None
            if shuffle and len(state.charts) > 1:
                order = rng.permutation(len(state.charts)).tolist()
            feats = encode_dashboard(state, env.dataset, order)
            out = policy.forward(feats, masks)
            decision = policy.sample(out, rng)
        result = env.step(decision)
        steps.append((out if keep_outputs else None, decision, result.reward))
        if trace is not None:
            trace.write(
                json.dumps(
                    {
                        "state": state.to_dict(),
                        "decision": decision.to_dict(),
                        "reward": result.reward,
                        "done": result.done,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        state = result.state
        total += result.reward
        done = result.done
    return EpisodeResult(
        steps=steps,
        final_state=state,
        breakdown=env.breakdown,
        episode_return=total,
    )
