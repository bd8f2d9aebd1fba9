"""Shared configuration values and their defaults."""

from __future__ import annotations

from dataclasses import dataclass

#: Upper bound on the columns the agent can address; datasets with more
#: columns are accepted but only the first MAX_CONTEXT_COLUMNS are encoded.
MAX_CONTEXT_COLUMNS = 10

#: Hard cap on dashboard size (also the arity of the remove head).
MAX_CHARTS = 10

#: Episode length cap when the agent never terminates on its own.
MAX_EPISODE_STEPS = 50


@dataclass(frozen=True)
class RewardConfig:
    """Constants of the dashboard scoring function."""

    alpha: float = 3.0
    n_best: int = 5
    n_max: int = MAX_CHARTS
    w_diversity: float = 0.33
    w_parsimony: float = 0.33
    w_insight: float = 0.1
    correlation_threshold: float = 0.6


@dataclass(frozen=True)
class EnvConfig:
    """Environment behaviour switches."""

    max_steps: int = MAX_EPISODE_STEPS
    n_max: int = MAX_CHARTS
    max_columns: int = MAX_CONTEXT_COLUMNS
    # Penalty-variant mode: grammar masks are dropped and invalid decisions
    # yield a fixed negative reward instead of raising.
    allow_invalid: bool = False
    invalid_penalty: float = -1.0


@dataclass(frozen=True)
class NetConfig:
    """Network width configuration."""

    lstm_hidden: int = 128
    block_dim: int = 64
    fused_blocks: bool = True

    @property
    def shared_dim(self) -> int:
        return 2 * self.lstm_hidden
