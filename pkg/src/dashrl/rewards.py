"""Presentation and insight rewards, the combined score, and step deltas."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .charts import DashboardState
from .config import MAX_CONTEXT_COLUMNS, RewardConfig
from .data import Dataset
from .insights import InsightRecord, detect_dashboard_insights

N_MARK_TYPES = 4


@dataclass(frozen=True)
class RewardBreakdown:
    """Component scores of one dashboard state."""

    dr_chart_types: float
    dr_columns: float
    pr: float
    insight_sum: float
    cr: float
    r_immediate: float = 0.0

    def to_dict(self) -> dict:
        return {
            "dr_chart_types": self.dr_chart_types,
            "dr_columns": self.dr_columns,
            "pr": self.pr,
            "insight_sum": self.insight_sum,
            "cr": self.cr,
            "r_immediate": self.r_immediate,
        }


EMPTY_BREAKDOWN = RewardBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def diversity_reward(c_used: int, c_total: int, alpha: float) -> float:
    """Concave diminishing-returns score 1 - exp(-alpha * c_used / c_total)."""
    if not 0 <= c_used <= c_total or c_total < 1:
        raise ValueError(f"invalid diversity counts: {c_used}/{c_total}")
    return 1.0 - math.exp(-alpha * c_used / c_total)


def parsimony_reward(n: int, n_best: int, n_max: int) -> float:
    """Piecewise sine that rises to 1 at n_best and falls back to 0 at n_max."""
    if not 0 <= n <= n_max:
        raise ValueError(f"chart count {n} outside [0, {n_max}]")
    if not 0 < n_best < n_max:
        raise ValueError("need 0 < n_best < n_max")
    if n <= n_best:
        return math.sin(math.pi / 2 * n / n_best)
    return math.sin(math.pi / 2 * (1 + (n - n_best) / (n_max - n_best)))


def insight_reward(records: Sequence[InsightRecord]) -> float:
    """Sum of insight weights (records must already be deduplicated)."""
    return float(sum(r.reward_weight for r in records))


def combine_components(
    dr_chart_types: float,
    dr_columns: float,
    pr: float,
    insight_sum: float,
    config: RewardConfig = RewardConfig(),
) -> RewardBreakdown:
    cr = (
        config.w_diversity * (dr_chart_types + dr_columns)
        + config.w_parsimony * pr
        + config.w_insight * insight_sum
    )
    return RewardBreakdown(
        dr_chart_types=dr_chart_types,
        dr_columns=dr_columns,
        pr=pr,
        insight_sum=insight_sum,
        cr=cr,
    )


def score_dashboard(
    state: DashboardState,
    dataset: Dataset,
    config: RewardConfig = RewardConfig(),
    insights: Sequence[InsightRecord] | None = None,
) -> RewardBreakdown:
    """Combined reward of a dashboard state (chart-order invariant)."""
    marks_used = len({c.mark for c in state.charts})
    columns_used = len(
        {col for c in state.charts for col in c.referenced_columns()}
    )
    c_total_columns = min(len(dataset.columns), MAX_CONTEXT_COLUMNS)
    if insights is None:
        insights = detect_dashboard_insights(state, dataset, config)
    return combine_components(
        dr_chart_types=diversity_reward(marks_used, N_MARK_TYPES, config.alpha),
        dr_columns=diversity_reward(columns_used, c_total_columns, config.alpha),
        pr=parsimony_reward(len(state.charts), config.n_best, config.n_max),
        insight_sum=insight_reward(insights),
        config=config,
    )


def immediate_reward(prev: RewardBreakdown, curr: RewardBreakdown) -> float:
    """Step reward: the change in combined score."""
    return curr.cr - prev.cr


def with_immediate(
    prev: RewardBreakdown, curr: RewardBreakdown
) -> RewardBreakdown:
    return replace(curr, r_immediate=immediate_reward(prev, curr))
