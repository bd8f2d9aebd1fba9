"""Topic generation, online recommendation, and dashboard diffs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
import numpy as np

from .charts import ChartSpec, DashboardState
from .config import EnvConfig, RewardConfig
from .data import Dataset
from .env import DashboardEnv, build_chart_from_tuple
from .insights import InsightRecord, detect_dashboard_insights
from .net import NetworkParams, PolicyNetwork
from .rewards import RewardBreakdown, score_dashboard
from .rollout import run_episode

log = logging.getLogger(__name__)

MIN_SENSIBLE_QUOTA = 50


@dataclass
class GeneratedDashboard:
    state: DashboardState
    episode_return: float
    breakdown: RewardBreakdown
    insights: list[InsightRecord]

    def to_dict(self) -> dict:
        return {
            "state": self.state.to_dict(),
            "episode_return": self.episode_return,
            "breakdown": self.breakdown.to_dict(),
            "insights": [r.to_dict() for r in self.insights],
        }


@dataclass
class Topic:
    key_column: str
    dashboards: list[GeneratedDashboard]

    @property
    def best_return(self) -> float:
        return self.dashboards[0].episode_return if self.dashboards else 0.0


def generate(
    dataset: Dataset,
    params: NetworkParams | None,
    quota: int = 1_000,
    seed: int = 0,
    env_config: EnvConfig = EnvConfig(),
    reward_config: RewardConfig = RewardConfig(),
) -> list[Topic]:
    """Spend a step quota exploring and return dashboards grouped by topic.

    Seed keys rotate over the addressable columns; dashboards land in the
    topic of their final key column and are ranked by episode return.
    """
    if quota < MIN_SENSIBLE_QUOTA:
        log.warning(
            "quota %d is below one full episode (%d); running one episode anyway",
            quota,
            MIN_SENSIBLE_QUOTA,
        )
    if params is None:
        log.warning("no trained parameters provided; using the random masked policy")
    policy = PolicyNetwork(params) if params is not None else None
    rng = np.random.default_rng(seed)
    env = DashboardEnv(dataset, env_config, reward_config)
    spent = 0
    by_key: dict[str, list[GeneratedDashboard]] = {}
    while spent < quota or not by_key:
        result = run_episode(env, policy, rng, keep_outputs=False)
        spent += len(result.steps)
        final = result.final_state
        insights = detect_dashboard_insights(final, dataset, reward_config)
        by_key.setdefault(final.key_column, []).append(
            GeneratedDashboard(
                state=final,
                episode_return=result.episode_return,
                breakdown=result.breakdown,
                insights=insights,
            )
        )
        if spent >= quota:
            break
    topics = [
        Topic(
            key_column=key,
            dashboards=sorted(entries, key=lambda d: -d.episode_return),
        )
        for key, entries in by_key.items()
    ]
    topics.sort(key=lambda t: -t.best_return)
    return topics


@dataclass
class Candidate:
    chart: ChartSpec
    gain: float
    breakdown: RewardBreakdown
    insights_gained: list[InsightRecord]

    def to_dict(self) -> dict:
        return {
            "chart": self.chart.to_dict(),
            "gain": self.gain,
            "breakdown": self.breakdown.to_dict(),
            "insights_gained": [r.to_dict() for r in self.insights_gained],
        }


@dataclass
class RecommendResult:
    candidates: list[Candidate]
    note: str = ""


def recommend(
    dataset: Dataset,
    edited_state: DashboardState,
    params: NetworkParams | None,
    steps: int = 200,
    top_n: int = 5,
    seed: int = 0,
    env_config: EnvConfig = EnvConfig(),
    reward_config: RewardConfig = RewardConfig(),
) -> RecommendResult:
    """Explore from an edited dashboard and rank addable charts.

    Candidates are every chart an ``add`` decision produced during the
    rollouts, ranked by the best immediate-reward gain observed for that
    chart, deduplicated by chart equality.
    """
    if len(edited_state.charts) >= env_config.n_max:
        return RecommendResult(
            candidates=[], note="dashboard already holds the maximum chart count"
        )
    policy = PolicyNetwork(params) if params is not None else None
    rng = np.random.default_rng(seed)
    env = DashboardEnv(dataset, env_config, reward_config)
    base_insights = {
        r.key for r in detect_dashboard_insights(edited_state, dataset, reward_config)
    }
    existing = set(edited_state.charts)
    gains: dict[ChartSpec, float] = {}
    spent = 0
    while spent < steps:
        result = run_episode(
            env, policy, rng, start=edited_state, keep_outputs=False
        )
        spent += len(result.steps)
        # walk the trajectory attributing gains to added charts; stop at a
        # key change since later adds belong to a different topic
        for _, decision, reward in result.steps:
            if decision.action == "change":
                break
            if decision.action == "add":
                added = build_chart_from_tuple(
                    dataset, edited_state.key_column, *decision.add_tuple
                )
                if added is not None and added not in existing:
                    gains[added] = max(gains.get(added, -np.inf), reward)
    ranked = sorted(gains.items(), key=lambda kv: -kv[1])[:top_n]
    candidates = []
    for chart, gain in ranked:
        candidate_state = edited_state.with_charts(edited_state.charts + (chart,))
        breakdown = score_dashboard(candidate_state, dataset, reward_config)
        insights = detect_dashboard_insights(candidate_state, dataset, reward_config)
        candidates.append(
            Candidate(
                chart=chart,
                gain=gain,
                breakdown=breakdown,
                insights_gained=[r for r in insights if r.key not in base_insights],
            )
        )
    return RecommendResult(candidates=candidates)


@dataclass
class DashboardDiff:
    added_charts: list[ChartSpec]
    removed_charts: list[ChartSpec]
    gained_insights: list[InsightRecord]
    lost_insights: list[InsightRecord]

    @property
    def empty(self) -> bool:
        return not (
            self.added_charts
            or self.removed_charts
            or self.gained_insights
            or self.lost_insights
        )

    def to_dict(self) -> dict:
        return {
            "added_charts": [c.to_dict() for c in self.added_charts],
            "removed_charts": [c.to_dict() for c in self.removed_charts],
            "gained_insights": [r.to_dict() for r in self.gained_insights],
            "lost_insights": [r.to_dict() for r in self.lost_insights],
        }


def diff_dashboards(
    a: DashboardState,
    b: DashboardState,
    dataset: Dataset,
    reward_config: RewardConfig = RewardConfig(),
) -> DashboardDiff:
    """Set difference of charts and insights between two states."""
    charts_a, charts_b = set(a.charts), set(b.charts)
    ins_a = {r.key: r for r in detect_dashboard_insights(a, dataset, reward_config)}
    ins_b = {r.key: r for r in detect_dashboard_insights(b, dataset, reward_config)}
    order = {c: i for i, c in enumerate(b.charts)}
    return DashboardDiff(
        added_charts=sorted(charts_b - charts_a, key=lambda c: order[c]),
        removed_charts=[c for c in a.charts if c not in charts_b],
        gained_insights=[ins_b[k] for k in sorted(ins_b.keys() - ins_a.keys())],
        lost_insights=[ins_a[k] for k in sorted(ins_a.keys() - ins_b.keys())],
    )
