"""Detection of single-, double-, and multiple-column data insights.

Single-column insights score 1, double-column 2, multi-chart 3. Correlation
is judged on the series a chart actually displays (post-transform), not on
the raw columns.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .charts import ChartSpec, DashboardState, apply_transform
from .config import RewardConfig
from .data import NOMINAL, QUANTITATIVE, TEMPORAL, Dataset

KIND_WEIGHTS = {
    "distribution": 1,
    "trend": 2,
    "correlation": 2,
    "topk": 2,
    "bottomk": 2,
    "co_correlation": 3,
    "comparison": 3,
}
KIND_ORDER = tuple(KIND_WEIGHTS)

MIN_CORRELATION_POINTS = 3


@dataclass(frozen=True)
class InsightRecord:
    """One detected insight; (kind, columns) is the deduplication key."""

    kind: str
    columns: tuple[str, ...]
    chart_indices: frozenset[int] = frozenset()
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in KIND_WEIGHTS:
            raise ValueError(f"unknown insight kind: {self.kind}")

    @property
    def reward_weight(self) -> int:
        return KIND_WEIGHTS[self.kind]

    @property
    def key(self) -> tuple:
        return (self.kind, self.columns)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "columns": list(self.columns),
            "chart_indices": sorted(self.chart_indices),
            "value": self.value,
            "reward_weight": self.reward_weight,
        }


def pearson(a: Sequence[float], b: Sequence[float]) -> float | None:
    """Product-moment correlation; None when fewer than 3 complete pairs,
    0.0 when either series is constant."""
    xs = np.asarray(a, dtype=np.float64)
    ys = np.asarray(b, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError("series lengths differ")
    good = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = xs[good], ys[good]
    if xs.size < MIN_CORRELATION_POINTS:
        return None
    xd = xs - xs.mean()
    yd = ys - ys.mean()
    sx = float((xd**2).sum()) ** 0.5
    sy = float((yd**2).sum()) ** 0.5
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float((xd * yd).sum() / (sx * sy))


def _is_quantitative_series(enc, dataset: Dataset) -> bool:
    if enc.aggregate == "count":
        return False
    if enc.aggregate == "bin":
        return True
    return dataset.ctype(enc.column) == QUANTITATIVE


def detect_chart_insights(
    spec: ChartSpec,
    dataset: Dataset,
    config: RewardConfig = RewardConfig(),
) -> list[InsightRecord]:
    """Insights a single chart exhibits (distribution/trend/correlation/top-bottom k)."""
    records: list[InsightRecord] = []
    x, y = spec.x, spec.y

    binned = [e for e in (x, y) if e.aggregate == "bin"]
    counted = [e for e in (x, y) if e.aggregate == "count"]
    if binned and counted:
        records.append(
            InsightRecord(kind="distribution", columns=(binned[0].column,))
        )

    if spec.mark == "line":
        t_sides = [
            e
            for e in (x, y)
            if e.aggregate == "none" and dataset.ctype(e.column) == TEMPORAL
        ]
        q_sides = [
            e
            for e in (x, y)
            if e.aggregate in ("none", "mean", "sum", "min", "max")
            and dataset.ctype(e.column) == QUANTITATIVE
        ]
        if len(t_sides) == 1 and len(q_sides) == 1:
            records.append(
                InsightRecord(
                    kind="trend",
                    columns=(q_sides[0].column, t_sides[0].column),
                )
            )

    if spec.mark in ("line", "point"):
        if _is_quantitative_series(x, dataset) and _is_quantitative_series(y, dataset):
            rows = apply_transform(dataset, spec)
            r = pearson([r["x"] for r in rows], [r["y"] for r in rows])
            if r is not None and abs(r) >= config.correlation_threshold:
                records.append(
                    InsightRecord(
                        kind="correlation",
                        columns=tuple(sorted((x.column, y.column))),
                        value=abs(r),
                    )
                )

    if spec.mark == "bar" and spec.limit is not None:
        cat = next(
            (
                e
                for e in (x, y)
                if e.aggregate == "none" and dataset.ctype(e.column) == NOMINAL
            ),
            None,
        )
        measure = next(
            (
                e
                for e in (x, y)
                if e.aggregate in ("mean", "sum", "min", "max")
                and dataset.ctype(e.column) == QUANTITATIVE
            ),
            None,
        )
        if cat is not None and measure is not None:
            kind = "topk" if spec.limit.direction == "top" else "bottomk"
            records.append(
                InsightRecord(kind=kind, columns=(cat.column, measure.column))
            )

    return records


def _chart_insights_cached(
    spec: ChartSpec, dataset: Dataset, config: RewardConfig
) -> list[InsightRecord]:
    return dataset.cache(
        ("insights", spec, config.correlation_threshold),
        lambda: detect_chart_insights(spec, dataset, config),
    )


def detect_dashboard_insights(
    state: DashboardState,
    dataset: Dataset,
    config: RewardConfig = RewardConfig(),
) -> list[InsightRecord]:
    """Per-chart insights plus cross-chart co-correlation and comparison,
    deduplicated by (kind, columns) with chart indices unioned."""
    merged: dict[tuple, InsightRecord] = {}

    def add(rec: InsightRecord) -> None:
        prior = merged.get(rec.key)
        if prior is None:
            merged[rec.key] = rec
        else:
            merged[rec.key] = replace(
                prior,
                chart_indices=prior.chart_indices | rec.chart_indices,
                value=max(prior.value, rec.value),
            )

    for i, chart in enumerate(state.charts):
        for rec in _chart_insights_cached(chart, dataset, config):
            add(replace(rec, chart_indices=frozenset({i})))

    base = list(merged.values())

    # Co-correlation: correlations (A,B) and (A,C) hypothesize (B,C).
    partners: dict[str, dict[str, InsightRecord]] = {}
    for rec in base:
        if rec.kind != "correlation":
            continue
        a, b = rec.columns
        partners.setdefault(a, {})[b] = rec
        partners.setdefault(b, {})[a] = rec
    for pivot, others in sorted(partners.items()):
        names = sorted(others)
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                add(
                    InsightRecord(
                        kind="co_correlation",
                        columns=(pivot, names[i], names[j]),
                        chart_indices=(
                            others[names[i]].chart_indices
                            | others[names[j]].chart_indices
                        ),
                    )
                )

    # Comparison: top-k and bottom-k over the same column pair.
    tops = {r.columns: r for r in base if r.kind == "topk"}
    bottoms = {r.columns: r for r in base if r.kind == "bottomk"}
    for cols in sorted(set(tops) & set(bottoms)):
        add(
            InsightRecord(
                kind="comparison",
                columns=cols,
                chart_indices=tops[cols].chart_indices | bottoms[cols].chart_indices,
            )
        )

    return sorted(
        merged.values(), key=lambda r: (KIND_ORDER.index(r.kind), r.columns)
    )
