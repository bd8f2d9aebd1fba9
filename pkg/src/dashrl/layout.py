"""Rule-based dashboard layout on a 12-column grid.

Row 0 carries text statistics (the key column plus up to three columns that
participate in insights); charts fill below in rows of three, grouped by mark
type and then by insight kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .charts import MARKS, ChartSpec, DashboardState
from .data import Dataset, NOMINAL, QUANTITATIVE
from .insights import KIND_ORDER, InsightRecord

GRID_COLUMNS = 12
TEXT_W, TEXT_H = 3, 1
CHART_W, CHART_H = 4, 3
CHARTS_PER_ROW = GRID_COLUMNS // CHART_W
MAX_TEXT_CELLS = GRID_COLUMNS // TEXT_W


@dataclass(frozen=True)
class TextStat:
    column: str
    ctype: str
    lines: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"column": self.column, "ctype": self.ctype, "lines": list(self.lines)}


@dataclass(frozen=True)
class Cell:
    kind: str  # "text" | "chart"
    col: int
    row: int
    width: int
    height: int
    chart_index: int | None = None
    text: TextStat | None = None

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "col": self.col,
            "row": self.row,
            "width": self.width,
            "height": self.height,
        }
        if self.kind == "chart":
            d["chart_index"] = self.chart_index
        else:
            d["text"] = self.text.to_dict()
        return d


@dataclass(frozen=True)
class PositionedDashboard:
    cells: tuple[Cell, ...]

    @property
    def rows_used(self) -> int:
        return max((c.row + c.height for c in self.cells), default=0)

    def to_dict(self) -> dict:
        return {"cells": [c.to_dict() for c in self.cells]}


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def text_stats(
    dataset: Dataset,
    key_column: str,
    highlight_columns: Sequence[str] = (),
) -> list[TextStat]:
    """Per-column summary lines; the key column always comes first."""
    out = []
    seen = set()
    for name in [key_column, *highlight_columns]:
        if name in seen:
            continue
        seen.add(name)
        col = dataset.column(name)
        values = col.non_missing()
        if not values:
            out.append(TextStat(column=name, ctype=col.ctype, lines=("no data",)))
            continue
        if col.ctype == QUANTITATIVE:
            mean = sum(values) / len(values)
            lines = (
                f"mean {_fmt(mean)}",
                f"range {_fmt(min(values))} – {_fmt(max(values))}",
            )
        elif col.ctype == NOMINAL:
            counts: dict[str, int] = {}
            for v in values:
                counts[v] = counts.get(v, 0) + 1
            mode = max(sorted(counts), key=lambda k: counts[k])
            lines = (f"{len(counts)} categories", f"top: {mode}")
        else:
            lo, hi = min(values), max(values)
            lines = (f"{lo.date().isoformat()} – {hi.date().isoformat()}",)
        out.append(TextStat(column=name, ctype=col.ctype, lines=lines))
    return out


def _highlight_columns(
    key_column: str, insights: Sequence[InsightRecord], limit: int = 3
) -> list[str]:
    weights: dict[str, int] = {}
    for rec in insights:
        for col in rec.columns:
            if col != key_column:
                weights[col] = weights.get(col, 0) + rec.reward_weight
    ranked = sorted(weights, key=lambda c: (-weights[c], c))
    return ranked[:limit]


def _chart_sort_key(
    index: int, chart: ChartSpec, insights: Sequence[InsightRecord]
) -> tuple:
    kinds = [
        KIND_ORDER.index(r.kind) for r in insights if index in r.chart_indices
    ]
    return (MARKS.index(chart.mark), min(kinds, default=len(KIND_ORDER)), index)


def layout(
    state: DashboardState,
    insights: Sequence[InsightRecord],
    dataset: Dataset,
) -> PositionedDashboard:
    """Deterministic placement: text row, then charts grouped by mark type
    and insight kind, three to a row."""
    cells: list[Cell] = []
    stats = text_stats(
        dataset, state.key_column, _highlight_columns(state.key_column, insights)
    )
    for i, stat in enumerate(stats[:MAX_TEXT_CELLS]):
        cells.append(
            Cell(
                kind="text",
                col=i * TEXT_W,
                row=0,
                width=TEXT_W,
                height=TEXT_H,
                text=stat,
            )
        )
    order = sorted(
        range(len(state.charts)),
        key=lambda i: _chart_sort_key(i, state.charts[i], insights),
    )
    for slot, chart_index in enumerate(order):
        cells.append(
            Cell(
                kind="chart",
                col=(slot % CHARTS_PER_ROW) * CHART_W,
                row=TEXT_H + (slot // CHARTS_PER_ROW) * CHART_H,
                width=CHART_W,
                height=CHART_H,
                chart_index=chart_index,
            )
        )
    return PositionedDashboard(cells=tuple(cells))
