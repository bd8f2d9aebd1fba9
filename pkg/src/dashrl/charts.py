"""Chart and dashboard structures, the validity grammar, and data transforms.

The grammar is deliberately canonical: for a given key column there is exactly
one orientation for each expressible chart (key on x unless the mark's type
rules dictate otherwise). That keeps the agent's parameter space and the space
of valid charts in one-to-one correspondence, which the masking machinery and
its brute-force tests rely on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Any, Iterable, Sequence

import numpy as np

from .data import (
    NOMINAL,
    QUANTITATIVE,
    TEMPORAL,
    Dataset,
    UnknownColumnError,
)
from .stats import N_FEATURES, compute_column_features, series_features

log = logging.getLogger(__name__)

MARKS = ("bar", "line", "point", "boxplot")
AGGREGATES = ("none", "mean", "sum", "min", "max", "count", "bin")
NUMERIC_AGGREGATES = ("mean", "sum", "min", "max")
MEASURE_AGGREGATES = ("mean", "sum", "min", "max", "count")
LIMIT_DIRECTIONS = ("top", "bottom")

LIMIT_K = 10
MAX_COLOR_CARDINALITY = 10
MAX_CATEGORY_CARDINALITY = 50
N_BINS = 10


@dataclass(frozen=True)
class Encoding:
    """A visual channel: a column plus the aggregate applied to it."""

    column: str
    aggregate: str = "none"

    def __post_init__(self):
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"unknown aggregate: {self.aggregate}")

    @property
    def is_measure(self) -> bool:
        return self.aggregate in MEASURE_AGGREGATES

    def to_dict(self) -> dict:
        return {"column": self.column, "aggregate": self.aggregate}

    @classmethod
    def from_dict(cls, d: dict) -> "Encoding":
        return cls(column=d["column"], aggregate=d.get("aggregate", "none"))


@dataclass(frozen=True)
class Limit:
    """Keep only the k groups with the highest/lowest measure value."""

    direction: str
    k: int = LIMIT_K

    def __post_init__(self):
        if self.direction not in LIMIT_DIRECTIONS:
            raise ValueError(f"unknown limit direction: {self.direction}")
        if self.k <= 0:
            raise ValueError("limit k must be positive")

    def to_dict(self) -> dict:
        return {"direction": self.direction, "k": self.k}

    @classmethod
    def from_dict(cls, d: dict) -> "Limit":
        return cls(direction=d["direction"], k=d.get("k", LIMIT_K))


@dataclass(frozen=True)
class ChartSpec:
    """One chart: mark type, x/y/color encodings, optional top/bottom limit."""

    mark: str
    x: Encoding
    y: Encoding
    color: Encoding | None = None
    limit: Limit | None = None

    def __post_init__(self):
        if self.mark not in MARKS:
            raise ValueError(f"unknown mark: {self.mark}")

    @property
    def channels(self) -> dict[str, Encoding]:
        out = {"x": self.x, "y": self.y}
        if self.color is not None:
            out["color"] = self.color
        return out

    def referenced_columns(self) -> tuple[str, ...]:
        """Columns the chart actually visualizes (count channels mirror the
        category column and are not counted as references)."""
        cols = []
        for enc in self.channels.values():
            if enc.aggregate != "count" and enc.column not in cols:
                cols.append(enc.column)
        return tuple(cols)

    def to_dict(self) -> dict:
        d: dict = {
            "mark": self.mark,
            "x": self.x.to_dict(),
            "y": self.y.to_dict(),
        }
        if self.color is not None:
            d["color"] = self.color.to_dict()
        if self.limit is not None:
            d["limit"] = self.limit.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChartSpec":
        return cls(
            mark=d["mark"],
            x=Encoding.from_dict(d["x"]),
            y=Encoding.from_dict(d["y"]),
            color=Encoding.from_dict(d["color"]) if d.get("color") else None,
            limit=Limit.from_dict(d["limit"]) if d.get("limit") else None,
        )


@dataclass(frozen=True)
class DashboardState:
    """MDP state: the key column, the chart list, and the step counter."""

    key_column: str
    charts: tuple[ChartSpec, ...] = ()
    step: int = 0

    def with_charts(self, charts: Iterable[ChartSpec]) -> "DashboardState":
        return replace(self, charts=tuple(charts))

    def to_dict(self) -> dict:
        return {
            "key_column": self.key_column,
            "charts": [c.to_dict() for c in self.charts],
            "step": self.step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DashboardState":
        return cls(
            key_column=d["key_column"],
            charts=tuple(ChartSpec.from_dict(c) for c in d.get("charts", [])),
            step=d.get("step", 0),
        )


# ---------------------------------------------------------------------------
# Validity grammar


def _cardinality(dataset: Dataset, column: str) -> int:
    col = dataset.column(column)
    return dataset.cache(
        ("cardinality", column), lambda: len(set(col.non_missing()))
    )


def _check_columns_exist(spec: ChartSpec, dataset: Dataset) -> None:
    for enc in spec.channels.values():
        dataset.column(enc.column)  # raises UnknownColumnError


def _is_category(enc: Encoding, dataset: Dataset) -> bool:
    ctype = dataset.ctype(enc.column)
    if enc.aggregate == "none":
        return ctype in (NOMINAL, TEMPORAL)
    if enc.aggregate == "bin":
        return ctype == QUANTITATIVE
    return False


def validate_chart(spec: ChartSpec, dataset: Dataset) -> list[str]:
    """Return every grammar rule the chart violates (empty list = valid).

    Unknown column names raise UnknownColumnError instead: that is a
    structural error, not a grammar verdict.
    """
    _check_columns_exist(spec, dataset)
    violations: list[str] = []

    for name, enc in spec.channels.items():
        ctype = dataset.ctype(enc.column)
        if enc.aggregate in NUMERIC_AGGREGATES and ctype != QUANTITATIVE:
            violations.append(
                f"{name}: aggregate {enc.aggregate} requires quantitative column"
            )
        if enc.aggregate == "bin" and ctype != QUANTITATIVE:
            violations.append(f"{name}: bin requires quantitative column")

    x, y = spec.x, spec.y
    count_mirror = (y.aggregate == "count" and y.column == x.column) or (
        x.aggregate == "count" and x.column == y.column
    )
    if x.column == y.column and not count_mirror:
        violations.append("x and y must encode distinct columns")
    for pos, enc in (("x", x), ("y", y)):
        if enc.aggregate == "count":
            other = y if pos == "x" else x
            if enc.column != other.column:
                violations.append(
                    f"{pos}: count must mirror the category column"
                )

    checker = _MARK_RULES[spec.mark]
    violations.extend(checker(spec, dataset))

    if spec.color is not None:
        c = spec.color
        if c.aggregate != "none":
            violations.append("color channel must not aggregate")
        if dataset.ctype(c.column) != NOMINAL:
            violations.append("color channel requires a nominal column")
        elif _cardinality(dataset, c.column) > MAX_COLOR_CARDINALITY:
            violations.append(
                f"color column exceeds {MAX_COLOR_CARDINALITY} categories"
            )
        if c.column in (x.column, y.column):
            violations.append("color must differ from positional columns")
        if spec.limit is not None:
            violations.append("limit chart cannot carry a color channel")

    if spec.limit is not None:
        if spec.mark != "bar":
            violations.append("limit is only valid on bar charts")
        else:
            cat = _bar_category(spec, dataset)
            if cat is None or dataset.ctype(cat.column) != NOMINAL:
                violations.append("limit requires a nominal category axis")
            elif _cardinality(dataset, cat.column) <= spec.limit.k:
                violations.append(
                    f"limit needs more than {spec.limit.k} categories to rank"
                )
        if spec.limit.k != LIMIT_K:
            violations.append(f"limit k is fixed at {LIMIT_K}")

    return violations


def _bar_category(spec: ChartSpec, dataset: Dataset) -> Encoding | None:
    cats = [e for e in (spec.x, spec.y) if _is_category(e, dataset)]
    return cats[0] if len(cats) == 1 else None


def _bar_rules(spec: ChartSpec, dataset: Dataset) -> list[str]:
    out: list[str] = []
    x, y = spec.x, spec.y
    cats = [e for e in (x, y) if _is_category(e, dataset)]
    measures = [e for e in (x, y) if e.is_measure]
    if len(cats) != 1 or len(measures) != 1:
        out.append("bar requires one category axis and one aggregated axis")
        return out
    measure = measures[0]
    if measure.aggregate != "count" and dataset.ctype(measure.column) != QUANTITATIVE:
        out.append("bar measure must be a quantitative column or a count")
    cat = cats[0]
    if cat.aggregate == "none":
        card = _cardinality(dataset, cat.column)
        if card > MAX_CATEGORY_CARDINALITY and spec.limit is None:
            out.append(
                f"category axis has {card} values; a top/bottom limit is required"
            )
    return out


def _line_rules(spec: ChartSpec, dataset: Dataset) -> list[str]:
    out: list[str] = []
    x, y = spec.x, spec.y
    x_type = dataset.ctype(x.column)
    x_ok = (x.aggregate == "none" and x_type in (TEMPORAL, QUANTITATIVE)) or (
        x.aggregate == "bin" and x_type == QUANTITATIVE
    )
    if not x_ok:
        out.append("line x must be temporal, quantitative, or binned quantitative")
    if dataset.ctype(y.column) != QUANTITATIVE or y.aggregate not in (
        "none",
        "mean",
        "sum",
        "min",
        "max",
    ):
        out.append("line y must be a (possibly aggregated) quantitative column")
    return out


def _point_rules(spec: ChartSpec, dataset: Dataset) -> list[str]:
    out: list[str] = []
    for name, enc in (("x", spec.x), ("y", spec.y)):
        if dataset.ctype(enc.column) != QUANTITATIVE or enc.aggregate not in (
            "none",
            "mean",
        ):
            out.append(f"point {name} must be quantitative with aggregate none/mean")
    if spec.x.aggregate == "mean" and spec.y.aggregate == "mean":
        out.append("point cannot aggregate both axes")
    return out


def _boxplot_rules(spec: ChartSpec, dataset: Dataset) -> list[str]:
    out: list[str] = []
    x, y = spec.x, spec.y
    if dataset.ctype(x.column) != NOMINAL or x.aggregate != "none":
        out.append("boxplot x must be a raw nominal column")
    if dataset.ctype(y.column) != QUANTITATIVE or y.aggregate != "none":
        out.append("boxplot y must be a raw quantitative column")
    return out


_MARK_RULES = {
    "bar": _bar_rules,
    "line": _line_rules,
    "point": _point_rules,
    "boxplot": _boxplot_rules,
}


def key_reference_channels(spec: ChartSpec, key: str) -> list[str]:
    """Positional channels that reference the key column."""
    return [
        name
        for name, enc in (("x", spec.x), ("y", spec.y))
        if enc.aggregate != "count" and enc.column == key
    ]


def validate_chart_for_key(
    spec: ChartSpec, dataset: Dataset, key: str
) -> list[str]:
    """Grammar check plus key placement and canonical orientation."""
    violations = validate_chart(spec, dataset)
    refs = key_reference_channels(spec, key)
    if len(refs) != 1:
        violations.append("chart must encode the key column on exactly one axis")
        return violations
    if spec.mark == "boxplot":
        return violations  # orientation fixed by the type rules
    if spec.mark == "line" and dataset.ctype(spec.x.column) == TEMPORAL:
        return violations  # time always sits on x, key may be on y
    if refs[0] != "x":
        violations.append("key column belongs on the x axis for this mark")
    return violations


def validate_state(state: DashboardState, dataset: Dataset) -> list[str]:
    out: list[str] = []
    for i, chart in enumerate(state.charts):
        for v in validate_chart_for_key(chart, dataset, state.key_column):
            out.append(f"chart {i}: {v}")
    return out


# ---------------------------------------------------------------------------
# Key substitution


@dataclass(frozen=True)
class SubstitutionResult:
    """Verdict of a key-column substitution (refusal is data, not an error)."""

    ok: bool
    state: DashboardState | None = None
    failing_charts: tuple[int, ...] = ()


def substitute_key_column(
    state: DashboardState, new_key: str, dataset: Dataset
) -> SubstitutionResult:
    """Rewrite the key column in every chart, refusing if any chart breaks."""
    dataset.column(new_key)
    if new_key == state.key_column:
        raise ValueError("new key equals the current key")
    new_charts: list[ChartSpec] = []
    failing: list[int] = []
    for i, chart in enumerate(state.charts):
        rewritten = rewrite_key(chart, state.key_column, new_key)
        if validate_chart_for_key(rewritten, dataset, new_key):
            failing.append(i)
        new_charts.append(rewritten)
    if failing:
        return SubstitutionResult(ok=False, failing_charts=tuple(failing))
    return SubstitutionResult(
        ok=True,
        state=DashboardState(
            key_column=new_key, charts=tuple(new_charts), step=state.step
        ),
    )


def rewrite_key(chart: ChartSpec, old_key: str, new_key: str) -> ChartSpec:
    """Replace the key column inside a chart's encodings (no validation)."""
    def swap(enc: Encoding | None) -> Encoding | None:
        if enc is None or enc.column != old_key:
            return enc
        return replace(enc, column=new_key)

    return replace(
        chart, x=swap(chart.x), y=swap(chart.y), color=swap(chart.color)
    )


# ---------------------------------------------------------------------------
# Data transform for rendering


def bin_edges(values: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n_bins + 1)


def _sort_token(value: Any) -> Any:
    if isinstance(value, datetime):
        return value.timestamp()
    return value


def _present_mask(dataset: Dataset, column: str) -> np.ndarray:
    return dataset.cache(
        ("present", column),
        lambda: np.array(
            [v is not None for v in dataset.column(column).values], dtype=bool
        ),
    )


def transform_channels(
    dataset: Dataset, channels: dict[str, Encoding], limit: Limit | None = None
) -> list[dict]:
    """Group/aggregate/sort the raw table into channel-named rows.

    Channels with aggregate none/bin are grouping dimensions; the rest are
    measures. Without measures the raw projection is returned. Row order is
    deterministic: sorted by the dimension tuple, or by the measure for limit
    charts. Binned dimensions surface as bin midpoints.
    """
    cols = {ch: dataset.column(enc.column) for ch, enc in channels.items()}
    dims = [ch for ch, enc in channels.items() if not enc.is_measure]
    measures = [ch for ch, enc in channels.items() if enc.is_measure]

    # Rows where any value-bearing channel is missing are dropped.
    keep_mask = np.ones(dataset.n_rows, dtype=bool)
    for ch, enc in channels.items():
        if enc.aggregate != "count":
            keep_mask &= _present_mask(dataset, enc.column)
    keep = np.flatnonzero(keep_mask)

    bin_codes: dict[str, np.ndarray] = {}
    edges: dict[str, np.ndarray] = {}
    for ch in dims:
        if channels[ch].aggregate == "bin":
            vals = np.asarray([cols[ch].values[i] for i in keep], dtype=np.float64)
            if vals.size:
                e = bin_edges(vals)
                edges[ch] = e
                codes = np.searchsorted(e, vals, side="right") - 1
                bin_codes[ch] = np.clip(codes, 0, len(e) - 2)

    if not measures:
        rows = [{ch: cols[ch].values[i] for ch in channels} for i in keep]
        rows.sort(key=lambda r: tuple(_sort_token(r[ch]) for ch in channels))
        return rows

    groups: dict[tuple, list[int]] = {}
    for pos, i in enumerate(keep):
        key = tuple(
            int(bin_codes[ch][pos]) if ch in bin_codes else cols[ch].values[i]
            for ch in dims
        )
        groups.setdefault(key, []).append(i)

    rows = []
    for gkey, idxs in groups.items():
        row: dict = {}
        for ch, part in zip(dims, gkey):
            if ch in edges:
                e = edges[ch]
                row[ch] = float((e[part] + e[part + 1]) / 2.0)
            else:
                row[ch] = part
        for ch in measures:
            enc = channels[ch]
            if enc.aggregate == "count":
                row[ch] = float(len(idxs))
            else:
                vals = [
                    cols[ch].values[i] for i in idxs if cols[ch].values[i] is not None
                ]
                arr = np.asarray(vals, dtype=np.float64)
                op = {"mean": np.mean, "sum": np.sum, "min": np.min, "max": np.max}[
                    enc.aggregate
                ]
                row[ch] = float(op(arr)) if arr.size else 0.0
        rows.append(row)

    rows.sort(key=lambda r: tuple(_sort_token(r[ch]) for ch in dims))
    if limit is not None:
        measure_ch = next(ch for ch in ("y", "x") if ch in measures)
        rows.sort(key=lambda r: r[measure_ch], reverse=limit.direction == "top")
        rows = rows[: limit.k]
    return rows


def apply_transform(dataset: Dataset, spec: ChartSpec) -> list[dict]:
    """Rendered table for a chart, memoized on the dataset."""
    return dataset.cache(
        ("transform", spec),
        lambda: transform_channels(dataset, spec.channels, spec.limit),
    )


# ---------------------------------------------------------------------------
# Field features: statistics of the data a channel actually displays


def compute_field_features(
    dataset: Dataset,
    encoding: Encoding,
    peer_encodings: Sequence[Encoding] = (),
) -> np.ndarray:
    """Feature vector of the channel's post-transform series.

    With aggregate none and no peers this equals the raw column features.
    An empty transformed series yields the all-zero vector (recognizable
    because real vectors always carry a type one-hot).
    """
    col = dataset.column(encoding.column)
    if encoding.aggregate == "none" and not peer_encodings:
        return dataset.cache(
            ("colfeat", col.name), lambda: compute_column_features(col)
        )

    channels = {"f0": encoding}
    for i, peer in enumerate(peer_encodings, start=1):
        channels[f"f{i}"] = peer
    rows = transform_channels(dataset, channels)
    series = [r["f0"] for r in rows]
    if not series:
        log.warning(
            "transform for %s(%s) produced no rows; emitting zero features",
            encoding.aggregate,
            encoding.column,
        )
        return np.zeros(N_FEATURES, dtype=np.float64)
    if encoding.aggregate in MEASURE_AGGREGATES or encoding.aggregate == "bin":
        ctype = QUANTITATIVE
    else:
        ctype = col.ctype
    return series_features(series, ctype)


# ---------------------------------------------------------------------------
# Declarative render documents (Vega-Lite v5 subset)

VL_TYPES = {QUANTITATIVE: "quantitative", NOMINAL: "nominal", TEMPORAL: "temporal"}


def _channel_doc(enc: Encoding, dataset: Dataset) -> dict:
    if enc.aggregate == "count":
        return {"aggregate": "count", "type": "quantitative"}
    doc: dict = {"field": enc.column, "type": VL_TYPES[dataset.ctype(enc.column)]}
    if enc.aggregate == "bin":
        doc["bin"] = True
    elif enc.aggregate in NUMERIC_AGGREGATES:
        doc["aggregate"] = enc.aggregate
        doc["type"] = "quantitative"
    return doc


def _limit_doc(spec: ChartSpec, dataset: Dataset) -> dict:
    """Encoding + transform for top/bottom-k bars: transform-level aggregate,
    then a rank window and a filter."""
    cat_ch = "x" if _is_category(spec.x, dataset) else "y"
    measure_ch = "y" if cat_ch == "x" else "x"
    cat = spec.channels[cat_ch]
    measure = spec.channels[measure_ch]
    agg_entry: dict = {"op": measure.aggregate, "as": "_value"}
    if measure.aggregate != "count":
        agg_entry["field"] = measure.column
    order = "descending" if spec.limit.direction == "top" else "ascending"
    sort_sign = "-" if spec.limit.direction == "top" else ""
    encoding = {
        cat_ch: {
            "field": cat.column,
            "type": VL_TYPES[dataset.ctype(cat.column)],
            "sort": f"{sort_sign}{measure_ch}",
        },
        measure_ch: {"field": "_value", "type": "quantitative"},
    }
    transform = [
        {"aggregate": [agg_entry], "groupby": [cat.column]},
        {"window": [{"op": "rank", "as": "_rank"}], "sort": [{"field": "_value", "order": order}]},
        {"filter": f"datum._rank <= {spec.limit.k}"},
    ]
    return {"encoding": encoding, "transform": transform}


def _inline_rows(spec: ChartSpec, dataset: Dataset) -> list[dict]:
    cols = sorted({enc.column for enc in spec.channels.values()})
    profiles = {c: dataset.column(c) for c in cols}
    rows = []
    for i in range(dataset.n_rows):
        if any(profiles[c].values[i] is None for c in cols):
            continue
        row = {}
        for c in cols:
            v = profiles[c].values[i]
            row[c] = v.isoformat() if isinstance(v, datetime) else v
        rows.append(row)
    return rows


def to_render_spec(
    spec: ChartSpec, dataset: Dataset, dataset_ref: str | None = None
) -> dict:
    """Declarative render document for a valid chart.

    By default the referenced raw rows are inlined so the document is fully
    self-contained; passing ``dataset_ref`` emits a named data reference
    instead.
    """
    doc: dict = {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "data": (
            {"name": dataset_ref}
            if dataset_ref is not None
            else {"values": _inline_rows(spec, dataset)}
        ),
        "mark": (
            {"type": "boxplot", "extent": 1.5} if spec.mark == "boxplot" else spec.mark
        ),
    }
    if spec.limit is not None:
        parts = _limit_doc(spec, dataset)
        doc["encoding"] = parts["encoding"]
        doc["transform"] = parts["transform"]
    else:
        doc["encoding"] = {
            ch: _channel_doc(enc, dataset)
            for ch, enc in spec.channels.items()
            if ch != "color"
        }
    if spec.color is not None:
        doc["encoding"]["color"] = _channel_doc(spec.color, dataset)
    return doc
