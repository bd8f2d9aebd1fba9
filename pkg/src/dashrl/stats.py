"""Hand-crafted per-column feature vectors shared by all encoders.

Every column (and every transformed chart field) maps to the same
N_FEATURES-slot layout so that network inputs stay aligned across datasets.
Nominal and temporal columns get dense vectors by computing moment statistics
over their per-category frequency counts; temporal min/max additionally use
epoch seconds. Population (not sample) variance throughout.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .data import NOMINAL, QUANTITATIVE, TEMPORAL, ColumnProfile

FEATURE_NAMES = (
    "type_q",
    "type_n",
    "type_t",
    "row_count",
    "missing_ratio",
    "cardinality",
    "cardinality_ratio",
    "minimum",
    "maximum",
    "mean",
    "median",
    "std",
    "skewness",
    "kurtosis",
    "gini_impurity",
    "entropy",
    "monotonic",
    "sortedness",
    "outlier_ratio",
    "trend_slope",
)
N_FEATURES = len(FEATURE_NAMES)
FEATURE_CLIP = 10.0

_SLOT = {name: i for i, name in enumerate(FEATURE_NAMES)}
_MAGNITUDE_SLOTS = tuple(
    _SLOT[n] for n in ("minimum", "maximum", "mean", "median", "std")
)


def feature_slot(name: str) -> int:
    return _SLOT[name]


def signed_log(x: float) -> float:
    """Sign-preserving log scaling for unbounded magnitudes."""
    return float(np.sign(x) * np.log1p(abs(x)))


def _category_counts(values: Sequence) -> np.ndarray:
    """Frequency of each distinct value, in first-appearance order."""
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return np.asarray(list(counts.values()), dtype=np.float64)


def _moments(arr: np.ndarray) -> tuple[float, float, float, float]:
    """(mean, population std, skewness, excess kurtosis); zeros when degenerate."""
    if arr.size == 0:
        return 0.0, 0.0, 0.0, 0.0
    mean = float(arr.mean())
    var = float(((arr - mean) ** 2).mean())
    std = var**0.5
    if std == 0.0:
        return mean, 0.0, 0.0, 0.0
    z = (arr - mean) / std
    skew = float((z**3).mean())
    kurt = float((z**4).mean()) - 3.0
    return mean, std, skew, kurt


def _sortedness(arr: np.ndarray) -> float:
    if arr.size <= 1:
        return 1.0
    diffs = np.diff(arr)
    up = float((diffs >= 0).mean())
    down = float((diffs <= 0).mean())
    return max(up, down)


def _outlier_ratio(arr: np.ndarray) -> float:
    if arr.size == 0:
        return 0.0
    q1, q3 = np.percentile(arr, [25, 75])
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    return float(((arr < lo) | (arr > hi)).mean())


def _trend_slope(arr: np.ndarray) -> float:
    if arr.size <= 1:
        return 0.0
    idx = np.arange(arr.size, dtype=np.float64)
    denom = float(((idx - idx.mean()) ** 2).sum())
    if denom == 0.0:
        return 0.0
    return float(((idx - idx.mean()) * (arr - arr.mean())).sum() / denom)


def _epoch_seconds(values: Sequence) -> np.ndarray:
    return np.asarray([v.timestamp() for v in values], dtype=np.float64)


def series_features(
    values: Sequence,
    ctype: str,
    n_rows: int | None = None,
    missing_ratio: float = 0.0,
) -> np.ndarray:
    """Feature vector for an already non-missing value sequence.

    ``values`` must match ``ctype``: floats for quantitative, datetimes for
    temporal, arbitrary hashables (labels) for nominal.
    """
    n = len(values)
    if n_rows is None:
        n_rows = n
    out = np.zeros(N_FEATURES, dtype=np.float64)
    if n == 0:
        out[_SLOT["row_count"]] = np.log1p(n_rows)
        out[_SLOT["missing_ratio"]] = missing_ratio
        _set_type(out, ctype)
        return np.clip(np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0),
                       -FEATURE_CLIP, FEATURE_CLIP)

    counts = _category_counts(values)
    if ctype == QUANTITATIVE:
        seq = np.asarray(values, dtype=np.float64)
        moment_src = seq
        minmax_src = seq
    elif ctype == TEMPORAL:
        seq = _epoch_seconds(values)
        moment_src = counts
        minmax_src = seq
    else:
        seq = counts
        moment_src = counts
        minmax_src = counts

    mean, std, skew, kurt = _moments(moment_src)
    median = float(np.median(moment_src))
    card = counts.size
    probs = counts / counts.sum()
    gini = 1.0 - float((probs**2).sum())
    entropy = (
        float(-(probs * np.log(probs)).sum() / np.log(card)) if card > 1 else 0.0
    )
    monotonic = 1.0 if _sortedness(seq) == 1.0 else 0.0

    _set_type(out, ctype)
    out[_SLOT["row_count"]] = np.log1p(n_rows)
    out[_SLOT["missing_ratio"]] = missing_ratio
    out[_SLOT["cardinality"]] = np.log1p(card)
    out[_SLOT["cardinality_ratio"]] = card / n
    out[_SLOT["minimum"]] = float(minmax_src.min())
    out[_SLOT["maximum"]] = float(minmax_src.max())
    out[_SLOT["mean"]] = mean
    out[_SLOT["median"]] = median
    out[_SLOT["std"]] = std
    out[_SLOT["skewness"]] = skew
    out[_SLOT["kurtosis"]] = kurt
    out[_SLOT["gini_impurity"]] = gini
    out[_SLOT["entropy"]] = entropy
    out[_SLOT["monotonic"]] = monotonic
    out[_SLOT["sortedness"]] = _sortedness(seq)
    out[_SLOT["outlier_ratio"]] = _outlier_ratio(seq)
    out[_SLOT["trend_slope"]] = _trend_slope(seq)

    for slot in _MAGNITUDE_SLOTS:
        out[slot] = signed_log(out[slot])
    out = np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0)
    return np.clip(out, -FEATURE_CLIP, FEATURE_CLIP)


def _set_type(out: np.ndarray, ctype: str) -> None:
    if ctype == QUANTITATIVE:
        out[_SLOT["type_q"]] = 1.0
    elif ctype == NOMINAL:
        out[_SLOT["type_n"]] = 1.0
    elif ctype == TEMPORAL:
        out[_SLOT["type_t"]] = 1.0
    else:
        raise ValueError(f"unknown column type: {ctype}")


def compute_column_features(col: ColumnProfile) -> np.ndarray:
    """Deterministic N_FEATURES-vector for a raw dataset column."""
    return series_features(
        col.non_missing(),
        col.ctype,
        n_rows=col.n_rows,
        missing_ratio=col.missing_ratio,
    )
