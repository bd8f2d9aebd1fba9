"""Dashboard feature matrices: one row per chart plus shared context blocks.

Setting DASHRL_DUMP_FEATURES to a directory makes every encoded dashboard
also land there as a CSV for inspection.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .charts import AGGREGATES, MARKS, ChartSpec, DashboardState, compute_field_features
from .config import MAX_CONTEXT_COLUMNS
from .data import Dataset
from .stats import N_FEATURES, compute_column_features

CHANNELS = ("x", "y", "color")
CHANNEL_BLOCK = 1 + len(AGGREGATES) + N_FEATURES
CHART_BLOCK = len(MARKS) + len(CHANNELS) * CHANNEL_BLOCK
CONTEXT_BLOCK = N_FEATURES + MAX_CONTEXT_COLUMNS * N_FEATURES
#: Width of one encoded chart row (chart block + key/context blocks).
L_FEATURES = CHART_BLOCK + CONTEXT_BLOCK


@dataclass(frozen=True)
class DashboardFeatures:
    """n_rows x L_FEATURES matrix; an empty dashboard is one empty-token row."""

    matrix: np.ndarray
    row_is_empty: tuple[bool, ...]

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]


def _column_features_cached(dataset: Dataset, name: str) -> np.ndarray:
    return dataset.cache(
        ("colfeat", name), lambda: compute_column_features(dataset.column(name))
    )


def _chart_block(spec: ChartSpec, dataset: Dataset) -> np.ndarray:
    out = np.zeros(CHART_BLOCK, dtype=np.float64)
    out[MARKS.index(spec.mark)] = 1.0
    channels = spec.channels
    offset = len(MARKS)
    for ch in CHANNELS:
        enc = channels.get(ch)
        if enc is not None:
            peers = [e for name, e in channels.items() if name != ch]
            out[offset] = 1.0
            out[offset + 1 + AGGREGATES.index(enc.aggregate)] = 1.0
            out[offset + 1 + len(AGGREGATES) :offset + CHANNEL_BLOCK] = (
                compute_field_features(dataset, enc, peers)
            )
        offset += CHANNEL_BLOCK
    return out


def _context_block(dataset: Dataset, key_column: str) -> np.ndarray:
    out = np.zeros(CONTEXT_BLOCK, dtype=np.float64)
    out[:N_FEATURES] = _column_features_cached(dataset, key_column)
    for i, col in enumerate(dataset.visible_columns):
        start = N_FEATURES + i * N_FEATURES
        out[start : start + N_FEATURES] = _column_features_cached(dataset, col.name)
    return out


def encode_chart(
    spec: ChartSpec, state: DashboardState, dataset: Dataset
) -> np.ndarray:
    """Feature row for one chart: mark/channel blocks plus key and dataset
    context. Datasets beyond MAX_CONTEXT_COLUMNS columns contribute only
    their first MAX_CONTEXT_COLUMNS columns (flagged on the dataset)."""
    chart_part = dataset.cache(
        ("chart_row", spec), lambda: _chart_block(spec, dataset)
    )
    context = dataset.cache(
        ("context_row", state.key_column),
        lambda: _context_block(dataset, state.key_column),
    )
    return np.concatenate([chart_part, context])


def encode_dashboard(
    state: DashboardState,
    dataset: Dataset,
    order: Sequence[int] | None = None,
) -> DashboardFeatures:
    """Matrix encoding of a dashboard state.

    ``order`` permutes chart rows (training shuffles them); the empty
    dashboard yields a single row whose chart block is all zeros but whose
    context blocks are real.
    """
    if not state.charts:
        row = np.zeros(L_FEATURES, dtype=np.float64)
        row[CHART_BLOCK:] = dataset.cache(
            ("context_row", state.key_column),
            lambda: _context_block(dataset, state.key_column),
        )
        return DashboardFeatures(matrix=row[None, :], row_is_empty=(True,))
    indices = list(order) if order is not None else list(range(len(state.charts)))
    if sorted(indices) != list(range(len(state.charts))):
        raise ValueError("order must be a permutation of the chart indices")
    rows = [encode_chart(state.charts[i], state, dataset) for i in indices]
    feats = DashboardFeatures(
        matrix=np.stack(rows), row_is_empty=(False,) * len(rows)
    )
    dump_dir = os.environ.get("DASHRL_DUMP_FEATURES")
    if dump_dir:
        dump_features_csv(feats, Path(dump_dir) / f"{next(_dump_ids)}.csv")
    return feats


_dump_ids = itertools.count()


def dump_features_csv(features: DashboardFeatures, path: Path) -> None:
    """Write one feature matrix as CSV (debugging aid)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, features.matrix, delimiter=",", fmt="%.9g")
