"""CSV loading, column type inference, and the immutable Dataset container."""

from __future__ import annotations

import csv
import io
import json
import uuid
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .config import MAX_CONTEXT_COLUMNS

QUANTITATIVE = "quantitative"
NOMINAL = "nominal"
TEMPORAL = "temporal"
CTYPES = (QUANTITATIVE, NOMINAL, TEMPORAL)

#: Cells treated as missing, compared case-insensitively after stripping.
MISSING_TOKENS = frozenset({"", "na", "n/a", "nan", "null", "none"})

#: Share of parseable cells required to call a column quantitative/temporal.
NUMERIC_SHARE = 0.95
DATE_SHARE = 0.80

_DATE_FORMATS = (
    "%Y/%m/%d",
    "%m/%d/%Y",
    "%m/%d/%y",
    "%b %d %Y",
    "%b %d, %Y",
    "%B %d %Y",
    "%B %d, %Y",
    "%d %b %Y",
    "%d-%b-%Y",
    "%Y-%m",
)


class DataLoadError(ValueError):
    """Raised when a CSV stream cannot be turned into a Dataset."""


class UnknownColumnError(KeyError):
    """Referenced column does not exist in the dataset."""


def is_missing(cell: Any) -> bool:
    if cell is None:
        return True
    if isinstance(cell, float):
        return cell != cell  # NaN
    if isinstance(cell, str):
        return cell.strip().lower() in MISSING_TOKENS
    return False


def parse_number(cell: Any) -> float | None:
    if isinstance(cell, (int, float)):
        return float(cell)
    try:
        return float(str(cell).strip())
    except (TypeError, ValueError):
        return None


def parse_date(cell: Any) -> datetime | None:
    if isinstance(cell, datetime):
        return cell
    text = str(cell).strip()
    # Reject bare numbers early so integer columns never read as dates.
    if parse_number(text) is not None:
        return None
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        pass
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    return None


def infer_column_type(values: Sequence[Any]) -> str:
    """Classify a list of cells as quantitative, temporal, or nominal.

    Precedence: >=95% numeric-parseable cells make a column quantitative,
    else >=80% date-parseable cells make it temporal, else it is nominal.
    Missing cells are ignored; an all-missing column falls back to nominal.
    """
    present = [v for v in values if not is_missing(v)]
    if not present:
        return NOMINAL
    n = len(present)
    numeric = sum(1 for v in present if parse_number(v) is not None)
    if numeric >= NUMERIC_SHARE * n:
        return QUANTITATIVE
    dated = sum(1 for v in present if parse_date(v) is not None)
    if dated >= DATE_SHARE * n:
        return TEMPORAL
    return NOMINAL


@dataclass(frozen=True)
class ColumnProfile:
    """One dataset column with canonically parsed cells.

    ``values`` holds floats for quantitative columns, datetimes for temporal
    ones, and stripped strings for nominal ones; None marks a missing or
    unparseable cell.
    """

    name: str
    ctype: str
    values: tuple
    missing_ratio: float

    @property
    def n_rows(self) -> int:
        return len(self.values)

    def non_missing(self) -> list:
        return [v for v in self.values if v is not None]


def _canonical_cell(raw: Any, ctype: str) -> Any:
    if is_missing(raw):
        return None
    if ctype == QUANTITATIVE:
        return parse_number(raw)
    if ctype == TEMPORAL:
        return parse_date(raw)
    return str(raw).strip()


def build_profile(name: str, raw_values: Sequence[Any]) -> ColumnProfile:
    ctype = infer_column_type(raw_values)
    values = tuple(_canonical_cell(v, ctype) for v in raw_values)
    missing = sum(1 for v in values if v is None)
    ratio = missing / len(values) if values else 1.0
    return ColumnProfile(name=name, ctype=ctype, values=values, missing_ratio=ratio)


class Dataset:
    """Immutable collection of typed columns plus a memo cache.

    Instances never change after construction, so derived artifacts
    (transforms, feature vectors, valid-action tables) are memoized on the
    dataset itself and shared safely across worker threads.
    """

    def __init__(
        self,
        columns: Iterable[ColumnProfile],
        n_rows: int,
        name: str = "dataset",
        dataset_id: str | None = None,
        source_text: str | None = None,
    ):
        self.columns = tuple(columns)
        self.n_rows = n_rows
        self.name = name
        self.dataset_id = dataset_id or uuid.uuid4().hex[:12]
        self.source_text = source_text
        self._by_name = {c.name: c for c in self.columns}
        self._cache: dict = {}

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def truncated(self) -> bool:
        """True when the dataset exceeds the encoder's column capacity."""
        return len(self.columns) > MAX_CONTEXT_COLUMNS

    @property
    def visible_columns(self) -> tuple[ColumnProfile, ...]:
        """Columns the agent can address (first MAX_CONTEXT_COLUMNS)."""
        return self.columns[:MAX_CONTEXT_COLUMNS]

    def column(self, name: str) -> ColumnProfile:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownColumnError(name) from None

    def has_column(self, name: str) -> bool:
        return name in self._by_name

    def ctype(self, name: str) -> str:
        return self.column(name).ctype

    def cache(self, key, builder: Callable[[], Any]) -> Any:
        """Memoize ``builder()`` under ``key``.

        Benign under concurrency: duplicate builds produce equal values
        because every builder in this codebase is a pure function of the
        immutable dataset.
        """
        try:
            return self._cache[key]
        except KeyError:
            value = builder()
            self._cache[key] = value
            return value


def load_dataset(source, name: str | None = None) -> Dataset:
    """Parse a CSV stream (text, file object, or path) into a Dataset.

    The first row is the header. Raises DataLoadError for empty input,
    header-only input, and ragged rows (naming the offending row, with the
    header as row 1).
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
        name = name or source.stem
    elif hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        text = str(source)

    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataLoadError("empty stream")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise DataLoadError(f"expected at least 2 columns, found {len(header)}")
    if any(not h for h in header):
        raise DataLoadError("empty column name in header")
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataLoadError(f"duplicate column names: {', '.join(dupes)}")

    body = rows[1:]
    if not body:
        raise DataLoadError("no data rows")
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataLoadError(
                f"row {i}: expected {len(header)} fields, found {len(row)}"
            )

    profiles = [
        build_profile(col_name, [row[j] for row in body])
        for j, col_name in enumerate(header)
    ]
    return Dataset(
        profiles, n_rows=len(body), name=name or "dataset", source_text=text
    )


# ---------------------------------------------------------------------------
# Directory persistence: {id, source CSV, cached column profiles as JSON}

PROFILE_FILE = "profile.json"
SOURCE_FILE = "source.csv"


def save_dataset(dataset: Dataset, directory: Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if dataset.source_text is None:
        raise ValueError("dataset has no source text to persist")
    (directory / SOURCE_FILE).write_text(dataset.source_text, encoding="utf-8")
    meta = {
        "id": dataset.dataset_id,
        "name": dataset.name,
        "n_rows": dataset.n_rows,
        "columns": [
            {"name": c.name, "ctype": c.ctype, "missing_ratio": c.missing_ratio}
            for c in dataset.columns
        ],
    }
    (directory / PROFILE_FILE).write_text(
        json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8"
    )


def open_dataset(directory: Path) -> Dataset:
    directory = Path(directory)
    meta = json.loads((directory / PROFILE_FILE).read_text(encoding="utf-8"))
    ds = load_dataset(directory / SOURCE_FILE, name=meta.get("name"))
    ds.dataset_id = meta["id"]
    cached = {c["name"]: c["ctype"] for c in meta.get("columns", [])}
    fresh = {c.name: c.ctype for c in ds.columns}
    if cached and cached != fresh:
        raise DataLoadError(
            f"cached profile disagrees with re-inferred types for {directory}"
        )
    return ds
