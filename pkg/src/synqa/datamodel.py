"""Typed columnar datasets, CSV ingestion and context joins."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ColumnType",
    "Column",
    "Dataset",
    "ContextJoin",
    "Alignment",
    "DataError",
    "CTX_PREFIX",
    "load_dataset",
    "load_schema_hints",
    "join_context",
    "align_columns",
    "conform",
    "parse_datetime_ms",
    "format_datetime_ms",
]

CTX_PREFIX = "ctx."
ROLES = ("trn", "hol", "syn")


class DataError(ValueError):
    """Raised for malformed input data or violated dataset invariants."""


class ColumnType(str, enum.Enum):
    CATEGORICAL = "categorical"
    NUMERIC = "numeric"
    DATETIME = "datetime"
    TEXT = "text"

    @property
    def is_numeric_like(self) -> bool:
        return self in (ColumnType.NUMERIC, ColumnType.DATETIME)


@dataclass(frozen=True)
class Column:
    """A named, typed value array.

    Numeric columns hold float64 with NaN for missing. Datetime columns hold
    epoch milliseconds as float64 (exact below 2**53) with NaN for missing.
    Categorical and text columns hold an object array of ``str`` or ``None``.
    """

    name: str
    kind: ColumnType
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def missing_mask(self) -> np.ndarray:
        if self.kind.is_numeric_like:
            return np.isnan(self.values)
        return np.array([v is None for v in self.values], dtype=bool)

    def take(self, idx: np.ndarray) -> "Column":
        return Column(self.name, self.kind, self.values[idx])

    def raw(self, i: int):
        """Hashable value at row ``i``; missing is ``None``."""
        v = self.values[i]
        if self.kind.is_numeric_like:
            return None if math.isnan(v) else float(v)
        return v


@dataclass(frozen=True)
class Dataset:
    name: str
    columns: tuple[Column, ...]
    sequence_key: str | None = None
    context_columns: frozenset[str] = field(default_factory=frozenset)
    key_columns: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError(f"{self.name}: duplicate column names")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise DataError(f"{self.name}: columns have unequal lengths {sorted(lengths)}")
        if self.sequence_key is not None:
            if self.sequence_key not in names:
                raise DataError(f"{self.name}: sequence key {self.sequence_key!r} not found")
            if self[self.sequence_key].missing_mask().any():
                raise DataError(f"{self.name}: sequence key {self.sequence_key!r} has missing values")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def is_sequential(self) -> bool:
        return self.sequence_key is not None

    def __getitem__(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    @property
    def value_columns(self) -> list[str]:
        """Columns that carry data, i.e. everything except join/sequence keys."""
        skip = set(self.key_columns)
        if self.sequence_key:
            skip.add(self.sequence_key)
        return [c.name for c in self.columns if c.name not in skip]

    @property
    def target_columns(self) -> list[str]:
        return [n for n in self.value_columns if n not in self.context_columns]

    def take(self, idx: np.ndarray) -> "Dataset":
        return replace(self, columns=tuple(c.take(idx) for c in self.columns))

    def with_name(self, name: str) -> "Dataset":
        return replace(self, name=name)

    def subjects(self) -> list[np.ndarray]:
        """Row indices per subject, subjects in first-appearance order, rows in file order."""
        if self.sequence_key is None:
            return [np.array([i]) for i in range(self.n_rows)]
        groups: dict = {}
        key = self[self.sequence_key]
        for i in range(self.n_rows):
            groups.setdefault(key.raw(i), []).append(i)
        return [np.array(v) for v in groups.values()]

    def subject_ids(self) -> list:
        if self.sequence_key is None:
            return list(range(self.n_rows))
        key = self[self.sequence_key]
        seen: dict = {}
        for i in range(self.n_rows):
            seen.setdefault(key.raw(i), None)
        return list(seen)


@dataclass(frozen=True)
class ContextJoin:
    ctx_primary_key: str
    tgt_context_key: str


@dataclass(frozen=True)
class Alignment:
    columns: list[tuple[str, ColumnType]]
    warnings: list[str]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.columns]


# -- parsing -----------------------------------------------------------------


def _parse_number(s: str) -> float | None:
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def parse_datetime_ms(s: str) -> float | None:
    """Parse an ISO-8601 date or datetime into epoch milliseconds (naive = UTC)."""
    s = s.strip()
    if len(s) < 10 or not s[:4].isdigit() or s[4] != "-":
        return None
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(s)
    except ValueError:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
    # integer arithmetic keeps sub-second values exact
    return float((delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000)


def format_datetime_ms(ms: float) -> str:
    dt = datetime(1970, 1, 1) + timedelta(milliseconds=int(ms))
    if dt.hour == dt.minute == dt.second == dt.microsecond == 0:
        return dt.date().isoformat()
    return dt.isoformat(timespec="milliseconds" if dt.microsecond else "seconds")


def infer_kind(raw: Sequence[str | None]) -> ColumnType:
    present = [v for v in raw if v is not None]
    if not present:
        return ColumnType.CATEGORICAL
    if all(_parse_number(v) is not None for v in present):
        return ColumnType.NUMERIC
    if all(parse_datetime_ms(v) is not None for v in present):
        return ColumnType.DATETIME
    return ColumnType.CATEGORICAL


def make_column(name: str, kind: ColumnType, raw: Sequence[str | None]) -> tuple[Column, int]:
    """Build a column from raw strings; returns the column and the count of unparseable cells."""
    bad = 0
    if kind.is_numeric_like:
        parse = _parse_number if kind is ColumnType.NUMERIC else parse_datetime_ms
        out = np.full(len(raw), np.nan)
        for i, v in enumerate(raw):
            if v is None:
                continue
            p = parse(v)
            if p is None:
                bad += 1
            else:
                out[i] = p
    else:
        out = np.empty(len(raw), dtype=object)
        out[:] = list(raw)
    return Column(name, kind, out), bad


def _as_string(col: Column, i: int) -> str | None:
    v = col.raw(i)
    if v is None:
        return None
    if col.kind is ColumnType.NUMERIC:
        return repr(v)
    if col.kind is ColumnType.DATETIME:
        return format_datetime_ms(v)
    return v


def load_schema_hints(path: str | Path) -> dict[str, ColumnType]:
    """Read ``column=type`` (or ``column: type``) lines; ``#`` starts a comment."""
    hints = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise DataError(f"{path}:{lineno}: expected 'column=type'")
        k, v = (p.strip() for p in line.split(sep, 1))
        try:
            hints[k] = ColumnType(v.lower())
        except ValueError:
            raise DataError(f"{path}:{lineno}: unknown column type {v!r}") from None
    return hints


def load_dataset(
    path: str | Path,
    schema_hints: Mapping[str, ColumnType | str] | None = None,
    name: str = "trn",
    sequence_key: str | None = None,
) -> Dataset:
    """Load a comma-delimited UTF-8 file with a header row.

    Empty cells are missing. Column types are inferred unless overridden by
    ``schema_hints``; hinted cells that fail to parse raise ``DataError``.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    # csv yields [] for a blank line: an empty cell for one-column files, else nothing
    body = [[""] if not r and len(header) == 1 else r for r in body]
    body = [r for r in body if r]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"{path}: duplicate header names {dupes}")
    for lineno, r in enumerate(body, 2):
        if len(r) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(r)}")
    hints = {k: ColumnType(v) for k, v in (schema_hints or {}).items()}
    columns = []
    for j, col_name in enumerate(header):
        raw = [r[j] if r[j] != "" else None for r in body]
        kind = hints.get(col_name) or infer_kind(raw)
        col, bad = make_column(col_name, kind, raw)
        if bad:
            raise DataError(f"{path}: {bad} value(s) in column {col_name!r} do not parse as {kind.value}")
        columns.append(col)
    return Dataset(name=name, columns=tuple(columns), sequence_key=sequence_key)


def from_records(
    records: Iterable[Mapping[str, object]] | Mapping[str, Sequence],
    kinds: Mapping[str, ColumnType | str] | None = None,
    name: str = "trn",
    sequence_key: str | None = None,
) -> Dataset:
    """Build a dataset from in-memory rows or a column mapping (strings, numbers or None)."""
    if isinstance(records, Mapping):
        cols = {k: list(v) for k, v in records.items()}
    else:
        records = list(records)
        names = list(dict.fromkeys(k for r in records for k in r))
        cols = {k: [r.get(k) for r in records] for k in names}
    kinds = {k: ColumnType(v) for k, v in (kinds or {}).items()}
    columns = []
    for col_name, vals in cols.items():
        raw = [None if v is None or (isinstance(v, float) and math.isnan(v)) else v for v in vals]
        kind = kinds.get(col_name)
        if kind is None:
            kind = infer_kind([None if v is None else str(v) for v in raw])
        if kind.is_numeric_like:
            if kind is ColumnType.DATETIME:
                raw = [v if v is None or not isinstance(v, str) else parse_datetime_ms(v) for v in raw]
            out = np.array([np.nan if v is None else float(v) for v in raw], dtype=float)
            columns.append(Column(col_name, kind, out))
        else:
            out = np.empty(len(raw), dtype=object)
            out[:] = [None if v is None else str(v) for v in raw]
            columns.append(Column(col_name, kind, out))
    return Dataset(name=name, columns=tuple(columns), sequence_key=sequence_key)


# -- joins and alignment -----------------------------------------------------


def join_context(target: Dataset, context: Dataset, join: ContextJoin) -> Dataset:
    """Broadcast context attributes onto target rows via the foreign key.

    Context columns are prefixed with ``ctx.``; the primary key itself is not
    copied. Target row order and count are preserved.
    """
    pk = context[join.ctx_primary_key]
    fk = target[join.tgt_context_key]
    index: dict = {}
    for i in range(context.n_rows):
        k = pk.raw(i)
        if k is None:
            raise DataError(f"{context.name}: missing value in primary key {join.ctx_primary_key!r}")
        if k in index:
            raise DataError(f"{context.name}: duplicate primary key {k!r}")
        index[k] = i
    rows = np.empty(target.n_rows, dtype=int)
    for i in range(target.n_rows):
        k = fk.raw(i)
        if k not in index:
            raise DataError(f"{target.name}: orphan context key {k!r} in {join.tgt_context_key!r}")
        rows[i] = index[k]
    added = []
    for c in context.columns:
        if c.name == join.ctx_primary_key:
            continue
        added.append(Column(CTX_PREFIX + c.name, c.kind, c.values[rows]))
    return replace(
        target,
        columns=target.columns + tuple(added),
        context_columns=target.context_columns | {c.name for c in added},
        key_columns=target.key_columns | {join.tgt_context_key},
    )


def align_columns(trn: Dataset, syn: Dataset, hol: Dataset | None = None) -> Alignment:
    """Ordered intersection of column names, typed as in training."""
    present = [syn] + ([hol] if hol is not None else [])
    names, warnings = [], []
    for c in trn.columns:
        missing_in = [d.name for d in present if c.name not in d]
        if missing_in:
            warnings.append(f"column {c.name!r} missing from {', '.join(missing_in)}; excluded")
        else:
            names.append((c.name, c.kind))
    for d in present:
        extra = [n for n in d.column_names if n not in trn]
        if extra:
            warnings.append(f"columns {extra} of {d.name} not in trn; excluded")
    if not names:
        raise DataError("no columns shared by all datasets")
    return Alignment(names, warnings)


def conform(ds: Dataset, alignment: Alignment) -> tuple[Dataset, list[str]]:
    """Restrict to aligned columns and cast to training types.

    Cells that do not parse under the training type become missing and are
    reported as warnings.
    """
    cols, warnings = [], []
    for name, kind in alignment.columns:
        col = ds[name]
        if col.kind is not kind:
            raw = [_as_string(col, i) for i in range(len(col))]
            col, bad = make_column(name, kind, raw)
            if bad:
                warnings.append(f"{ds.name}.{name}: {bad} value(s) not {kind.value}; treated as missing")
        cols.append(col)
    keep = set(alignment.names)
    out = replace(
        ds,
        columns=tuple(cols),
        context_columns=frozenset(ds.context_columns & keep),
        key_columns=frozenset(ds.key_columns & keep),
    )
    return out, warnings
