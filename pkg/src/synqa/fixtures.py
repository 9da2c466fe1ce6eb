"""Seeded synthetic fixtures and perturbations used by tests and experiment scripts."""

from __future__ import annotations

import csv

import numpy as np

from .datamodel import Column, ColumnType, Dataset
from .embedding import format_value

CITIES = ["Wien", "Graz", "Linz", "Salzburg", "Innsbruck", "Klagenfurt", "Villach", "Wels", "Steyr", "Dornbirn",
          "Bregenz", "Krems", "Baden", "Leoben"]
SEGMENTS = ["A", "B", "C"]
DAY_MS = 86_400_000.0
EPOCH_2020 = 1_577_836_800_000.0


def _cat(values) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    out[:] = [None if v is None else str(v) for v in values]
    return out


def mixed_dataset(n: int, seed: int = 0, name: str = "trn", missing_rate: float = 0.05) -> Dataset:
    """Flat mixed-type table with dependent columns and some missing values.

    Columns: ``age`` (numeric), ``income`` (numeric, depends on age and
    segment), ``city`` (categorical, 14 levels, skewed), ``segment``
    (categorical), ``signup`` (datetime).
    """
    rng = np.random.default_rng(seed)
    segment = rng.choice(3, size=n, p=[0.5, 0.3, 0.2])
    age = np.round(rng.normal(40 + 5 * segment, 12).clip(18, 90))
    income = np.round(np.exp(rng.normal(10 + 0.01 * age + 0.3 * segment, 0.4)), 2)
    weights = 1.0 / np.arange(1, len(CITIES) + 1)
    city = rng.choice(len(CITIES), size=n, p=weights / weights.sum())
    signup = EPOCH_2020 + DAY_MS * rng.integers(0, 1500, size=n) + 1000.0 * rng.integers(0, 86_400, size=n)
    age[rng.random(n) < missing_rate] = np.nan
    city_vals = [CITIES[c] if rng.random() >= missing_rate else None for c in city]
    return Dataset(
        name=name,
        columns=(
            Column("age", ColumnType.NUMERIC, age),
            Column("income", ColumnType.NUMERIC, income),
            Column("city", ColumnType.CATEGORICAL, _cat(city_vals)),
            Column("segment", ColumnType.CATEGORICAL, _cat([SEGMENTS[s] for s in segment])),
            Column("signup", ColumnType.DATETIME, signup.astype(float)),
        ),
    )


def sequential_dataset(
    n_subjects: int, seed: int = 0, name: str = "trn", phi: float = 0.9, min_len: int = 2, max_len: int = 12
) -> Dataset:
    """Per-subject autocorrelated event sequences keyed by ``user_id``.

    ``level`` follows an AR(1) process with coefficient ``phi``; ``state`` is
    a sticky three-state Markov chain; ``amount`` tracks the level.
    """
    rng = np.random.default_rng(seed)
    ids, level, state, amount = [], [], [], []
    states = ["idle", "active", "busy"]
    for s in range(n_subjects):
        length = int(rng.integers(min_len, max_len + 1))
        x = rng.normal(0, 1)
        st = int(rng.integers(0, 3))
        for _ in range(length):
            ids.append(f"u{seed}_{s}")
            level.append(x)
            state.append(states[st])
            amount.append(round(10 + 3 * x + rng.normal(0, 0.5), 2))
            x = phi * x + np.sqrt(1 - phi**2) * rng.normal(0, 1)
            if rng.random() < 0.15:
                st = int(rng.integers(0, 3))
    return Dataset(
        name=name,
        columns=(
            Column("user_id", ColumnType.CATEGORICAL, _cat(ids)),
            Column("level", ColumnType.NUMERIC, np.round(np.array(level), 4)),
            Column("state", ColumnType.CATEGORICAL, _cat(state)),
            Column("amount", ColumnType.NUMERIC, np.array(amount)),
        ),
        sequence_key="user_id",
    )


def shuffle_within_subjects(ds: Dataset, seed: int = 0) -> Dataset:
    """Permute event order inside every subject, keeping each subject's event multiset."""
    rng = np.random.default_rng(seed)
    order = np.concatenate([rows[rng.permutation(len(rows))] for rows in ds.subjects()])
    # keep subject ids in place; only the value columns move
    out = []
    for c in ds.columns:
        src = np.concatenate(ds.subjects()) if c.name == ds.sequence_key else order
        out.append(Column(c.name, c.kind, c.values[src]))
    return Dataset(ds.name, tuple(out), ds.sequence_key, ds.context_columns, ds.key_columns)


def split(ds: Dataset, frac: float = 0.5, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Random split into (trn, hol) by sample: rows for flat data, subjects for sequential data."""
    rng = np.random.default_rng(seed)
    subjects = ds.subjects()
    perm = rng.permutation(len(subjects))
    cut = int(round(frac * len(subjects)))
    a = np.sort(np.concatenate([subjects[i] for i in perm[:cut]]))
    b = np.sort(np.concatenate([subjects[i] for i in perm[cut:]]))
    return ds.take(a).with_name("trn"), ds.take(b).with_name("hol")


def flip_k(ds: Dataset, k_percent: float, seed: int = 0, name: str = "syn") -> Dataset:
    """Replace each cell, with probability ``k_percent``%, by the same column's value in a random record."""
    rng = np.random.default_rng(seed)
    p = k_percent / 100.0
    n = ds.n_rows
    cols = []
    for c in ds.columns:
        flip = rng.random(n) < p
        donor = rng.integers(0, n, size=n)
        vals = c.values.copy()
        if c.name not in (ds.sequence_key,) and c.name not in ds.key_columns:
            vals[flip] = c.values[donor[flip]]
        cols.append(Column(c.name, c.kind, vals))
    return Dataset(name, tuple(cols), ds.sequence_key, ds.context_columns, ds.key_columns)


def to_csv(ds: Dataset, path) -> None:
    """Write a dataset as UTF-8 CSV in the format ``load_dataset`` reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ds.column_names)
        for i in range(ds.n_rows):
            w.writerow([format_value(c.raw(i), c.kind) for c in ds.columns])
