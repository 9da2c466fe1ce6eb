"""Training-derived discretization: decile edges and top-k categories."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datamodel import Column

EXCLUDED = -1


class BinningError(ValueError):
    pass


@dataclass(frozen=True)
class BinningSpec:
    """Discretization of one column.

    Bins ``0 .. n_bins-1`` are the value bins; ``n_bins`` is the missing bin
    when ``includes_missing_bin`` is set. Categorical values outside
    ``labels`` map to :data:`EXCLUDED`.
    """

    column: str
    kind: str  # "decile_edges" | "top_categories"
    edges: tuple[float, ...] = ()
    labels: tuple[str, ...] = ()
    includes_missing_bin: bool = True

    def __post_init__(self):
        if self.kind == "decile_edges":
            if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
                raise BinningError(f"{self.column}: edges not strictly ascending")
        elif self.kind == "top_categories":
            if len(set(self.labels)) != len(self.labels):
                raise BinningError(f"{self.column}: duplicate labels")
        else:
            raise BinningError(f"unknown binning kind {self.kind!r}")

    @property
    def is_numeric(self) -> bool:
        return self.kind == "decile_edges"

    @property
    def n_bins(self) -> int:
        return len(self.edges) + 1 if self.is_numeric else len(self.labels)

    @property
    def missing_index(self) -> int:
        return self.n_bins

    @property
    def size(self) -> int:
        """Length of the frequency vector."""
        return self.n_bins + int(self.includes_missing_bin)

    def bin_labels(self) -> list[str]:
        if self.is_numeric:
            e = [f"{x:.6g}" for x in self.edges]
            if not e:
                out = ["(all)"]
            else:
                out = [f"≤{e[0]}"] + [f"({a}, {b}]" for a, b in zip(e, e[1:])] + [f">{e[-1]}"]
        else:
            out = list(self.labels)
        if self.includes_missing_bin:
            out.append("(missing)")
        return out

    def to_dict(self) -> dict:
        d = {"column": self.column, "kind": self.kind, "includes_missing_bin": self.includes_missing_bin}
        if self.is_numeric:
            d["edges"] = list(self.edges)
        else:
            d["labels"] = list(self.labels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BinningSpec":
        return cls(
            column=d["column"],
            kind=d["kind"],
            edges=tuple(d.get("edges", ())),
            labels=tuple(d.get("labels", ())),
            includes_missing_bin=d.get("includes_missing_bin", True),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def midpoint_quantiles(sorted_values: np.ndarray, probs: Sequence[float]) -> np.ndarray:
    """Quantiles by the midpoint rule on sorted data (average of the two bracketing order statistics)."""
    n = len(sorted_values)
    pos = np.asarray(probs, dtype=float) * (n - 1)
    lo = np.floor(pos).astype(int)
    hi = np.ceil(pos).astype(int)
    return (sorted_values[lo] + sorted_values[hi]) / 2.0


def fit_numeric_bins(column: str, training_values: np.ndarray, k: int = 10) -> BinningSpec:
    if k < 1:
        raise BinningError("k must be >= 1")
    x = np.asarray(training_values, dtype=float)
    x = np.sort(x[~np.isnan(x)])
    if len(x) == 0:
        return BinningSpec(column, "decile_edges", ())
    edges = np.unique(midpoint_quantiles(x, [i / k for i in range(1, k)])) if k > 1 else np.array([])
    # an edge at the maximum would leave the top bin empty on training data
    edges = edges[edges < x[-1]]
    return BinningSpec(column, "decile_edges", tuple(float(e) for e in edges))


def fit_top_categories(column: str, training_values: Sequence, k: int = 10) -> BinningSpec:
    if k < 1:
        raise BinningError("k must be >= 1")
    counts = Counter(v for v in training_values if v is not None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return BinningSpec(column, "top_categories", labels=tuple(lbl for lbl, _ in ranked[:k]))


def fit_binning(col: Column, k: int = 10) -> BinningSpec:
    if col.kind.is_numeric_like:
        return fit_numeric_bins(col.name, col.values, k)
    return fit_top_categories(col.name, col.values, k)


def apply_binning(values: np.ndarray, spec: BinningSpec) -> np.ndarray:
    """Map values to bin indices; missing -> missing bin, unknown category -> ``EXCLUDED``."""
    if spec.is_numeric:
        x = np.asarray(values, dtype=float)
        # side="left": a value equal to an edge belongs to the lower bin
        out = np.searchsorted(np.asarray(spec.edges, dtype=float), x, side="left")
        miss = np.isnan(x)
    else:
        lookup = {lbl: i for i, lbl in enumerate(spec.labels)}
        out = np.array([lookup.get(v, EXCLUDED) for v in values], dtype=np.int64)
        miss = np.array([v is None for v in values], dtype=bool)
    out = out.astype(np.int64)
    out[miss] = spec.missing_index if spec.includes_missing_bin else EXCLUDED
    return out


def bin_counts(bin_indices: np.ndarray, spec: BinningSpec) -> np.ndarray:
    idx = np.asarray(bin_indices)
    return np.bincount(idx[idx != EXCLUDED], minlength=spec.size).astype(float)


def frequency_vector(bin_indices: np.ndarray, spec: BinningSpec) -> np.ndarray:
    """Proportions over the binning's bins; excluded rows are dropped before normalizing."""
    counts = bin_counts(bin_indices, spec)
    total = counts.sum()
    if total == 0:
        raise BinningError(f"{spec.column}: no usable rows for a frequency vector")
    return counts / total


def contingency_table(
    idx_m: np.ndarray, idx_n: np.ndarray, spec_m: BinningSpec, spec_n: BinningSpec
) -> np.ndarray:
    """Normalized joint frequency table; rows where either side is excluded are dropped."""
    idx_m, idx_n = np.asarray(idx_m), np.asarray(idx_n)
    keep = (idx_m != EXCLUDED) & (idx_n != EXCLUDED)
    flat = idx_m[keep] * spec_n.size + idx_n[keep]
    counts = np.bincount(flat, minlength=spec_m.size * spec_n.size).astype(float)
    total = counts.sum()
    if total == 0:
        raise BinningError(f"({spec_m.column}, {spec_n.column}): no usable rows for a contingency table")
    return (counts / total).reshape(spec_m.size, spec_n.size)
