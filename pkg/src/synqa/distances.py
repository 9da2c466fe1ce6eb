"""Distance-to-closest-record metrics and identical-match shares."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datamodel import Dataset
from .embedding import EmbeddingMatrix

TIE_TOL = 1e-12
QUERY_BLOCK = 256


class DistanceError(ValueError):
    pass


@dataclass
class DistancesResult:
    dcr_training: float
    ims_training: float | None = None
    dcr_holdout: float | None = None
    dcr_share: float | None = None
    ims_holdout: float | None = None
    dcr_cdf_training: np.ndarray = field(default_factory=lambda: np.empty(0))
    dcr_cdf_holdout: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, EmbeddingMatrix) else np.asarray(x, dtype=float)


def exact_distance(q: np.ndarray, r: np.ndarray) -> float:
    """L2 distance as sqrt of the summed squared differences."""
    return float(np.sqrt(np.sum((q - r) ** 2)))


def _block_min(Q: np.ndarray, R: np.ndarray, r_sq: np.ndarray) -> np.ndarray:
    """Exact nearest distances for one query block.

    A GEMM pass screens candidates; every reference within a rounding margin
    of the screened minimum is re-evaluated with the direct difference
    formula, so results equal a pairwise brute-force scan bit-for-bit.
    """
    q_sq = np.einsum("ij,ij->i", Q, Q)
    d2 = q_sq[:, None] + r_sq[None, :] - 2.0 * (Q @ R.T)
    lo = d2.min(axis=1)
    # generous bound on the cancellation error of the expanded form
    margin = 1e-10 * (q_sq + r_sq.max()) + 1e-300
    out = np.empty(len(Q))
    for i in range(len(Q)):
        idx = np.flatnonzero(d2[i] <= lo[i] + 2.0 * margin[i])
        out[i] = np.sqrt(np.sum((R[idx] - Q[i]) ** 2, axis=1).min())
    return out


def nearest_distances(queries, reference, workers: int = 1) -> np.ndarray:
    """Exact nearest-neighbor L2 distance from each query row to ``reference``."""
    Q, R = _data(queries), _data(reference)
    if len(R) == 0:
        raise DistanceError("empty reference set")
    if len(Q) == 0:
        return np.empty(0)
    if Q.ndim == 1:
        Q = Q[None, :]
    r_sq = np.einsum("ij,ij->i", R, R)
    starts = range(0, len(Q), QUERY_BLOCK)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        parts = list(pool.map(lambda s: _block_min(Q[s : s + QUERY_BLOCK], R, r_sq), starts))
    return np.concatenate(parts)


def nearest_distance(query: np.ndarray, reference) -> float:
    return float(nearest_distances(np.asarray(query, dtype=float)[None, :], reference)[0])


def equalize(n_trn: int, n_hol: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Row indices that cut the larger of training/holdout down to the smaller size."""
    rng = np.random.default_rng(seed)
    n = min(n_trn, n_hol)
    pick = lambda size: np.arange(size) if size == n else np.sort(rng.choice(size, n, replace=False))
    return pick(n_trn), pick(n_hol)


def dcr_share_from(d_trn: np.ndarray, d_hol: np.ndarray) -> float:
    """Share of queries closer to training than holdout; ties (squared gap < 1e-12) count 0.5."""
    gap = d_trn**2 - d_hol**2
    tie = np.abs(gap) < TIE_TOL
    ind = np.where(tie, 0.5, np.where(gap < 0, 1.0, 0.0))
    return float(ind.mean())


def dcr_metrics(X_syn, X_trn, X_hol=None, seed: int = 42, workers: int = 1) -> DistancesResult:
    S, T = _data(X_syn), _data(X_trn)
    if len(S) == 0:
        raise DistanceError("empty synthetic set")
    if len(T) == 0:
        raise DistanceError("empty training set")
    if X_hol is None:
        d_trn = nearest_distances(S, T, workers)
        return DistancesResult(dcr_training=float(d_trn.mean()), dcr_cdf_training=np.sort(d_trn))
    H = _data(X_hol)
    if len(H) == 0:
        raise DistanceError("empty holdout set")
    it, ih = equalize(len(T), len(H), seed)
    d_trn = nearest_distances(S, T[it], workers)
    d_hol = nearest_distances(S, H[ih], workers)
    return DistancesResult(
        dcr_training=float(d_trn.mean()),
        dcr_holdout=float(d_hol.mean()),
        dcr_share=dcr_share_from(d_trn, d_hol),
        dcr_cdf_training=np.sort(d_trn),
        dcr_cdf_holdout=np.sort(d_hol),
    )


def sample_keys(ds: Dataset) -> list[tuple]:
    """Hashable raw-value key per sample: a row, or a subject's full event list."""
    value_cols = [ds[c] for c in ds.target_columns]
    ctx_cols = [ds[c] for c in ds.value_columns if c in ds.context_columns]
    row = lambda i: tuple(c.raw(i) for c in value_cols)
    if not ds.is_sequential:
        return [tuple(c.raw(i) for c in ctx_cols) + row(i) for i in range(ds.n_rows)]
    keys = []
    for rows in ds.subjects():
        ctx = tuple(c.raw(rows[0]) for c in ctx_cols)
        keys.append((ctx, tuple(row(i) for i in rows)))
    return keys


def identical_match_share(syn: Dataset, reference: Dataset) -> float:
    """Share of synthetic samples equal to at least one reference sample on raw values."""
    ref = set(sample_keys(reference))
    keys = sample_keys(syn)
    if not keys:
        return 0.0
    return sum(k in ref for k in keys) / len(keys)
