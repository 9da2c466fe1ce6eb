"""Embedding-space similarity: centroid cosine, PCA projection, discriminator AUC."""

from __future__ import annotations

import hashlib
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression

from .embedding import EmbeddingMatrix

log = logging.getLogger(__name__)


class SimilarityError(ValueError):
    pass


@dataclass
class Projection:
    points: dict[str, np.ndarray]  # provenance -> n x 2
    centroids: dict[str, np.ndarray]  # provenance -> 2-vector
    explained_variance: np.ndarray
    degenerate: bool = False


@dataclass
class SimilarityResult:
    cosine_similarity_training_synthetic: float
    discriminator_auc_training_synthetic: float
    cosine_similarity_training_holdout: float | None = None
    discriminator_auc_training_holdout: float | None = None
    pca_projection: Projection | None = None
    warnings: list[str] = field(default_factory=list)


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, EmbeddingMatrix) else np.asarray(x, dtype=float)


def centroid(X) -> np.ndarray:
    X = _data(X)
    if X.shape[0] == 0:
        raise SimilarityError("centroid of an empty matrix")
    return X.mean(axis=0)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise SimilarityError("cosine similarity of a zero vector")
    return float(np.clip(np.dot(u / nu, v / nv), -1.0, 1.0))


def pca_project(matrices: dict[str, object], out_dims: int = 2) -> Projection:
    """Project every matrix and its centroid onto the top principal axes of their union.

    Axes come from the eigendecomposition of the pooled covariance, ordered
    by decreasing eigenvalue; each axis is signed so its largest-magnitude
    loading is positive.
    """
    blocks = {k: _data(v) for k, v in matrices.items()}
    pooled = np.vstack(list(blocks.values()))
    if pooled.shape[0] < 3:
        raise SimilarityError("PCA needs at least 3 rows")
    mean = pooled.mean(axis=0)
    centered = pooled - mean
    cov = centered.T @ centered / (pooled.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:out_dims]
    evals = np.clip(evals[order], 0.0, None)
    axes = evecs[:, order]
    for j in range(axes.shape[1]):
        if axes[np.argmax(np.abs(axes[:, j])), j] < 0:
            axes[:, j] = -axes[:, j]
    degenerate = bool(evals[0] <= 1e-15 * max(1.0, float(np.abs(pooled).max())))
    if degenerate:
        axes = np.zeros_like(axes)
    return Projection(
        points={k: (b - mean) @ axes for k, b in blocks.items()},
        centroids={k: (b.mean(axis=0) - mean) @ axes for k, b in blocks.items()},
        explained_variance=evals,
        degenerate=degenerate,
    )


def rank_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC; tied scores count one half."""
    scores, labels = np.asarray(scores, dtype=float), np.asarray(labels).astype(bool)
    n_pos, n_neg = labels.sum(), (~labels).sum()
    if n_pos == 0 or n_neg == 0:
        raise SimilarityError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    # depends only on (n, folds, seed) so swapping the two inputs keeps every row in its fold
    perm = np.random.default_rng([seed & 0xFFFFFFFF, n]).permutation(n)
    ids = np.empty(n, dtype=int)
    ids[perm] = np.arange(n) % folds
    return ids


def _fit_score(X_tr, y_tr, X_te, max_iter: int) -> np.ndarray:
    mu = X_tr.mean(axis=0)
    sd = X_tr.std(axis=0)
    sd[sd == 0] = 1.0
    clf = LogisticRegression(C=1.0, penalty="l2", solver="lbfgs", max_iter=max_iter, tol=1e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        clf.fit((X_tr - mu) / sd, y_tr)
    return clf.decision_function((X_te - mu) / sd)


def discriminator_auc(
    X_a, X_b, folds: int = 5, seed: int = 42, max_iter: int = 200, warn: list[str] | None = None
) -> float:
    """Out-of-fold AUC of an L2 logistic classifier telling ``X_a`` (label 1) from ``X_b``.

    Folds are stratified and drawn from a seeded permutation per class; each
    fold's features are standardized with its own training statistics. The
    classifier is always fit with the two sets in a content-determined order,
    which makes the result exactly invariant to swapping the inputs (a refit
    with flipped labels would only negate the scores).
    """
    A, B = _data(X_a), _data(X_b)
    if len(A) == 0 or len(B) == 0:
        raise SimilarityError("discriminator needs two non-empty sets")
    k = min(folds, len(A), len(B))
    if k < folds:
        msg = f"discriminator folds reduced from {folds} to {k} (class size)"
        log.warning(msg)
        if warn is not None:
            warn.append(msg)
    swapped = _digest(A) > _digest(B)
    if swapped:
        A, B = B, A
    X = np.vstack([A, B])
    y = np.r_[np.ones(len(A), dtype=int), np.zeros(len(B), dtype=int)]
    if k < 2:
        scores = _fit_score(X, y, X, max_iter)
    else:
        fold = np.r_[_fold_ids(len(A), k, seed), _fold_ids(len(B), k, seed)]
        scores = np.empty(len(y))
        for f in range(k):
            te = fold == f
            scores[te] = _fit_score(X[~te], y[~te], X[te], max_iter)
    return rank_auc(-scores, 1 - y) if swapped else rank_auc(scores, y)


def _digest(X: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(X, dtype=float).tobytes(), digest_size=16).digest()


def compute_similarity(
    trn: EmbeddingMatrix,
    syn: EmbeddingMatrix,
    hol: EmbeddingMatrix | None = None,
    folds: int = 5,
    seed: int = 42,
) -> SimilarityResult:
    warn: list[str] = []
    c_trn = centroid(trn)
    res = SimilarityResult(
        cosine_similarity_training_synthetic=cosine_similarity(c_trn, centroid(syn)),
        discriminator_auc_training_synthetic=discriminator_auc(trn, syn, folds, seed, warn=warn),
        warnings=warn,
    )
    if hol is not None:
        res.cosine_similarity_training_holdout = cosine_similarity(c_trn, centroid(hol))
        res.discriminator_auc_training_holdout = discriminator_auc(trn, hol, folds, seed, warn=warn)
    sets = {"trn": trn, "syn": syn} | ({"hol": hol} if hol is not None else {})
    if sum(m.rows for m in sets.values()) >= 3:
        res.pca_projection = pca_project(sets)
        if res.pca_projection.degenerate:
            warn.append("PCA: all embeddings identical; projection is zero")
    return res
