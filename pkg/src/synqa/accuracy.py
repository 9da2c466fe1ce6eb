"""Univariate, bivariate and coherence accuracy (1 - total variation distance).

All distributions are discretized with training-fitted :class:`BinningSpec`
objects. Every accuracy comes with a reference ``*_max`` value: the expected
accuracy a same-sized holdout sample would reach, derived from the training
proportions under a normal approximation of the sampling noise.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .binning import BinningError, BinningSpec, apply_binning, contingency_table, fit_binning, frequency_vector
from .datamodel import Column, DataError, Dataset

PRIME = "'"


class AccuracyError(ValueError):
    pass


@dataclass
class AccuracyResult:
    per_column_univariate: dict[str, float]
    per_pair_bivariate: dict[tuple[str, str], float]
    per_column_coherence: dict[str, float]
    univariate: float
    bivariate: float | None
    coherence: float | None
    overall: float
    univariate_max: float
    bivariate_max: float | None
    coherence_max: float | None
    overall_max: float
    per_column_univariate_max: dict[str, float] = field(default_factory=dict)
    per_pair_bivariate_max: dict[tuple[str, str], float] = field(default_factory=dict)
    per_column_coherence_max: dict[str, float] = field(default_factory=dict)
    # chart inputs: column -> (trn, syn) vectors, pair -> (trn, syn) tables
    univariate_freqs: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    bivariate_tables: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    coherence_tables: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def tvd(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance: half the entrywise L1 distance."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise AccuracyError(f"shape mismatch {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def univariate_accuracy(f_trn: np.ndarray, f_syn: np.ndarray) -> float:
    if np.ndim(f_trn) != 1 or np.ndim(f_syn) != 1:
        raise AccuracyError("univariate accuracy expects 1-d frequency vectors")
    return _clamp(1.0 - tvd(f_trn, f_syn))


def bivariate_accuracy(c_trn: np.ndarray, c_syn: np.ndarray) -> float:
    return _clamp(1.0 - tvd(c_trn, c_syn))


def expected_max_accuracy(f_trn: np.ndarray, n_trn: int, n_syn: int) -> float:
    """Expected ``1 - TVD`` between two independent samples of the training distribution.

    Each cell difference p_hat - q_hat is treated as normal with variance
    p(1-p)(1/n_trn + 1/n_syn), whose mean absolute value is sigma*sqrt(2/pi).
    Works for vectors and (flattened) contingency tables alike.
    """
    if n_trn < 1 or n_syn < 1:
        raise AccuracyError("sample sizes must be >= 1")
    p = np.ravel(np.asarray(f_trn, dtype=float))
    var = p * (1.0 - p) * (1.0 / n_trn + 1.0 / n_syn)
    mad = np.sqrt(2.0 * np.clip(var, 0.0, None) / math.pi)
    return _clamp(1.0 - 0.5 * mad.sum())


def overall_accuracy(univariate: float, bivariate: float | None, coherence: float | None, sequential: bool) -> float:
    parts = [univariate, bivariate] + ([coherence] if sequential else [])
    if any(p is None for p in parts):
        raise AccuracyError("missing accuracy component")
    return float(sum(parts) / len(parts))


# -- coherence ---------------------------------------------------------------


def _subject_token(subject) -> str:
    if isinstance(subject, float) and subject.is_integer():
        subject = int(subject)
    return repr(subject)


def pair_start(seed: int, subject, n_events: int) -> int:
    """0-based start index of the successive pair drawn for one subject.

    Keyed by (seed, subject id) only, so the draw does not depend on where
    the subject sits in the file.
    """
    if n_events < 2:
        raise AccuracyError("need at least two events")
    digest = hashlib.blake2b(_subject_token(subject).encode(), digest_size=8).digest()
    rng = np.random.default_rng([seed & 0xFFFFFFFF, int.from_bytes(digest, "little")])
    return int(rng.integers(0, n_events - 1))


def coherence_pairs(dataset: Dataset, seed: int) -> Dataset:
    """Wide table with one row per subject holding two successive events.

    Each target column ``m`` yields ``m`` (first event) and ``m'`` (next event).
    Subjects with fewer than two events are dropped.
    """
    if dataset.sequence_key is None:
        raise AccuracyError("coherence needs a sequence key")
    key = dataset[dataset.sequence_key]
    firsts, seconds = [], []
    for rows in dataset.subjects():
        if len(rows) < 2:
            continue
        t = pair_start(seed, key.raw(rows[0]), len(rows))
        firsts.append(rows[t])
        seconds.append(rows[t + 1])
    if not firsts:
        raise AccuracyError(f"{dataset.name}: no subject with two or more events")
    a, b = np.array(firsts), np.array(seconds)
    cols = [key.take(a)]
    for name in dataset.target_columns:
        c = dataset[name]
        cols.append(c.take(a))
        cols.append(Column(name + PRIME, c.kind, c.values[b]))
    return Dataset(
        name=dataset.name,
        columns=tuple(cols),
        sequence_key=None,
        key_columns=frozenset({dataset.sequence_key}),
    )


def coherence_accuracy(
    wide_trn: Dataset, wide_syn: Dataset, specs: dict[str, BinningSpec]
) -> tuple[dict[str, float], dict[str, float], dict[str, tuple[np.ndarray, np.ndarray]]]:
    """Per-column (m, m') accuracies, their ``_max`` references, and the tables."""
    scores, maxes, tables = {}, {}, {}
    for name in wide_trn.value_columns:
        if name.endswith(PRIME):
            continue
        spec = specs[name]
        ct = contingency_table(
            apply_binning(wide_trn[name].values, spec), apply_binning(wide_trn[name + PRIME].values, spec), spec, spec
        )
        cs = contingency_table(
            apply_binning(wide_syn[name].values, spec), apply_binning(wide_syn[name + PRIME].values, spec), spec, spec
        )
        scores[name] = bivariate_accuracy(ct, cs)
        maxes[name] = expected_max_accuracy(ct, wide_trn.n_rows, wide_syn.n_rows)
        tables[name] = (ct, cs)
    return scores, maxes, tables


# -- orchestration -----------------------------------------------------------


def fit_specs(trn: Dataset, columns: list[str] | None = None, k: int = 10) -> dict[str, BinningSpec]:
    columns = trn.value_columns if columns is None else columns
    return {name: fit_binning(trn[name], k) for name in columns}


def bivariate_pairs(target: list[str], context: list[str]) -> list[tuple[str, str]]:
    """Unordered target pairs in column order, then every context x target pair."""
    pairs = list(itertools.combinations(target, 2))
    pairs += [(c, t) for c in context for t in target]
    return pairs


def _mean(xs) -> float | None:
    xs = list(xs)
    return float(np.mean(xs)) if xs else None


def compute_accuracy(
    trn: Dataset,
    syn: Dataset,
    specs: dict[str, BinningSpec] | None = None,
    sequential: bool | None = None,
    context_columns: list[str] | None = None,
    seed: int = 42,
    workers: int = 1,
) -> AccuracyResult:
    """Score ``syn`` against ``trn`` on all univariate, bivariate and coherence distributions."""
    if specs is None:
        specs = fit_specs(trn)
    if sequential is None:
        sequential = trn.is_sequential
    if context_columns is None:
        context_columns = [c for c in trn.value_columns if c in trn.context_columns]
    columns = [c for c in trn.value_columns if c in specs]
    target = [c for c in columns if c not in context_columns]
    context = [c for c in columns if c in context_columns]
    warnings: list[str] = []

    def bins(ds: Dataset) -> dict[str, np.ndarray]:
        return {c: apply_binning(ds[c].values, specs[c]) for c in columns}

    bt, bs = bins(trn), bins(syn)

    def uni(col):
        ft = frequency_vector(bt[col], specs[col])
        n_t = int((bt[col] >= 0).sum())
        try:
            fs = frequency_vector(bs[col], specs[col])
        except BinningError:
            return col, 0.0, expected_max_accuracy(ft, n_t, max(syn.n_rows, 1)), (ft, np.zeros_like(ft)), True
        n_s = int((bs[col] >= 0).sum())
        return col, univariate_accuracy(ft, fs), expected_max_accuracy(ft, n_t, n_s), (ft, fs), False

    def biv(pair):
        m, n = pair
        ct = contingency_table(bt[m], bt[n], specs[m], specs[n])
        n_t = int(((bt[m] >= 0) & (bt[n] >= 0)).sum())
        n_s = int(((bs[m] >= 0) & (bs[n] >= 0)).sum())
        if n_s == 0:
            return pair, 0.0, expected_max_accuracy(ct, n_t, max(syn.n_rows, 1)), (ct, np.zeros_like(ct)), True
        cs = contingency_table(bs[m], bs[n], specs[m], specs[n])
        return pair, bivariate_accuracy(ct, cs), expected_max_accuracy(ct, n_t, n_s), (ct, cs), False

    pairs = bivariate_pairs(target, context)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        uni_out = list(pool.map(uni, columns))
        biv_out = list(pool.map(biv, pairs))

    res_uni = {c: s for c, s, _, _, _ in uni_out}
    res_uni_max = {c: m for c, _, m, _, _ in uni_out}
    freqs = {c: f for c, _, _, f, _ in uni_out}
    warnings += [f"syn.{c}: no values within training categories; univariate accuracy 0" for c, *_, bad in uni_out if bad]
    res_biv = {p: s for p, s, _, _, _ in biv_out}
    res_biv_max = {p: m for p, _, m, _, _ in biv_out}
    tables = {p: t for p, _, _, t, _ in biv_out}
    warnings += [f"syn.{p}: no usable rows; bivariate accuracy 0" for p, *_, bad in biv_out if bad]

    coh, coh_max, coh_tables = {}, {}, {}
    if sequential:
        try:
            wide_t = coherence_pairs(trn, seed)
            wide_s = coherence_pairs(syn, seed)
        except AccuracyError as exc:
            warnings.append(f"coherence skipped: {exc}")
            sequential = False
        else:
            coh_specs = {c: specs[c] for c in target}
            wide_t = _restrict(wide_t, target)
            wide_s = _restrict(wide_s, target)
            coh, coh_max, coh_tables = coherence_accuracy(wide_t, wide_s, coh_specs)

    univariate = _mean(res_uni.values())
    if univariate is None:
        raise AccuracyError("no columns to score")
    bivariate = _mean(res_biv.values())
    univariate_max = _mean(res_uni_max.values())
    bivariate_max = _mean(res_biv_max.values())
    if bivariate is None:
        # single-column data has no pairs; the overall score falls back to the univariate part
        warnings.append("fewer than two columns; bivariate accuracy undefined")
    coherence = _mean(coh.values()) if sequential else None
    coherence_max = _mean(coh_max.values()) if sequential else None
    parts = [univariate] + ([bivariate] if bivariate is not None else []) + ([coherence] if sequential else [])
    parts_max = [univariate_max] + ([bivariate_max] if bivariate is not None else []) + (
        [coherence_max] if sequential else []
    )
    return AccuracyResult(
        per_column_univariate=res_uni,
        per_pair_bivariate=res_biv,
        per_column_coherence=coh,
        univariate=univariate,
        bivariate=bivariate,
        coherence=coherence,
        overall=float(sum(parts) / len(parts)),
        univariate_max=univariate_max,
        bivariate_max=bivariate_max,
        coherence_max=coherence_max,
        overall_max=float(sum(parts_max) / len(parts_max)),
        per_column_univariate_max=res_uni_max,
        per_pair_bivariate_max=res_biv_max,
        per_column_coherence_max=coh_max,
        univariate_freqs=freqs,
        bivariate_tables=tables,
        coherence_tables=coh_tables,
        warnings=warnings,
    )


def _restrict(wide: Dataset, target: list[str]) -> Dataset:
    keep = set(target) | {t + PRIME for t in target} | set(wide.key_columns)
    cols = tuple(c for c in wide.columns if c.name in keep)
    if not cols:
        raise DataError("no coherence columns")
    return Dataset(wide.name, cols, key_columns=wide.key_columns)
