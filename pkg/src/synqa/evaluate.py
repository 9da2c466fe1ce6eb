"""End-to-end evaluation: datasets in, metrics document and HTML report out."""

from __future__ import annotations

import math
import os
from dataclasses import replace
from pathlib import Path

from .accuracy import compute_accuracy, fit_specs
from .datamodel import ContextJoin, DataError, Dataset, align_columns, conform, join_context
from .distances import dcr_metrics, equalize, sample_keys
from .embedding import DEFAULT_TRUNCATION, EncoderSpec, embed, serialize_dataset
from .report import ReportBundle, ReportError, assemble_metrics, build_chart_data, render_html, write_atomic
from .similarity import compute_similarity


def _prepare(
    tgt: Dataset | None,
    ctx: Dataset | None,
    join: ContextJoin | None,
    sequence_key: str | None,
    role: str,
) -> Dataset | None:
    if tgt is None:
        return None
    if ctx is not None:
        tgt = join_context(tgt, ctx, join)
    return replace(tgt, name=role, sequence_key=sequence_key)


def _ims(syn_keys: list, ref_keys: list) -> float:
    ref = set(ref_keys)
    return sum(k in ref for k in syn_keys) / len(syn_keys)


def report(
    syn_tgt_data: Dataset,
    trn_tgt_data: Dataset,
    hol_tgt_data: Dataset | None = None,
    syn_ctx_data: Dataset | None = None,
    trn_ctx_data: Dataset | None = None,
    hol_ctx_data: Dataset | None = None,
    ctx_primary_key: str | None = None,
    tgt_context_key: str | None = None,
    sequence_key: str | None = None,
    seed: int = 42,
    encoder: EncoderSpec = EncoderSpec(),
    folds: int = 5,
    truncation: int = DEFAULT_TRUNCATION,
    workers: int = 1,
    output_dir: str | Path | None = None,
) -> ReportBundle:
    """Evaluate synthetic data against training (and optionally holdout) data.

    Providing context tables requires both keys; the target's context key then
    also serves as sequence key unless one is given explicitly. If
    ``output_dir`` is set, ``metrics.json`` and ``report.html`` are written
    there.
    """
    ctxs = {"syn": syn_ctx_data, "trn": trn_ctx_data, "hol": hol_ctx_data}
    if (syn_ctx_data is None) != (trn_ctx_data is None):
        raise DataError("context data must be given for both syn and trn, or for neither")
    if hol_tgt_data is not None and (hol_ctx_data is None) != (trn_ctx_data is None):
        raise DataError("holdout context must be given iff training context is given")
    join = None
    if trn_ctx_data is not None:
        if not (ctx_primary_key and tgt_context_key):
            raise DataError("context data requires ctx_primary_key and tgt_context_key")
        join = ContextJoin(ctx_primary_key, tgt_context_key)
        sequence_key = sequence_key or tgt_context_key

    trn = _prepare(trn_tgt_data, ctxs["trn"], join, sequence_key, "trn")
    syn = _prepare(syn_tgt_data, ctxs["syn"], join, sequence_key, "syn")
    hol = _prepare(hol_tgt_data, ctxs["hol"], join, sequence_key, "hol")
    for ds in (trn, syn, hol):
        if ds is not None and ds.n_rows == 0:
            raise DataError(f"{ds.name}: no rows")

    alignment = align_columns(trn, syn, hol)
    warnings = list(alignment.warnings)
    if sequence_key and sequence_key not in alignment.names:
        raise DataError(f"sequence key {sequence_key!r} not shared by all datasets")
    trn, _ = conform(trn, alignment)
    syn, w = conform(syn, alignment)
    warnings += w
    if hol is not None:
        hol, w = conform(hol, alignment)
        warnings += w

    specs = fit_specs(trn)
    sequential = trn.is_sequential
    acc = compute_accuracy(trn, syn, specs, sequential=sequential, seed=seed, workers=workers)
    warnings += acc.warnings

    emb = {
        name: embed(serialize_dataset(ds, truncation), encoder, provenance=name)
        for name, ds in (("trn", trn), ("syn", syn), ("hol", hol))
        if ds is not None
    }
    for name, m in emb.items():
        if m.flagged_rows:
            warnings.append(f"{name}: {len(m.flagged_rows)} empty record string(s) embedded as a fixed vector")
    sim = compute_similarity(emb["trn"], emb["syn"], emb.get("hol"), folds=folds, seed=seed)
    warnings += sim.warnings

    dist = dcr_metrics(emb["syn"], emb["trn"], emb.get("hol"), seed=seed, workers=workers)
    syn_keys, trn_keys = sample_keys(syn), sample_keys(trn)
    if hol is not None:
        hol_keys = sample_keys(hol)
        it, ih = equalize(len(trn_keys), len(hol_keys), seed)
        dist.ims_training = _ims(syn_keys, [trn_keys[i] for i in it])
        dist.ims_holdout = _ims(syn_keys, [hol_keys[i] for i in ih])
        bound = 0.5 + 2.0 * math.sqrt(0.25 / len(syn_keys))
        if dist.dcr_share > bound:
            warnings.append(
                f"dcr_share {dist.dcr_share:.4f} exceeds {bound:.4f}: synthetic samples sit closer to training than to holdout"
            )
    else:
        dist.ims_training = _ims(syn_keys, trn_keys)

    config = {
        "seed": seed,
        "encoder": str(encoder),
        "folds": folds,
        "truncation": truncation,
        "sequential": sequential,
        "sequence_key": sequence_key,
        "ctx_primary_key": ctx_primary_key,
        "tgt_context_key": tgt_context_key,
        "columns": [[n, k.value] for n, k in alignment.columns],
        "rows": {ds.name: ds.n_rows for ds in (trn, syn, hol) if ds is not None},
        "samples": {name: m.rows for name, m in emb.items()},
    }
    metrics = assemble_metrics(acc, sim, dist, warnings, config)
    chart_data = build_chart_data(acc, sim, dist, specs)
    bundle = ReportBundle(metrics=metrics, html_path=None, chart_data=chart_data, specs=specs)
    if output_dir is not None:
        out = Path(output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ReportError(f"cannot create output directory {out}: {exc}") from exc
        html = render_html(metrics, chart_data, specs)
        write_atomic(out / "report.html", html)
        write_atomic(out / "metrics.json", metrics.to_json())
        bundle.html_path = out / "report.html"
        bundle.metrics_path = out / "metrics.json"
    return bundle


def default_workers() -> int:
    return os.cpu_count() or 1
