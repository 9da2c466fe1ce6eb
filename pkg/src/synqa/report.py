"""Metrics document and the self-contained HTML report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from html import escape
from pathlib import Path

import numpy as np

from . import svg
from .accuracy import AccuracyResult
from .binning import BinningSpec
from .distances import DistancesResult
from .similarity import SimilarityResult

SCHEMA_VERSION = "1.0"
DECIMALS = 4

ACCURACY_KEYS = (
    "overall",
    "univariate",
    "bivariate",
    "coherence",
    "overall_max",
    "univariate_max",
    "bivariate_max",
    "coherence_max",
)
SIMILARITY_KEYS = (
    "cosine_similarity_training_synthetic",
    "cosine_similarity_training_holdout",
    "discriminator_auc_training_synthetic",
    "discriminator_auc_training_holdout",
)
DISTANCES_KEYS = ("ims_training", "ims_holdout", "dcr_training", "dcr_holdout", "dcr_share")
HOLDOUT_KEYS = (
    ("similarity", "cosine_similarity_training_holdout"),
    ("similarity", "discriminator_auc_training_holdout"),
    ("distances", "ims_holdout"),
    ("distances", "dcr_holdout"),
    ("distances", "dcr_share"),
)


class ReportError(RuntimeError):
    pass


@dataclass
class MetricsDocument:
    accuracy: dict[str, float | None]
    similarity: dict[str, float | None]
    distances: dict[str, float | None]
    warnings: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self, decimals: int | None = DECIMALS) -> dict:
        r = (lambda v: _round(v, decimals)) if decimals is not None else (lambda v: v)
        return {
            "schema_version": self.schema_version,
            "accuracy": {k: r(self.accuracy.get(k)) for k in ACCURACY_KEYS},
            "similarity": {k: r(self.similarity.get(k)) for k in SIMILARITY_KEYS},
            "distances": {k: r(self.distances.get(k)) for k in DISTANCES_KEYS},
            "warnings": list(self.warnings),
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricsDocument":
        d = json.loads(text)
        return cls(
            accuracy=dict(d["accuracy"]),
            similarity=dict(d["similarity"]),
            distances=dict(d["distances"]),
            warnings=list(d.get("warnings", [])),
            config=d.get("config", {}),
            schema_version=d.get("schema_version", SCHEMA_VERSION),
        )


def _round(v, decimals: int):
    if v is None:
        return None
    v = float(v)
    if not math.isfinite(v):
        return None
    return round(v, decimals)


def assemble_metrics(
    acc: AccuracyResult,
    sim: SimilarityResult,
    dist: DistancesResult,
    warnings: list[str] | None = None,
    config: dict | None = None,
) -> MetricsDocument:
    return MetricsDocument(
        accuracy={k: getattr(acc, k) for k in ACCURACY_KEYS},
        similarity={k: getattr(sim, k) for k in SIMILARITY_KEYS},
        distances={k: getattr(dist, k) for k in DISTANCES_KEYS},
        warnings=list(warnings or []),
        config=dict(config or {}),
    )


@dataclass
class ReportBundle:
    metrics: MetricsDocument
    html_path: Path | None
    chart_data: dict
    metrics_path: Path | None = None
    specs: dict[str, BinningSpec] = field(default_factory=dict)


# -- HTML --------------------------------------------------------------------

_CSS = """
body{font-family:sans-serif;margin:24px;color:#222;max-width:1200px}
h1{font-size:22px}h2{font-size:17px;border-bottom:1px solid #ccc;padding-bottom:3px;margin-top:28px}
table.metrics{border-collapse:collapse}table.metrics td,table.metrics th{border:1px solid #ccc;padding:3px 10px;text-align:right}
table.metrics td:first-child{text-align:left}
.grid{display:flex;flex-wrap:wrap;gap:10px}
section.chart{border:1px solid #eee;padding:4px}
.pair{display:flex;gap:4px}
pre{background:#f7f7f7;padding:8px;overflow:auto;font-size:11px}
.warn{color:#a04000}
"""

_SUMMARY_ROWS = [
    ("Accuracy", "overall", "overall_max"),
    ("Univariate", "univariate", "univariate_max"),
    ("Bivariate", "bivariate", "bivariate_max"),
    ("Coherence", "coherence", "coherence_max"),
]


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def _summary_table(doc: dict) -> str:
    acc, sim, dist = doc["accuracy"], doc["similarity"], doc["distances"]
    rows = ["<tr><th>metric</th><th>synthetic</th><th>reference</th></tr>"]
    for label, k, ref in _SUMMARY_ROWS:
        if k == "coherence" and acc[k] is None:
            continue
        rows.append(f"<tr><td>{label}</td><td>{_fmt(acc[k])}</td><td>{_fmt(acc[ref])} (max)</td></tr>")
    rows.append(
        f"<tr><td>Cosine similarity (centroids)</td><td>{_fmt(sim['cosine_similarity_training_synthetic'])}</td>"
        f"<td>{_fmt(sim['cosine_similarity_training_holdout'])} (holdout)</td></tr>"
    )
    rows.append(
        f"<tr><td>Discriminator AUC</td><td>{_fmt(sim['discriminator_auc_training_synthetic'])}</td>"
        f"<td>{_fmt(sim['discriminator_auc_training_holdout'])} (holdout)</td></tr>"
    )
    rows.append(
        f"<tr><td>Identical match share</td><td>{_fmt(dist['ims_training'])}</td><td>{_fmt(dist['ims_holdout'])} (holdout)</td></tr>"
    )
    rows.append(
        f"<tr><td>DCR (mean)</td><td>{_fmt(dist['dcr_training'])}</td><td>{_fmt(dist['dcr_holdout'])} (holdout)</td></tr>"
    )
    rows.append(f"<tr><td>DCR share</td><td>{_fmt(dist['dcr_share'])}</td><td>0.5000 (target)</td></tr>")
    return '<table class="metrics">' + "".join(rows) + "</table>"


def _section(kind: str, inner: str) -> str:
    return f'<section class="chart" data-kind="{kind}">{inner}</section>'


def build_chart_data(
    acc: AccuracyResult, sim: SimilarityResult, dist: DistancesResult, specs: dict[str, BinningSpec]
) -> dict:
    """Plain series behind every chart, keyed by chart family."""
    pca = sim.pca_projection
    return {
        "univariate": {
            c: {"labels": specs[c].bin_labels(), "trn": f[0], "syn": f[1], "accuracy": acc.per_column_univariate[c]}
            for c, f in acc.univariate_freqs.items()
        },
        "bivariate": {
            p: {"rows": specs[p[0]].bin_labels(), "cols": specs[p[1]].bin_labels(), "trn": t[0], "syn": t[1],
                "accuracy": acc.per_pair_bivariate[p]}
            for p, t in acc.bivariate_tables.items()
        },
        "coherence": {
            c: {"labels": specs[c].bin_labels(), "trn": t[0], "syn": t[1], "accuracy": acc.per_column_coherence[c]}
            for c, t in acc.coherence_tables.items()
        },
        "pca": None if pca is None else {"points": pca.points, "centroids": pca.centroids},
        "dcr": {"trn": dist.dcr_cdf_training} | ({"hol": dist.dcr_cdf_holdout} if dist.dcr_cdf_holdout is not None else {}),
    }


def _trim_missing(labels: list[str], *vecs: np.ndarray):
    # hide an all-zero trailing missing bin
    if labels and labels[-1] == "(missing)" and all(float(np.asarray(v)[..., -1].sum()) == 0 for v in vecs):
        return labels[:-1], [np.asarray(v)[..., :-1] for v in vecs]
    return labels, list(vecs)


def _trim_table(rows, cols, t, s):
    if rows and rows[-1] == "(missing)" and t[-1].sum() == 0 and s[-1].sum() == 0:
        rows, t, s = rows[:-1], t[:-1], s[:-1]
    if cols and cols[-1] == "(missing)" and t[:, -1].sum() == 0 and s[:, -1].sum() == 0:
        cols, t, s = cols[:-1], t[:, :-1], s[:, :-1]
    return rows, cols, t, s


def render_html(
    metrics: MetricsDocument,
    chart_data: dict,
    specs: dict[str, BinningSpec] | None = None,
    title: str = "Synthetic data quality report",
) -> str:
    """Render the report as one HTML string; output depends only on the inputs."""
    doc = metrics.to_dict()
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>{escape(title)}</title><style>{_CSS}</style></head><body>",
        f"<h1>{escape(title)}</h1>",
        "<h2>Summary</h2>",
        _summary_table(doc),
    ]
    if metrics.warnings:
        parts.append("<h2>Warnings</h2><ul>" + "".join(f'<li class="warn">{escape(w)}</li>' for w in metrics.warnings) + "</ul>")

    parts.append('<h2>Univariate distributions</h2><div class="grid">')
    for col, d in chart_data["univariate"].items():
        labels, (t, s) = _trim_missing(d["labels"], d["trn"], d["syn"])
        parts.append(_section("univariate", svg.bar_chart(labels, {"trn": t, "syn": s}, f"{col}  {d['accuracy']:.1%}")))
    parts.append("</div>")

    parts.append('<h2>Bivariate distributions</h2><div class="grid">')
    for (m, n), d in chart_data["bivariate"].items():
        rows, cols, t, s = _trim_table(d["rows"], d["cols"], np.asarray(d["trn"]), np.asarray(d["syn"]))
        syn_title = f"syn  {d['accuracy']:.1%}"
        inner = (
            f'<div class="pair">{svg.heatmap(t, rows, cols, f"trn: {m} × {n}")}'
            f"{svg.heatmap(s, rows, cols, syn_title)}</div>"
        )
        parts.append(_section("bivariate", inner))
    parts.append("</div>")

    if chart_data["coherence"]:
        parts.append('<h2>Coherence (successive events)</h2><div class="grid">')
        for col, d in chart_data["coherence"].items():
            rows, cols, t, s = _trim_table(d["labels"], d["labels"], np.asarray(d["trn"]), np.asarray(d["syn"]))
            syn_title = f"syn  {d['accuracy']:.1%}"
            inner = (
                f'<div class="pair">{svg.heatmap(t, rows, cols, f"trn: {col} → {col}′")}'
                f"{svg.heatmap(s, rows, cols, syn_title)}</div>"
            )
            parts.append(_section("coherence", inner))
        parts.append("</div>")

    parts.append("<h2>Similarity (PCA of embeddings)</h2>")
    pca = chart_data.get("pca")
    if pca is not None:
        parts.append(_section("pca", svg.scatter(pca["points"], pca["centroids"], "PCA projection with centroids")))
    else:
        parts.append(_section("pca", "<p>too few samples for a projection</p>"))

    parts.append("<h2>Distances to closest records</h2>")
    parts.append(_section("dcr", svg.cdf_chart(chart_data["dcr"], "Cumulative DCR of synthetic samples")))

    parts.append("<h2>Configuration</h2>")
    parts.append(f"<pre>{escape(json.dumps(metrics.config, indent=2, ensure_ascii=False))}</pre>")
    if specs:
        parts.append("<h2>Binning</h2>")
        spec_json = json.dumps([s.to_dict() for s in specs.values()], indent=1, ensure_ascii=False)
        parts.append(f'<pre id="binning-specs">{escape(spec_json)}</pre>')
    parts.append("</body></html>\n")
    return "\n".join(parts)


def write_atomic(path: Path, text: str) -> None:
    """Write via a sibling temp file and rename, so no partial file is left behind."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise ReportError(f"cannot write {path}: {exc}") from exc
