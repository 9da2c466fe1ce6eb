"""Command-line entry point: ``synqa --syn-tgt syn.csv --trn-tgt trn.csv [--hol-tgt hol.csv] --out DIR``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .accuracy import AccuracyError
from .binning import BinningError
from .datamodel import DataError, load_dataset, load_schema_hints
from .distances import DistanceError
from .embedding import DEFAULT_TRUNCATION, EncoderError, EncoderSpec
from .evaluate import default_workers, report
from .report import MetricsDocument, ReportError
from .similarity import SimilarityError

log = logging.getLogger("synqa")

ERRORS = {
    DataError: "datamodel",
    BinningError: "binning",
    AccuracyError: "accuracy",
    EncoderError: "embedding",
    SimilarityError: "similarity",
    DistanceError: "distances",
    ReportError: "report",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    syn_tgt: Path
    trn_tgt: Path
    output_dir: Path
    hol_tgt: Path | None = None
    syn_ctx: Path | None = None
    trn_ctx: Path | None = None
    hol_ctx: Path | None = None
    ctx_primary_key: str | None = None
    tgt_context_key: str | None = None
    sequence_key: str | None = None
    seed: int = 42
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    folds: int = 5
    truncation_limit: int = DEFAULT_TRUNCATION
    workers: int = field(default_factory=default_workers)
    schema: Path | None = None

    def validate(self) -> None:
        ctx = {"syn": self.syn_ctx, "trn": self.trn_ctx}
        if self.hol_tgt is not None:
            ctx["hol"] = self.hol_ctx
        given = [k for k, v in ctx.items() if v is not None]
        if given and len(given) != len(ctx):
            raise ConfigError(f"context files must be given for all of {sorted(ctx)} or none (got {given})")
        if self.hol_ctx is not None and self.hol_tgt is None:
            raise ConfigError("--hol-ctx given without --hol-tgt")
        has_keys = bool(self.ctx_primary_key) and bool(self.tgt_context_key)
        if given and not has_keys:
            raise ConfigError("context files require --ctx-primary-key and --tgt-context-key")
        if not given and (self.ctx_primary_key or self.tgt_context_key):
            raise ConfigError("--ctx-primary-key/--tgt-context-key given without context files")
        if self.folds < 2:
            raise ConfigError("--folds must be >= 2")
        if self.truncation_limit < 1:
            raise ConfigError("--truncation must be >= 1")
        if self.workers < 1:
            raise ConfigError("--workers must be >= 1")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synqa", description="Evaluate synthetic tabular data against training/holdout data.")
    p.add_argument("--syn-tgt", type=Path, required=True, help="synthetic target CSV")
    p.add_argument("--trn-tgt", type=Path, required=True, help="training target CSV")
    p.add_argument("--hol-tgt", type=Path, help="holdout target CSV")
    p.add_argument("--syn-ctx", type=Path, help="synthetic context CSV")
    p.add_argument("--trn-ctx", type=Path, help="training context CSV")
    p.add_argument("--hol-ctx", type=Path, help="holdout context CSV")
    p.add_argument("--ctx-primary-key", help="primary key column of the context tables")
    p.add_argument("--tgt-context-key", help="foreign key column of the target tables")
    p.add_argument("--sequence-key", help="subject id column; enables sequential mode")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--encoder", default="hashing", help="'hashing' (default) or 'external:CMD'")
    p.add_argument("--out", type=Path, required=True, dest="output_dir", help="output directory")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--truncation", type=int, default=DEFAULT_TRUNCATION, dest="truncation_limit")
    p.add_argument("--workers", type=int, default=None, help="worker pool size (default: logical CPUs)")
    p.add_argument("--schema", type=Path, help="column type hints file (column=type per line)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kwargs = {k: v for k, v in vars(ns).items() if k not in ("verbose", "encoder", "workers")}
    cfg = RunConfig(encoder=EncoderSpec.parse(ns.encoder), **kwargs)
    if ns.workers is not None:
        cfg.workers = ns.workers
    return cfg


def _summary(doc: MetricsDocument) -> str:
    d = doc.to_dict()
    lines = [f"{'metric':<40}{'value':>10}"]
    for section in ("accuracy", "similarity", "distances"):
        for k, v in d[section].items():
            lines.append(f"{section + '.' + k:<40}{'null' if v is None else f'{v:.4f}':>10}")
    return "\n".join(lines)


def run(cfg: RunConfig) -> MetricsDocument:
    cfg.validate()
    hints = load_schema_hints(cfg.schema) if cfg.schema else None
    trn = load_dataset(cfg.trn_tgt, hints, name="trn")
    # later files are typed like training so inference cannot drift between roles
    tgt_hints = {c.name: c.kind for c in trn.columns}
    syn = load_dataset(cfg.syn_tgt, _shared(cfg.syn_tgt, tgt_hints), name="syn")
    hol = load_dataset(cfg.hol_tgt, _shared(cfg.hol_tgt, tgt_hints), name="hol") if cfg.hol_tgt else None
    ctx = {}
    if cfg.trn_ctx:
        trn_ctx = load_dataset(cfg.trn_ctx, hints, name="trn_ctx")
        ctx_hints = {c.name: c.kind for c in trn_ctx.columns}
        ctx = {
            "trn_ctx_data": trn_ctx,
            "syn_ctx_data": load_dataset(cfg.syn_ctx, _shared(cfg.syn_ctx, ctx_hints), name="syn_ctx"),
            "hol_ctx_data": load_dataset(cfg.hol_ctx, _shared(cfg.hol_ctx, ctx_hints), name="hol_ctx") if cfg.hol_ctx else None,
        }
    bundle = report(
        syn_tgt_data=syn,
        trn_tgt_data=trn,
        hol_tgt_data=hol,
        ctx_primary_key=cfg.ctx_primary_key,
        tgt_context_key=cfg.tgt_context_key,
        sequence_key=cfg.sequence_key,
        seed=cfg.seed,
        encoder=cfg.encoder,
        folds=cfg.folds,
        truncation=cfg.truncation_limit,
        workers=cfg.workers,
        output_dir=cfg.output_dir,
        **ctx,
    )
    return bundle.metrics


def _shared(path: Path, hints: dict) -> dict:
    """Categorical/text hints from training for the columns this file has.

    Numeric and datetime columns are inferred freely and cast during
    alignment, where unparseable cells become missing with a warning.
    """
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), [])
    except (OSError, UnicodeDecodeError):
        return {}  # load_dataset reports the failure
    return {k: v for k, v in hints.items() if k in header and not v.is_numeric_like}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        doc = run(cfg)
    except ConfigError as exc:
        print(f"synqa: config error: {exc}", file=sys.stderr)
        return 2
    except tuple(ERRORS) as exc:
        module = next(m for t, m in ERRORS.items() if isinstance(exc, t))
        print(f"synqa: {module} error: {exc}", file=sys.stderr)
        return 1
    print(_summary(doc))
    for w in doc.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0
