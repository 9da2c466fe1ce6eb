"""Record serialization and text embeddings.

Each record (a flat row, or a whole subject for sequential data) is turned
into a ``;``-joined string and embedded into a 384-dimensional unit-norm
space. The default encoder hashes character trigrams into signed buckets;
an external process can be plugged in instead through a line protocol.
"""

from __future__ import annotations

import hashlib
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datamodel import ColumnType, Dataset, format_datetime_ms

DIM = 384
SEPARATOR = ";"
DEFAULT_TRUNCATION = 2048
_BOS, _EOS = "\x02", "\x03"


class EncoderError(RuntimeError):
    pass


@dataclass(frozen=True)
class EncoderSpec:
    kind: str = "hashing"  # "hashing" | "external"
    command: str | None = None

    def __post_init__(self):
        if self.kind not in ("hashing", "external"):
            raise EncoderError(f"unknown encoder kind {self.kind!r}")
        if self.kind == "external" and not self.command:
            raise EncoderError("external encoder needs a command")

    @classmethod
    def parse(cls, text: str) -> "EncoderSpec":
        """``hashing`` or ``external:CMD``."""
        if text == "hashing":
            return cls()
        if text.startswith("external:"):
            return cls("external", text[len("external:"):])
        raise EncoderError(f"encoder must be 'hashing' or 'external:CMD', got {text!r}")

    def __str__(self) -> str:
        return "hashing" if self.kind == "hashing" else f"external:{self.command}"


@dataclass
class EmbeddingMatrix:
    data: np.ndarray
    provenance: str
    flagged_rows: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != DIM:
            raise EncoderError(f"embeddings must be n x {DIM}, got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise EncoderError("non-finite embedding entries")

    @property
    def rows(self) -> int:
        return self.data.shape[0]


def format_value(value, kind: ColumnType) -> str:
    if value is None:
        return ""
    if kind is ColumnType.NUMERIC:
        v = float(value)
        if v.is_integer() and abs(v) < 1e16:
            return str(int(v))
        return repr(v)  # shortest round-trip form
    if kind is ColumnType.DATETIME:
        return format_datetime_ms(value)
    return str(value).replace("\n", " ").replace("\r", " ")


def serialize_record(
    rows: Sequence[Sequence[str]] | Sequence[str], truncation_limit: int = DEFAULT_TRUNCATION
) -> str:
    """Join already-formatted values with ``;``.

    ``rows`` is either one row of values or a list of per-step rows; steps are
    concatenated in order. The result is cut at ``truncation_limit`` characters.
    """
    if rows and not isinstance(rows[0], str):
        text = SEPARATOR.join(SEPARATOR.join(step) for step in rows)
    else:
        text = SEPARATOR.join(rows)
    return text[:truncation_limit]


def serialize_dataset(ds: Dataset, truncation_limit: int = DEFAULT_TRUNCATION) -> list[str]:
    """One string per sample: per row for flat data, per subject for sequential data.

    Key columns are left out. Context values (identical across a subject's
    rows) lead the string once, followed by the target values of each step.
    """
    target = [ds[c] for c in ds.target_columns]
    context = [ds[c] for c in ds.value_columns if c in ds.context_columns]
    fmt_t = [[format_value(c.raw(i), c.kind) for c in target] for i in range(ds.n_rows)]
    if not ds.is_sequential:
        return [
            serialize_record([format_value(c.raw(i), c.kind) for c in context] + fmt_t[i], truncation_limit)
            for i in range(ds.n_rows)
        ]
    out = []
    for rows in ds.subjects():
        steps = [fmt_t[i] for i in rows]
        if context:
            steps = [[format_value(c.raw(rows[0]), c.kind) for c in context]] + steps
        out.append(serialize_record(steps, truncation_limit))
    return out


def _trigrams(text: str) -> list[str]:
    padded = _BOS + text + _EOS if text else ""
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


class HashingEncoder:
    """Signed feature hashing of character trigrams into ``dim`` buckets."""

    def __init__(self, dim: int = DIM):
        self.dim = dim
        self._cache: dict[str, tuple[int, float]] = {}

    def _slot(self, gram: str) -> tuple[int, float]:
        hit = self._cache.get(gram)
        if hit is None:
            h = int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "little")
            hit = (h % self.dim, 1.0 if (h >> 63) & 1 else -1.0)
            self._cache[gram] = hit
        return hit

    def encode(self, strings: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(strings), self.dim))
        for r, s in enumerate(strings):
            row = out[r]
            for g in _trigrams(s):
                j, sign = self._slot(g)
                row[j] += sign
        return out


def _external_encode(command: str, strings: Sequence[str]) -> np.ndarray:
    payload = "".join(s.replace("\n", " ") + "\n" for s in strings)
    try:
        proc = subprocess.run(
            shlex.split(command), input=payload, capture_output=True, text=True, encoding="utf-8", check=False
        )
    except OSError as exc:
        raise EncoderError(f"external encoder failed to start: {exc}") from exc
    if proc.returncode != 0:
        raise EncoderError(f"external encoder exited with {proc.returncode}: {proc.stderr.strip()[:500]}")
    lines = proc.stdout.splitlines()
    if len(lines) != len(strings):
        raise EncoderError(f"external encoder returned {len(lines)} lines for {len(strings)} records")
    out = np.empty((len(strings), DIM))
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) != DIM:
            raise EncoderError(f"external encoder line {i + 1}: expected {DIM} values, got {len(parts)}")
        try:
            out[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise EncoderError(f"external encoder line {i + 1}: {exc}") from exc
    return out


def embed(strings: Sequence[str], spec: EncoderSpec = EncoderSpec(), provenance: str = "trn") -> EmbeddingMatrix:
    """Embed strings as unit-norm rows; zero vectors become basis vector 0 and are flagged."""
    if len(strings) == 0:
        raise EncoderError("nothing to embed")
    if spec.kind == "hashing":
        raw = HashingEncoder().encode(strings)
    else:
        raw = _external_encode(spec.command, strings)
    if not np.isfinite(raw).all():
        raise EncoderError("encoder produced non-finite values")
    norms = np.linalg.norm(raw, axis=1)
    zero = norms == 0
    raw[zero] = 0.0
    raw[zero, 0] = 1.0
    norms[zero] = 1.0
    return EmbeddingMatrix(raw / norms[:, None], provenance, flagged_rows=np.flatnonzero(zero).tolist())
