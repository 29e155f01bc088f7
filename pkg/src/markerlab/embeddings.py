"""Span embedding ingestion, pooling, standardization, and PCA reduction.

Interchange format (UTF-8, line-delimited JSON): the first line is a header

    {"k": 768, "model": "some-id", "fine_tuned": false}

and every following line one record

    {"canonical": "uh", "dialogue_id": "d1", "turn_index": 3,
     "context": "one", "matrix": [[...K floats...], ...Q rows...]}

Files store 32-bit floats; all computation happens in float64. Matrices are
pooled to one K-vector per record at read time (uniform mean over the Q rows,
with an optional explicit-weights hook). Analysis operations are
deterministic functions of the input bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .datasetgen import ContextSetting
from .errors import DimensionMismatch, MalformedRecord, TooFewRecords


@dataclass(frozen=True)
class SpanEmbeddingRecord:
    canonical: str
    dialogue_id: str
    turn_index: int
    context: ContextSetting
    matrix: np.ndarray  # Q x K, float64

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise MalformedRecord("matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(m)):
            raise MalformedRecord("matrix entries must be finite")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class SpanKey:
    canonical: str
    dialogue_id: str
    turn_index: int
    context: ContextSetting


@dataclass(frozen=True)
class Provenance:
    model: str | None = None
    fine_tuned: bool | None = None
    context: ContextSetting | None = None


class EmbeddingSet:
    """Pooled span vectors plus their identities and provenance."""

    def __init__(self, keys: Sequence[SpanKey], vectors: np.ndarray, provenance: Provenance):
        vectors = np.asarray(vectors, dtype=np.float64)
        if len(keys) != vectors.shape[0]:
            raise DimensionMismatch("one key per vector required")
        self.keys = tuple(keys)
        self.vectors = vectors
        self.provenance = provenance

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1]) if self.vectors.ndim == 2 else 0

    def __len__(self) -> int:
        return len(self.keys)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmbeddingSet)
            and self.keys == other.keys
            and self.provenance == other.provenance
            and self.vectors.shape == other.vectors.shape
            and bool(np.array_equal(self.vectors, other.vectors))
        )

    def subset(self, canonical: str) -> "EmbeddingSet":
        idx = [i for i, k in enumerate(self.keys) if k.canonical == canonical]
        return EmbeddingSet(
            [self.keys[i] for i in idx],
            self.vectors[idx] if idx else np.zeros((0, self.dimension)),
            self.provenance,
        )

    @classmethod
    def from_records(
        cls,
        records: Iterable[SpanEmbeddingRecord],
        provenance: Provenance = Provenance(),
        weights: Sequence[Sequence[float]] | None = None,
    ) -> "EmbeddingSet":
        records = list(records)
        if records:
            k = records[0].matrix.shape[1]
            for r in records:
                if r.matrix.shape[1] != k:
                    raise DimensionMismatch(
                        f"record has K={r.matrix.shape[1]}, set has K={k}"
                    )
            if weights is None:
                vectors = np.stack([pool_span(r.matrix) for r in records])
            else:
                vectors = np.stack(
                    [pool_span(r.matrix, w) for r, w in zip(records, weights)]
                )
        else:
            vectors = np.zeros((0, 0))
        keys = [
            SpanKey(r.canonical, r.dialogue_id, r.turn_index, r.context) for r in records
        ]
        return cls(keys, vectors, provenance)


def pool_span(matrix: np.ndarray, weights: Sequence[float] | None = None) -> np.ndarray:
    """Collapse a Q x K span matrix to one K-vector.

    The default is a uniform mean over the Q rows; callers with genuine
    per-token weights can pass them explicitly and get a normalized weighted
    average instead. Permutation of rows cannot change the result.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    if weights is None:
        return m.mean(axis=0)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (m.shape[0],):
        raise DimensionMismatch("need one weight per row")
    total = w.sum()
    if total == 0:
        raise ValueError("weights sum to zero")
    return (w[:, None] * m).sum(axis=0) / total


def standardize(es: EmbeddingSet) -> EmbeddingSet:
    """Center each dimension and scale it to unit spread.

    Uses the population denominator n, so the operation is idempotent.
    Zero-variance dimensions map to all zeros rather than dividing by zero.
    """
    if len(es) < 2:
        raise TooFewRecords(f"standardize needs >= 2 records, got {len(es)}")
    x = es.vectors
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # ddof=0: population denominator
    centered = x - mean
    out = np.divide(centered, std, out=np.zeros_like(centered), where=std > 0)
    return EmbeddingSet(es.keys, out, es.provenance)


def pca_fit(x: np.ndarray, target_dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Principal axes of x via eigendecomposition of its covariance.

    Returns (mean, components, eigenvalues) with components as a K x d matrix
    of unit columns sorted by decreasing variance, d = min(target_dim, K, n-1).
    Each component's sign is fixed so its largest-magnitude coordinate is
    positive, making the decomposition fully deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    n, k = x.shape
    d = min(target_dim, k, n - 1)
    if d < 1:
        raise TooFewRecords("PCA needs >= 2 records and target_dim >= 1")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:d]
    components = eigvecs[:, order]
    eigvals = np.maximum(eigvals[order], 0.0)
    for j in range(components.shape[1]):
        col = components[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            components[:, j] = -col
    return mean, components, eigvals


def pca_reduce(es: EmbeddingSet, target_dim: int = 100) -> EmbeddingSet:
    """Project onto the top principal components of the centered data.

    At full rank this is a rigid rotation: pairwise distances and total
    variance are preserved exactly (up to float error).
    """
    if len(es) < 2:
        raise TooFewRecords(f"pca_reduce needs >= 2 records, got {len(es)}")
    mean, components, _ = pca_fit(es.vectors, target_dim)
    return EmbeddingSet(es.keys, (es.vectors - mean) @ components, es.provenance)


_CONTEXT_BY_VALUE = {c.value: c for c in ContextSetting}


def read_embeddings(stream: IO[bytes] | IO[str] | Iterable[str]) -> EmbeddingSet:
    """Parse the interchange format; an empty stream yields an empty set."""
    header: dict | None = None
    keys: list[SpanKey] = []
    rows: list[np.ndarray] = []
    k = None
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc.msg}", line_no) from exc
        if header is None:
            if not isinstance(obj, dict) or "k" not in obj:
                raise MalformedRecord("first line must be a header with 'k'", line_no)
            header = obj
            k = int(obj["k"])
            if k < 1:
                raise MalformedRecord("header k must be >= 1", line_no)
            continue
        try:
            context = _CONTEXT_BY_VALUE[obj["context"]]
            record = SpanEmbeddingRecord(
                obj["canonical"], obj["dialogue_id"], int(obj["turn_index"]),
                context, np.asarray(obj["matrix"], dtype=np.float64),
            )
        except MalformedRecord as exc:
            raise MalformedRecord(str(exc), line_no) from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad embedding record: {exc}", line_no) from exc
        if record.matrix.shape[1] != k:
            raise DimensionMismatch(
                f"line {line_no}: record K={record.matrix.shape[1]} != header K={k}"
            )
        keys.append(SpanKey(record.canonical, record.dialogue_id, record.turn_index, context))
        rows.append(pool_span(record.matrix))
    if header is None:
        return EmbeddingSet([], np.zeros((0, 0)), Provenance())
    contexts = {key.context for key in keys}
    provenance = Provenance(
        model=header.get("model"),
        fine_tuned=header.get("fine_tuned"),
        context=contexts.pop() if len(contexts) == 1 else None,
    )
    vectors = np.stack(rows) if rows else np.zeros((0, k))
    return EmbeddingSet(keys, vectors, provenance)


def _f32(v: float) -> float:
    return float(np.float32(v))


def write_embeddings(es: EmbeddingSet, stream: IO[str]) -> None:
    """Write a set in the interchange format (pooled vectors as 1 x K matrices).

    Values are quantized to 32-bit floats, so write -> read round-trips
    exactly at that precision. An empty set writes an empty stream.
    """
    if len(es) == 0 and es.dimension == 0:
        return
    header = {
        "k": es.dimension,
        "model": es.provenance.model,
        "fine_tuned": es.provenance.fine_tuned,
    }
    stream.write(json.dumps(header, ensure_ascii=False, separators=(",", ":")) + "\n")
    for key, vec in zip(es.keys, es.vectors):
        obj = {
            "canonical": key.canonical,
            "dialogue_id": key.dialogue_id,
            "turn_index": key.turn_index,
            "context": key.context.value,
            "matrix": [[_f32(v) for v in vec]],
        }
        stream.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")
