"""Generation-quality metrics over dialogue continuations.

Five metrics: marker frequency, marker diversity, frequency-weighted
perplexity over generated marker tokens, BLEU against the reference
continuation, and an embedding-based greedy-matching F1. Nothing here is
stochastic; per-record work is independent and aggregation uses fixed-order
summation.

Generation record wire format (line-delimited JSON): context, generated,
reference, language, plus optional marker_logprobs
([{surface, canonical, logprob}]) and optional cand_vecs / ref_vecs
(arrays of number arrays, one vector per token).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .corpus import Language
from .errors import (
    EmptyGenerationSet,
    EmptyPair,
    MalformedRecord,
    MissingVectors,
    NoMarkerTokens,
)
from .lexicon import MarkerLexicon, find_spans_text

BLEU_MAX_ORDER = 4
BLEU_EPSILON = 1e-9


@dataclass(frozen=True)
class MarkerLogProb:
    surface: str
    canonical: str
    logprob: float

    def __post_init__(self):
        if not math.isfinite(self.logprob) or self.logprob > 0:
            raise ValueError(f"logprob must be finite and <= 0, got {self.logprob}")


@dataclass(frozen=True)
class GenerationRecord:
    context: str
    generated: str
    reference: str
    language: Language
    marker_logprobs: tuple[MarkerLogProb, ...] | None = None
    cand_vecs: np.ndarray | None = None  # (n_tokens, dim)
    ref_vecs: np.ndarray | None = None

    def __post_init__(self):
        for name in ("cand_vecs", "ref_vecs"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=np.float64)
            if v.ndim != 2 or v.shape[0] == 0:
                raise ValueError(f"{name} must be a non-empty 2-D array")
            object.__setattr__(self, name, v)
        if (
            self.cand_vecs is not None
            and self.ref_vecs is not None
            and self.cand_vecs.shape[1] != self.ref_vecs.shape[1]
        ):
            raise ValueError("cand_vecs and ref_vecs dimensions differ")


@dataclass(frozen=True)
class MetricReport:
    diversity: int
    frequency: float
    weighted_perplexity: float | None
    bertscore_f1: float | None
    bleu: float


def _eval_tokens(text: str, language: Language) -> list[str]:
    """Metric tokenization: whitespace words for EN, non-space characters for JA."""
    if language is Language.EN:
        return text.split()
    return [ch for ch in text if not ch.isspace()]


def marker_frequency(records: Sequence[GenerationRecord], lexicon: MarkerLexicon) -> float:
    """Share of generated text occupied by markers.

    English counts marker word-tokens over all word-tokens; Japanese counts
    characters inside marker spans over all non-whitespace characters
    (punctuation included in the denominator).
    """
    if not records:
        raise EmptyGenerationSet("no generation records")
    marker_units = 0
    total_units = 0
    for r in records:
        spans = find_spans_text(r.generated, lexicon)
        if r.language is Language.EN:
            marker_units += sum(len(surface.split()) for _, _, _, surface in spans)
        else:
            marker_units += sum(e - s for s, e, _, _ in spans)
        total_units += len(_eval_tokens(r.generated, r.language))
    return marker_units / total_units if total_units else 0.0


def marker_diversity(records: Sequence[GenerationRecord], lexicon: MarkerLexicon) -> int:
    """Number of distinct marker types generated; variants collapse to canonical."""
    seen = set()
    for r in records:
        for _, _, canonical, _ in find_spans_text(r.generated, lexicon):
            seen.add(canonical)
    return len(seen)


def weighted_perplexity(records: Sequence[GenerationRecord]) -> float:
    """exp of the mean negative log-probability over generated marker occurrences.

    Weighting each occurrence equally reproduces the frequency-weighted
    per-type form whenever the per-type log-probability is the mean over that
    type's occurrences. Always >= 1 and strictly decreasing when any
    occurrence's log-probability increases.
    """
    logprobs = [
        lp.logprob for r in records for lp in (r.marker_logprobs or ())
    ]
    if not logprobs:
        raise NoMarkerTokens("no marker log-probabilities present")
    return math.exp(-sum(logprobs) / len(logprobs))


def _ngram_counts(tokens: list[str], order: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - order + 1):
        gram = tuple(tokens[i:i + order])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu(records: Sequence[GenerationRecord]) -> float:
    """Corpus-level BLEU, orders 1..4 with uniform weights.

    Modified n-gram precision is clipped by reference counts; orders with no
    candidate n-grams anywhere are skipped (so identical corpora score exactly
    1 even for short texts) and orders with zero matches fall back to a 1e-9
    floor. Brevity penalty is exp(1 - r/c) when the candidate side is shorter.
    """
    if not records:
        raise EmptyPair("no generation records")
    matches = [0] * (BLEU_MAX_ORDER + 1)
    totals = [0] * (BLEU_MAX_ORDER + 1)
    cand_len = 0
    ref_len = 0
    for r in records:
        cand = _eval_tokens(r.generated, r.language)
        ref = _eval_tokens(r.reference, r.language)
        if not cand or not ref:
            raise EmptyPair("candidate and reference must both be non-empty")
        cand_len += len(cand)
        ref_len += len(ref)
        for order in range(1, BLEU_MAX_ORDER + 1):
            cand_counts = _ngram_counts(cand, order)
            if not cand_counts:
                continue
            ref_counts = _ngram_counts(ref, order)
            totals[order] += sum(cand_counts.values())
            matches[order] += sum(
                min(c, ref_counts.get(g, 0)) for g, c in cand_counts.items()
            )
    log_sum = 0.0
    used = [order for order in range(1, BLEU_MAX_ORDER + 1) if totals[order] > 0]
    for order in used:
        precision = matches[order] / totals[order] if matches[order] > 0 else BLEU_EPSILON
        log_sum += math.log(precision) / len(used)
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_sum)


def _unit_rows(vecs: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return np.divide(vecs, norms, out=np.zeros_like(vecs), where=norms > 0)


def bertscore_f1(records: Sequence[GenerationRecord]) -> float:
    """Mean greedy-matching F1 over cosine similarities of token vectors.

    Precision takes each candidate token's best reference match, recall each
    reference token's best candidate match; similarities are clipped to
    [-1, 1] so identical sides score exactly 1. F1 is the harmonic combination
    2PR/(P+R), which is only meaningful when P and R share a sign; mixed signs
    (and the 0/0 case) score 0, keeping the result inside [-1, 1]. No idf
    weighting, no baseline rescaling.
    """
    if not records:
        raise MissingVectors("no generation records")
    f1s = []
    for r in records:
        if r.cand_vecs is None or r.ref_vecs is None:
            raise MissingVectors("record lacks cand_vecs or ref_vecs")
        sim = np.clip(_unit_rows(r.cand_vecs) @ _unit_rows(r.ref_vecs).T, -1.0, 1.0)
        precision = float(sim.max(axis=1).mean())
        recall = float(sim.max(axis=0).mean())
        if precision * recall < 0 or precision + recall == 0:
            f1s.append(0.0)
        else:
            f1s.append(2.0 * precision * recall / (precision + recall))
    return float(np.mean(f1s))


def evaluate(records: Sequence[GenerationRecord], lexicon: MarkerLexicon) -> MetricReport:
    """All five metrics; perplexity and F1 are None when their inputs are absent."""
    if not records:
        raise EmptyGenerationSet("no generation records")
    try:
        ppl = weighted_perplexity(records)
    except NoMarkerTokens:
        ppl = None
    if all(r.cand_vecs is not None and r.ref_vecs is not None for r in records):
        f1 = bertscore_f1(records)
    else:
        f1 = None
    return MetricReport(
        diversity=marker_diversity(records, lexicon),
        frequency=marker_frequency(records, lexicon),
        weighted_perplexity=ppl,
        bertscore_f1=f1,
        bleu=bleu(records),
    )


def read_generations(stream: IO[bytes] | IO[str] | Iterable[str]) -> list[GenerationRecord]:
    """Parse generation records from line-delimited JSON."""
    records = []
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
        try:
            lps = obj.get("marker_logprobs")
            records.append(GenerationRecord(
                context=obj["context"],
                generated=obj["generated"],
                reference=obj["reference"],
                language=Language(obj["language"]),
                marker_logprobs=None if lps is None else tuple(
                    MarkerLogProb(d["surface"], d["canonical"], float(d["logprob"]))
                    for d in lps
                ),
                cand_vecs=None if obj.get("cand_vecs") is None else np.asarray(obj["cand_vecs"], dtype=np.float64),
                ref_vecs=None if obj.get("ref_vecs") is None else np.asarray(obj["ref_vecs"], dtype=np.float64),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad generation record: {exc}", line_no) from exc
    return records
