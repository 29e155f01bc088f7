"""Marker log-probability scoring for generation records.

Marker occurrences are located by the core toolkit itself: generated texts
are wrapped into a temporary corpus file and the `markerlab annotate` CLI is
invoked on it, so the bridge never reimplements the matching rules. Each
occurrence's log-probability is the sum of the model's log-probabilities of
its subword tokens, conditioned on the record's context plus the generated
prefix. The augmented file keeps every original field and is readable by the
core toolkit's generation-record reader.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from .backend import Backend
from .extract import BridgeJob, covered_token_range
from .formats import read_annotated, read_generations_raw, write_generations_raw


def _annotate_texts(texts: list[str], language: str) -> list[list[dict]]:
    """Span lists for each text, via the core toolkit's annotate command."""
    with tempfile.TemporaryDirectory(prefix="bridge-annotate-") as tmp:
        tmp_path = Path(tmp)
        corpus = tmp_path / "corpus.jsonl"
        with corpus.open("w", encoding="utf-8") as fh:
            for i, text in enumerate(texts):
                fh.write(json.dumps({
                    "dialogue_id": f"g{i}", "turn_index": 0,
                    "speaker": "s1", "text": text,
                }, ensure_ascii=False) + "\n")
        cmd = [
            sys.executable, "-m", "markerlab.cli", "annotate",
            "--corpus", str(corpus), "--lexicon", language,
            "--language", language, "--out-dir", str(tmp_path),
        ]
        result = subprocess.run(cmd, capture_output=True, text=True)
        if result.returncode != 0:
            raise RuntimeError(f"markerlab annotate failed: {result.stderr.strip()}")
        _, records = read_annotated(tmp_path / "annotated.jsonl")
    by_index: dict[int, tuple[str, list[dict]]] = {}
    for rec in records:
        idx = int(rec.dialogue_id[1:])
        by_index[idx] = (rec.text, [
            {"start": s.start, "end": s.end, "canonical": s.canonical, "variant": s.variant}
            for s in rec.spans
        ])
    return [by_index[i] for i in range(len(texts))]


def score_marker_logprobs(job: BridgeJob, generations: str | Path,
                          output: str | Path) -> Path:
    backend = Backend.load(job.model, job.checkpoint, job.device)
    records = read_generations_raw(generations)
    by_language: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        if rec.get("generated", "").strip():
            by_language.setdefault(rec["language"], []).append(i)

    spans_per_record: dict[int, tuple[str, list[dict]]] = {}
    for language, indices in by_language.items():
        annotated = _annotate_texts([records[i]["generated"] for i in indices], language)
        for i, entry in zip(indices, annotated):
            spans_per_record[i] = entry

    for i, rec in enumerate(records):
        if i not in spans_per_record:
            rec["marker_logprobs"] = []
            continue
        normalized, spans = spans_per_record[i]
        context = rec.get("context", "").strip()
        prefix = context + " " if context else ""
        text = prefix + normalized
        ids, offsets = backend.encode_with_offsets(text)
        ids, offsets = backend.truncate_left(ids, offsets)
        logprobs = backend.next_token_logprobs(ids)
        entries = []
        for span in spans:
            lo, hi = covered_token_range(
                offsets, len(prefix) + span["start"], len(prefix) + span["end"]
            )
            total = float(logprobs[lo:hi].sum())
            entries.append({
                "surface": span["variant"],
                "canonical": span["canonical"],
                "logprob": min(total, 0.0),
            })
        rec["marker_logprobs"] = entries
    write_generations_raw(records, output)
    return Path(output)
