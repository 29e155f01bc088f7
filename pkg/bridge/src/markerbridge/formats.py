"""File-format I/O for the interchange with the core toolkit.

The bridge talks to markerlab exclusively through its documented file formats
(annotated corpus, embedding interchange, generation records) and its CLI;
nothing in this package imports markerlab. Formats are re-stated here from
the interface contract:

- annotated corpus: header line {"language": ...}, then one utterance per
  line with dialogue_id, turn_index, speaker, text, tagged, spans.
- embedding interchange: header {"k", "model", "fine_tuned"}, then one record
  per line with canonical, dialogue_id, turn_index, context, matrix (Q x K,
  32-bit floats in the file).
- generation records: context, generated, reference, language, optional
  marker_logprobs / cand_vecs / ref_vecs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SpanRec:
    start: int
    end: int
    canonical: str
    variant: str


@dataclass(frozen=True)
class UttRec:
    dialogue_id: str
    turn_index: int
    speaker: str
    text: str
    spans: tuple[SpanRec, ...]


def read_annotated(path: str | Path) -> tuple[str, list[UttRec]]:
    """Parse an annotate output file into (language, utterance records)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"annotated corpus {path} is empty")
    header = json.loads(lines[0])
    language = header["language"]
    records = []
    for line in lines[1:]:
        if not line.strip():
            continue
        obj = json.loads(line)
        spans = tuple(
            SpanRec(s["start"], s["end"], s["canonical"], s["variant"])
            for s in obj.get("spans", [])
        )
        records.append(UttRec(
            obj["dialogue_id"], int(obj["turn_index"]), obj["speaker"],
            obj["text"], spans,
        ))
    return language, records


def group_by_dialogue(records: list[UttRec]) -> dict[str, list[UttRec]]:
    grouped: dict[str, list[UttRec]] = {}
    for rec in records:
        grouped.setdefault(rec.dialogue_id, []).append(rec)
    for utts in grouped.values():
        utts.sort(key=lambda u: u.turn_index)
    return grouped


def _jdump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _f32(value: float) -> float:
    return float(np.float32(value))


class EmbeddingWriter:
    """Streams the embedding interchange format with 32-bit float values."""

    def __init__(self, path: str | Path, k: int, model: str, fine_tuned: bool):
        self._fh = open(path, "w", encoding="utf-8")
        self._fh.write(_jdump({"k": k, "model": model, "fine_tuned": fine_tuned}) + "\n")

    def write(self, canonical: str, dialogue_id: str, turn_index: int,
              context: str, matrix: np.ndarray) -> None:
        rows = [[_f32(v) for v in row] for row in np.asarray(matrix, dtype=np.float64)]
        self._fh.write(_jdump({
            "canonical": canonical, "dialogue_id": dialogue_id,
            "turn_index": turn_index, "context": context, "matrix": rows,
        }) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_generations_raw(path: str | Path) -> list[dict]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def write_generations_raw(records: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(_jdump(rec) + "\n")
