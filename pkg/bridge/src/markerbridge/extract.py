"""Span embedding extraction: annotated corpus in, interchange file out.

For every marker span, the requested context window is tokenized, the covered
subword positions are located by character offsets, and the final hidden
layer's rows at those positions become the span's Q x K matrix. Alignment is
audited per span: the window text between the first covered token's start and
the last covered token's end must reproduce the span surface exactly,
otherwise TokenAlignmentError names the span. Identical inputs produce
identical output bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .backend import Backend, TokenAlignmentError
from .formats import EmbeddingWriter, group_by_dialogue, read_annotated
from .windows import CONTEXT_SETTINGS, build_window


@dataclass(frozen=True)
class BridgeJob:
    model: str = "tiny"
    checkpoint: str | None = None
    context: str = "one"
    annotated: str | None = None
    output: str | None = None
    device: str | None = None

    def __post_init__(self):
        if self.context not in CONTEXT_SETTINGS:
            raise ValueError(f"context must be one of {CONTEXT_SETTINGS}")


def covered_token_range(
    offsets: list[tuple[int, int]], span_lo: int, span_hi: int
) -> tuple[int, int]:
    """Subword index range [lo, hi) of tokens overlapping the span characters."""
    hit = [
        i for i, (s, e) in enumerate(offsets)
        if s < span_hi and e > span_lo and e > s
    ]
    if not hit:
        raise TokenAlignmentError(f"no tokens cover span at chars {span_lo}..{span_hi}")
    return hit[0], hit[-1] + 1


def audit_alignment(window: str, offsets, lo: int, hi: int, surface: str) -> None:
    start = offsets[lo][0]
    end = offsets[hi - 1][1]
    covered = window[start:end]
    if covered != surface:
        raise TokenAlignmentError(
            f"span surface {surface!r} not recoverable from subwords (got {covered!r})"
        )


def extract_span_embeddings(job: BridgeJob) -> Path:
    if not job.annotated or not job.output:
        raise ValueError("job needs annotated and output paths")
    backend = Backend.load(job.model, job.checkpoint, job.device)
    _, records = read_annotated(job.annotated)
    dialogues = group_by_dialogue(records)
    out_path = Path(job.output)
    n_spans = 0
    with EmbeddingWriter(out_path, backend.hidden_size, job.model, backend.fine_tuned) as writer:
        for dialogue_id, utterances in dialogues.items():
            for utt in utterances:
                for span in utt.spans:
                    window, lo_char, hi_char = build_window(
                        utterances, utt, span, job.context
                    )
                    ids, offsets = backend.encode_with_offsets(window)
                    ids, offsets = backend.truncate_left(ids, offsets)
                    lo, hi = covered_token_range(offsets, lo_char, hi_char)
                    audit_alignment(window, offsets, lo, hi, span.variant)
                    states = backend.last_hidden_states(ids)
                    writer.write(
                        span.canonical, dialogue_id, utt.turn_index,
                        job.context, states[lo:hi],
                    )
                    n_spans += 1
    if n_spans == 0:
        raise ValueError(f"annotated corpus {job.annotated} contains no marker spans")
    return out_path
