"""Context-window construction over annotated utterance records.

Windows mirror the core toolkit's context settings: "none" is the span's
utterance alone, "one" adds the immediate neighbours, "full" everything from
the dialogue start through the span's utterance. Each utterance contributes
its speaker token plus its text, joined with single spaces, e.g.

    <s1> well, I think <s2> uh-huh

The returned span offsets index into that window string.
"""

from __future__ import annotations

from .formats import SpanRec, UttRec

CONTEXT_SETTINGS = ("none", "one", "full")


def build_window(
    utterances: list[UttRec], span_holder: UttRec, span: SpanRec, context: str
) -> tuple[str, int, int]:
    """Window text plus the span's character range within it."""
    if context not in CONTEXT_SETTINGS:
        raise ValueError(f"unknown context setting {context!r}")
    idx = next(
        i for i, u in enumerate(utterances) if u.turn_index == span_holder.turn_index
    )
    if context == "none":
        window = utterances[idx:idx + 1]
    elif context == "one":
        window = utterances[max(0, idx - 1):idx + 2]
    else:
        window = utterances[:idx + 1]

    parts: list[str] = []
    cursor = 0
    span_base = None
    for u in window:
        parts.append(f"<{u.speaker}>")
        cursor += len(parts[-1]) + 1  # speaker token and the space after it
        if u.turn_index == span_holder.turn_index:
            span_base = cursor
        parts.append(u.text)
        cursor += len(u.text) + 1  # text and the joining space
    text = " ".join(parts)
    assert span_base is not None
    return text, span_base + span.start, span_base + span.end
