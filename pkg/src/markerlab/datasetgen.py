"""Fine-tuning dataset construction: span masking, next-token sequences,
turn-shift labels, and context windows for embedding extraction.

All corruption randomness flows through the SplitMix64 generator in
markerlab.rng, with one substream per dialogue derived from
(seed, dialogue_id). Results are therefore reproducible bit for bit and
independent of the order dialogues are processed in, which makes per-dialogue
parallelism safe.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .corpus import Dialogue, Language, MergedSequence, merge_dialogue
from .errors import EmptyRandomPool, SpanNotFound
from .lexicon import AnnotatedCorpus, MarkerSpan
from .rng import SplitMix64, derive_seed

LABEL_SENTINEL = ""  # label slot for positions outside every marker span

_NONSPACE = re.compile(r"\S+")


class ContextSetting(enum.Enum):
    NO_CONTEXT = "none"
    ONE_CONTEXT = "one"
    FULL_CONTEXT = "full"


@dataclass(frozen=True)
class MaskingPolicy:
    """Per-span corruption probabilities; defaults follow the usual 80/10/10."""
    p_mask: float = 0.8
    p_random: float = 0.1
    p_keep: float = 0.1
    mask_token: str = "[MASK]"
    random_pool: tuple[str, ...] = ()

    def __post_init__(self):
        for name, p in (("p_mask", self.p_mask), ("p_random", self.p_random), ("p_keep", self.p_keep)):
            if p < 0:
                raise ValueError(f"{name} must be non-negative")
        if abs(self.p_mask + self.p_random + self.p_keep - 1.0) > 1e-12:
            raise ValueError("corruption probabilities must sum to 1")


@dataclass(frozen=True)
class MaskedExample:
    """One merged dialogue with its marker spans corrupted.

    input_tokens and label_tokens have equal length. Labels carry the original
    token at every marker-span position (whatever corruption was drawn, the
    span stays a prediction target) and LABEL_SENTINEL elsewhere.
    """
    dialogue_id: str
    input_tokens: tuple[str, ...]
    label_tokens: tuple[str, ...]
    span_positions: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class TurnLabeledSequence:
    """Merged dialogue tokens plus the indices after which the turn changes.

    Every index in shift_after is the final content token of some utterance;
    the dialogue's last token always counts as a shift.
    """
    dialogue_id: str
    tokens: tuple[str, ...]
    shift_after: frozenset[int]


def token_char_offsets(text: str, language: Language) -> list[tuple[int, int]]:
    """Character range of each surface token, aligned with corpus.tokenize."""
    if language is Language.EN:
        return [m.span() for m in _NONSPACE.finditer(text)]
    return [(i, i + 1) for i in range(len(text))]


def _span_token_range(
    span: MarkerSpan, offsets: list[tuple[int, int]]
) -> tuple[int, int]:
    """Token range covering every token that overlaps the span's characters."""
    hit = [
        i for i, (ts, te) in enumerate(offsets)
        if ts < span.char_end and te > span.char_start
    ]
    return hit[0], hit[-1] + 1


def merged_span_ranges(annotated: AnnotatedCorpus, d: Dialogue, merged: MergedSequence) -> list[tuple[int, int]]:
    """Marker spans of one dialogue mapped to token ranges in its merged sequence.

    In the rare case two character spans land on one surface token (markers
    fused by punctuation), the later range is trimmed to unclaimed tokens and
    dropped when nothing remains.
    """
    ranges: list[tuple[int, int]] = []
    claimed_until = -1
    for u, src in zip(d.utterances, merged.source_spans):
        spans = sorted(annotated.spans_for(d.id, u.turn_index), key=lambda s: s.char_start)
        if not spans:
            continue
        offsets = token_char_offsets(u.text, d.language)
        for span in spans:
            lo, hi = _span_token_range(span, offsets)
            lo, hi = src.start + lo, src.start + hi
            lo = max(lo, claimed_until)
            if lo >= hi:
                continue
            ranges.append((lo, hi))
            claimed_until = hi
    return ranges


def build_masking_dataset(
    annotated: AnnotatedCorpus, policy: MaskingPolicy, seed: int
) -> list[MaskedExample]:
    """One corrupted example per dialogue.

    Per marker span, a single uniform draw picks mask / random / keep with the
    policy's probabilities; mask and random replace all L tokens of the span,
    so sequence length never changes. Tokens outside spans are never touched.
    """
    if policy.p_random > 0 and not policy.random_pool:
        raise EmptyRandomPool("p_random > 0 but the random pool is empty")
    examples = []
    for d in annotated.dialogues:
        merged = merge_dialogue(d)
        ranges = merged_span_ranges(annotated, d, merged)
        rng = SplitMix64(derive_seed(seed, d.id))
        tokens = list(merged.tokens)
        labels = [LABEL_SENTINEL] * len(tokens)
        for lo, hi in ranges:
            for i in range(lo, hi):
                labels[i] = merged.tokens[i]
            u = rng.next_float()
            if u < policy.p_mask:
                tokens[lo:hi] = [policy.mask_token] * (hi - lo)
            elif u < policy.p_mask + policy.p_random:
                tokens[lo:hi] = [
                    policy.random_pool[rng.next_below(len(policy.random_pool))]
                    for _ in range(hi - lo)
                ]
        examples.append(MaskedExample(d.id, tuple(tokens), tuple(labels), tuple(ranges)))
    return examples


def default_random_pool(annotated: AnnotatedCorpus, size: int = 1000) -> tuple[str, ...]:
    """The corpus's most frequent non-marker content tokens.

    Speaker tokens and tokens inside marker spans are excluded; ties break
    lexicographically so the pool is stable across runs.
    """
    counts: dict[str, int] = {}
    for d in annotated.dialogues:
        merged = merge_dialogue(d)
        in_span = set()
        for lo, hi in merged_span_ranges(annotated, d, merged):
            in_span.update(range(lo, hi))
        for src in merged.source_spans:
            for i in range(src.start, src.end):
                if i not in in_span:
                    tok = merged.tokens[i]
                    counts[tok] = counts.get(tok, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(tok for tok, _ in ordered[:size])


def build_ntp_dataset(annotated: AnnotatedCorpus) -> list[MergedSequence]:
    """Merged sequences with markers left intact, one per dialogue."""
    return [merge_dialogue(d) for d in annotated.dialogues]


def build_ttp_dataset(annotated: AnnotatedCorpus) -> list[TurnLabeledSequence]:
    """Turn-shift labels over merged sequences.

    An index lands in shift_after when it is the last content token of an
    utterance whose successor has a different speaker; the end of the dialogue
    always counts as a shift.
    """
    out = []
    for d in annotated.dialogues:
        merged = merge_dialogue(d)
        shifts = set()
        for i, src in enumerate(merged.source_spans):
            is_last = i == len(merged.source_spans) - 1
            if is_last or merged.source_spans[i + 1].speaker is not src.speaker:
                shifts.add(src.end - 1)
        out.append(TurnLabeledSequence(d.id, merged.tokens, frozenset(shifts)))
    return out


def extract_context(
    annotated: AnnotatedCorpus, span: MarkerSpan, setting: ContextSetting
) -> MergedSequence:
    """Context window around one marker span, as a merged token sequence.

    NO_CONTEXT yields the span's utterance alone, ONE_CONTEXT adds the
    immediate neighbours where they exist, FULL_CONTEXT yields everything from
    the dialogue start through the span's utterance (a prefix of the full
    merged sequence).
    """
    if span not in annotated.spans:
        raise SpanNotFound(
            f"span {span.canonical!r} at {span.dialogue_id}:{span.turn_index} not in corpus"
        )
    dialogue = next(d for d in annotated.dialogues if d.id == span.dialogue_id)
    idx = next(
        i for i, u in enumerate(dialogue.utterances) if u.turn_index == span.turn_index
    )
    if setting is ContextSetting.NO_CONTEXT:
        window = dialogue.utterances[idx:idx + 1]
    elif setting is ContextSetting.ONE_CONTEXT:
        window = dialogue.utterances[max(0, idx - 1):idx + 2]
    else:
        window = dialogue.utterances[:idx + 1]
    return merge_dialogue(Dialogue(dialogue.id, dialogue.language, tuple(window)))
