"""Two-party dialogue corpus parsing, merging, and splitting.

The corpus wire format is UTF-8 line-delimited JSON, one utterance per line:

    {"dialogue_id": "d1", "turn_index": 0, "speaker": "s1", "text": "hi"}

Utterance text is canonicalized on parse: surrounding whitespace stripped and
internal whitespace runs collapsed to a single space. That normalization is
what makes merge/unmerge an exact round trip.

All functions here are pure and operate on immutable values, so concurrent
use needs no locking.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .errors import (
    InvalidFraction,
    MalformedRecord,
    MoreThanTwoSpeakers,
    NonMonotoneTurnIndex,
)
from .rng import SplitMix64


class Speaker(enum.Enum):
    S1 = "s1"
    S2 = "s2"

    @property
    def token(self) -> str:
        return f"<{self.value}>"


class Language(enum.Enum):
    EN = "en"
    JA = "ja"


SPEAKER_TOKENS = {s.token: s for s in Speaker}


def normalize_text(text: str) -> str:
    """Strip surrounding whitespace and collapse internal runs to one space.

    Uses str.split()'s whitespace definition, the same one tokenize() uses,
    so merge/unmerge round trips are exact.
    """
    return " ".join(text.split())


def tokenize(text: str, language: Language) -> list[str]:
    """Surface tokenization: whitespace words for EN, single characters for JA.

    Subword tokenization is deliberately out of scope; it belongs to whatever
    model consumes the datasets.
    """
    if language is Language.EN:
        return text.split()
    return list(text)


def detokenize(tokens: Sequence[str], language: Language) -> str:
    if language is Language.EN:
        return " ".join(tokens)
    return "".join(tokens)


@dataclass(frozen=True)
class Utterance:
    dialogue_id: str
    turn_index: int
    speaker: Speaker
    text: str

    def __post_init__(self):
        if self.turn_index < 0:
            raise ValueError("turn_index must be non-negative")
        if not self.text.strip():
            raise ValueError("utterance text is empty")


@dataclass(frozen=True)
class Dialogue:
    id: str
    language: Language
    utterances: tuple[Utterance, ...]

    def __post_init__(self):
        speakers = {u.speaker for u in self.utterances}
        if len(speakers) > 2:
            raise MoreThanTwoSpeakers(f"dialogue {self.id!r} has {len(speakers)} speakers")
        for u in self.utterances:
            if u.dialogue_id != self.id:
                raise ValueError(f"utterance dialogue_id {u.dialogue_id!r} != {self.id!r}")

    @property
    def is_monologue(self) -> bool:
        """True when only one speaker occurs; flagged, never rejected."""
        return len({u.speaker for u in self.utterances}) == 1


@dataclass(frozen=True)
class SourceSpan:
    """Half-open token range [start, end) holding one utterance's content tokens."""
    start: int
    end: int
    turn_index: int
    speaker: Speaker


@dataclass(frozen=True)
class MergedSequence:
    """One dialogue flattened to a token stream with interleaved speaker tokens."""
    dialogue_id: str
    language: Language
    tokens: tuple[str, ...]
    source_spans: tuple[SourceSpan, ...]


def parse_corpus(stream: IO[bytes] | IO[str] | Iterable[str], language: Language) -> list[Dialogue]:
    """Parse line-delimited utterance records into dialogues.

    Dialogues may interleave in the file; within one dialogue the turn_index
    values must be strictly increasing in file order. Raises MalformedRecord
    (with the offending line number), NonMonotoneTurnIndex, or
    MoreThanTwoSpeakers.
    """
    grouped: dict[str, list[Utterance]] = {}
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
        if not isinstance(obj, dict):
            raise MalformedRecord("record is not a JSON object", line_no)
        missing = {"dialogue_id", "turn_index", "speaker", "text"} - obj.keys()
        if missing:
            raise MalformedRecord(f"missing fields {sorted(missing)}", line_no)
        if not isinstance(obj["dialogue_id"], str):
            raise MalformedRecord("dialogue_id must be a string", line_no)
        if not isinstance(obj["turn_index"], int) or isinstance(obj["turn_index"], bool):
            raise MalformedRecord("turn_index must be an integer", line_no)
        if obj["turn_index"] < 0:
            raise MalformedRecord("turn_index must be non-negative", line_no)
        try:
            speaker = Speaker(obj["speaker"])
        except ValueError:
            raise MalformedRecord(f"speaker must be 's1' or 's2', got {obj['speaker']!r}", line_no)
        if not isinstance(obj["text"], str):
            raise MalformedRecord("text must be a string", line_no)
        text = normalize_text(obj["text"])
        if not text:
            raise MalformedRecord("text is empty after whitespace normalization", line_no)
        utt = Utterance(obj["dialogue_id"], obj["turn_index"], speaker, text)
        grouped.setdefault(utt.dialogue_id, []).append(utt)

    dialogues = []
    for did, utts in grouped.items():
        for prev, cur in zip(utts, utts[1:]):
            if cur.turn_index <= prev.turn_index:
                raise NonMonotoneTurnIndex(
                    f"dialogue {did!r}: turn_index {cur.turn_index} after {prev.turn_index}"
                )
        dialogues.append(Dialogue(did, language, tuple(utts)))
    return dialogues


def serialize_corpus(dialogues: Iterable[Dialogue]) -> str:
    """Canonical corpus serialization: fixed key order, compact separators.

    parse_corpus(serialize_corpus(ds)) round-trips byte-identically.
    """
    lines = []
    for d in dialogues:
        for u in d.utterances:
            lines.append(json.dumps(
                {
                    "dialogue_id": u.dialogue_id,
                    "turn_index": u.turn_index,
                    "speaker": u.speaker.value,
                    "text": u.text,
                },
                ensure_ascii=False,
                separators=(",", ":"),
            ))
    return "\n".join(lines) + ("\n" if lines else "")


def merge_dialogue(d: Dialogue) -> MergedSequence:
    """Flatten a dialogue into one token sequence with speaker tokens.

    Every utterance gets its own speaker token, including consecutive
    utterances by the same speaker, so utterance boundaries survive merging.
    """
    tokens: list[str] = []
    spans: list[SourceSpan] = []
    for u in d.utterances:
        tokens.append(u.speaker.token)
        start = len(tokens)
        tokens.extend(tokenize(u.text, d.language))
        spans.append(SourceSpan(start, len(tokens), u.turn_index, u.speaker))
    return MergedSequence(d.id, d.language, tuple(tokens), tuple(spans))


def unmerge_sequence(seq: MergedSequence) -> list[tuple[int, Speaker, str]]:
    """Invert merge_dialogue: (turn_index, speaker, text) per utterance."""
    return [
        (s.turn_index, s.speaker, detokenize(seq.tokens[s.start:s.end], seq.language))
        for s in seq.source_spans
    ]


def split_corpus(
    dialogues: Sequence[Dialogue], train_fraction: float, seed: int
) -> tuple[list[Dialogue], list[Dialogue]]:
    """Deterministic dialogue-level split; no dialogue straddles the boundary.

    The train side gets round(train_fraction * N) dialogues chosen by a seeded
    shuffle; both sides keep the input's relative order. The same
    (input, fraction, seed) yields the same partition on any platform.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidFraction(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not dialogues:
        raise ValueError("cannot split an empty corpus")
    n_train = round(train_fraction * len(dialogues))
    order = list(range(len(dialogues)))
    SplitMix64(seed).shuffle(order)
    train_idx = sorted(order[:n_train])
    eval_idx = sorted(order[n_train:])
    return [dialogues[i] for i in train_idx], [dialogues[i] for i in eval_idx]
