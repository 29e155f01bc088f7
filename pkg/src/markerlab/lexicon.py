"""Backchannel/filler lexicons and boundary-aware span detection.

Matching rules, in order:

1. Candidate generation. English variants match case-insensitively and only
   at word boundaries (the neighbouring characters must be text edges,
   whitespace, or punctuation, so "um" never fires inside "maximum").
   Japanese variants match at any character offset.
2. Overlap resolution. All candidates compete; longer matches win, ties go to
   the leftmost. The survivors are non-overlapping. Permuting lexicon entry
   order cannot change the outcome.
3. Ambiguity filtering. Entries flagged ambiguous ("well", "right", ...) are
   kept only when the occurrence is the first word of the utterance and is
   immediately followed by a comma, or when it sits adjacent (ignoring
   whitespace and commas) to another emitted span. Adjacency is closed under
   iteration, so "okay, right" keeps both.

Lexicon wire format: UTF-8 line-delimited JSON, one entry per line with keys
canonical, variants (array), ambiguous (bool), language ("en"|"ja").
Bundled defaults ship as package data (lexicon_en.jsonl, lexicon_ja.jsonl).
Lexicons are immutable after load; matching is pure.
"""

from __future__ import annotations

import json
import string
import unicodedata
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable

from .corpus import Dialogue, Language, Utterance
from .errors import DuplicateVariant, EmptyEntry, MalformedRecord

BOUNDARY_PUNCT = set(string.punctuation) | set("、。・！？")
COMMA_CHARS = {",", "、"}
DS_OPEN = "<ds>"
DS_CLOSE = "</ds>"


@dataclass(frozen=True)
class MarkerEntry:
    canonical: str
    variants: frozenset[str]
    ambiguous: bool
    language: Language

    def __post_init__(self):
        if not self.canonical or not self.variants or any(not v for v in self.variants):
            raise EmptyEntry(f"entry {self.canonical!r} has an empty canonical or variant")
        if self.canonical not in self.variants:
            raise EmptyEntry(f"canonical {self.canonical!r} missing from its own variants")


@dataclass(frozen=True)
class MarkerLexicon:
    language: Language
    entries: tuple[MarkerEntry, ...]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for entry in self.entries:
            for v in entry.variants:
                if v in seen:
                    raise DuplicateVariant(
                        f"variant {v!r} appears in entries {seen[v]!r} and {entry.canonical!r}"
                    )
                seen[v] = entry.canonical

    @property
    def canonicals(self) -> list[str]:
        return [e.canonical for e in self.entries]


@dataclass(frozen=True)
class MarkerSpan:
    """A located marker occurrence; offsets are character positions, end exclusive."""
    dialogue_id: str
    turn_index: int
    char_start: int
    char_end: int
    canonical: str
    matched_variant: str


def load_lexicon(stream: IO[bytes] | IO[str] | Iterable[str], nfkc: bool = False) -> MarkerLexicon:
    """Load a lexicon from line-delimited JSON.

    nfkc=True applies Unicode NFKC to every variant at load time; the default
    keeps variants byte-exact (full-width forms stay full-width).
    """
    entries: list[MarkerEntry] = []
    language: Language | None = None
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
            lang = Language(obj["language"])
            canonical = obj["canonical"]
            variants = list(obj["variants"])
            ambiguous = bool(obj.get("ambiguous", False))
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedRecord(f"bad lexicon entry: {exc}", line_no) from exc
        if nfkc:
            canonical = unicodedata.normalize("NFKC", canonical)
            variants = [unicodedata.normalize("NFKC", v) for v in variants]
        if language is None:
            language = lang
        elif lang is not language:
            raise MalformedRecord("mixed languages in one lexicon", line_no)
        if canonical not in variants:
            variants.append(canonical)
        entries.append(MarkerEntry(canonical, frozenset(variants), ambiguous, lang))
    if language is None:
        raise MalformedRecord("lexicon stream contains no entries")
    return MarkerLexicon(language, tuple(entries))


def load_builtin_lexicon(name: str) -> MarkerLexicon:
    """Load one of the bundled defaults: "en" or "ja"."""
    if name not in ("en", "ja"):
        raise ValueError(f"no builtin lexicon {name!r}; expected 'en' or 'ja'")
    path = resources.files("markerlab").joinpath(f"data/lexicon_{name}.jsonl")
    with path.open("r", encoding="utf-8") as fh:
        return load_lexicon(fh)


def _is_boundary(text: str, pos: int) -> bool:
    """True when pos is off either text edge or holds whitespace/punctuation."""
    if pos < 0 or pos >= len(text):
        return True
    ch = text[pos]
    return ch.isspace() or ch in BOUNDARY_PUNCT


def _candidates(text: str, lex: MarkerLexicon) -> list[tuple[int, int, str, str]]:
    """All raw matches as (start, end, canonical, surface), before resolution."""
    out = []
    if lex.language is Language.EN:
        folded = text.lower()
        for entry in lex.entries:
            for variant in entry.variants:
                needle = variant.lower()
                start = folded.find(needle)
                while start != -1:
                    end = start + len(needle)
                    if _is_boundary(text, start - 1) and _is_boundary(text, end):
                        out.append((start, end, entry.canonical, text[start:end]))
                    start = folded.find(needle, start + 1)
    else:
        for entry in lex.entries:
            for variant in entry.variants:
                start = text.find(variant)
                while start != -1:
                    out.append((start, start + len(variant), entry.canonical, variant))
                    start = text.find(variant, start + 1)
    return out


def _resolve_overlaps(cands: list[tuple[int, int, str, str]]) -> list[tuple[int, int, str, str]]:
    """Greedy selection: longest first, ties leftmost; survivors never overlap."""
    chosen: list[tuple[int, int, str, str]] = []
    for cand in sorted(cands, key=lambda c: (c[0] - c[1], c[0])):
        if all(cand[1] <= k[0] or cand[0] >= k[1] for k in chosen):
            chosen.append(cand)
    chosen.sort(key=lambda c: c[0])
    return chosen


def _first_word_comma(text: str, start: int, end: int) -> bool:
    return text[:start].strip() == "" and end < len(text) and text[end] in COMMA_CHARS


def _gap_is_soft(text: str, lo: int, hi: int) -> bool:
    return all(ch.isspace() or ch in COMMA_CHARS for ch in text[lo:hi])


def _filter_ambiguous(
    text: str,
    spans: list[tuple[int, int, str, str]],
    ambiguous_canonicals: set[str],
) -> list[tuple[int, int, str, str]]:
    emitted = [s for s in spans if s[2] not in ambiguous_canonicals]
    pending = [s for s in spans if s[2] in ambiguous_canonicals]
    changed = True
    while changed and pending:
        changed = False
        still = []
        for s in pending:
            ok = _first_word_comma(text, s[0], s[1]) or any(
                _gap_is_soft(text, min(s[1], t[1]), max(s[0], t[0]))
                for t in emitted
                if t[1] <= s[0] or s[1] <= t[0]
            )
            if ok:
                emitted.append(s)
                changed = True
            else:
                still.append(s)
        pending = still
    emitted.sort(key=lambda c: c[0])
    return emitted


def find_spans_text(text: str, lex: MarkerLexicon) -> list[tuple[int, int, str, str]]:
    """Locate marker occurrences in raw text: (start, end, canonical, surface)."""
    ambiguous = {e.canonical for e in lex.entries if e.ambiguous}
    resolved = _resolve_overlaps(_candidates(text, lex))
    return _filter_ambiguous(text, resolved, ambiguous)


def find_spans(u: Utterance, lex: MarkerLexicon) -> list[MarkerSpan]:
    """Marker spans of one utterance, per the module-level matching rules."""
    return [
        MarkerSpan(u.dialogue_id, u.turn_index, s, e, canonical, surface)
        for s, e, canonical, surface in find_spans_text(u.text, lex)
    ]


def tag_text(text: str, spans: list[MarkerSpan]) -> str:
    """Wrap each span in <ds>...</ds>; stripping the tags restores the text."""
    out = []
    cursor = 0
    for span in sorted(spans, key=lambda s: s.char_start):
        out.append(text[cursor:span.char_start])
        out.append(DS_OPEN + text[span.char_start:span.char_end] + DS_CLOSE)
        cursor = span.char_end
    out.append(text[cursor:])
    return "".join(out)


def strip_tags(tagged: str) -> str:
    return tagged.replace(DS_OPEN, "").replace(DS_CLOSE, "")


@dataclass(frozen=True)
class AnnotatedCorpus:
    """Dialogues plus every located marker span and per-utterance tagged text."""
    dialogues: tuple[Dialogue, ...]
    spans: tuple[MarkerSpan, ...]
    tagged: dict[tuple[str, int], str]

    def __post_init__(self):
        by_utt: dict[tuple[str, int], list[MarkerSpan]] = {}
        for s in self.spans:
            by_utt.setdefault((s.dialogue_id, s.turn_index), []).append(s)
        object.__setattr__(self, "_by_utterance", by_utt)

    def spans_for(self, dialogue_id: str, turn_index: int) -> list[MarkerSpan]:
        return list(self._by_utterance.get((dialogue_id, turn_index), ()))


def annotate_corpus(dialogues: Iterable[Dialogue], lex: MarkerLexicon) -> AnnotatedCorpus:
    """Run find_spans over every utterance and build tagged texts."""
    dialogues = tuple(dialogues)
    for d in dialogues:
        if d.language is not lex.language:
            raise ValueError(
                f"dialogue {d.id!r} language {d.language.value} != lexicon {lex.language.value}"
            )
    all_spans: list[MarkerSpan] = []
    tagged: dict[tuple[str, int], str] = {}
    for d in dialogues:
        for u in d.utterances:
            spans = find_spans(u, lex)
            all_spans.extend(spans)
            tagged[(u.dialogue_id, u.turn_index)] = tag_text(u.text, spans)
    return AnnotatedCorpus(dialogues, tuple(all_spans), tagged)


@dataclass(frozen=True)
class MarkerStat:
    canonical: str
    count: int
    share: float


def marker_stats(annotated: AnnotatedCorpus) -> list[MarkerStat]:
    """Occurrence counts and shares per canonical, largest first.

    Shares sum to 1 whenever any marker occurs; an unmarked corpus yields an
    empty table.
    """
    counts: dict[str, int] = {}
    for span in annotated.spans:
        counts[span.canonical] = counts.get(span.canonical, 0) + 1
    total = sum(counts.values())
    if total == 0:
        return []
    return [
        MarkerStat(canonical, count, count / total)
        for canonical, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
