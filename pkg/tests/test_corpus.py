import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markerlab import (
    Language,
    Speaker,
    merge_dialogue,
    parse_corpus,
    serialize_corpus,
    split_corpus,
    unmerge_sequence,
)
from markerlab.corpus import Dialogue, Utterance, normalize_text
from markerlab.errors import (
    InvalidFraction,
    MalformedRecord,
    MoreThanTwoSpeakers,
    NonMonotoneTurnIndex,
)
from conftest import corpus_lines


def test_empty_stream_gives_empty_corpus():
    assert parse_corpus([], Language.EN) == []


def test_two_line_dialogue():
    lines = corpus_lines([
        {"dialogue_id": "d1", "turn_index": 0, "speaker": "s1", "text": "hi"},
        {"dialogue_id": "d1", "turn_index": 1, "speaker": "s2", "text": "yeah"},
    ])
    (d,) = parse_corpus(lines, Language.EN)
    assert d.id == "d1"
    assert [u.text for u in d.utterances] == ["hi", "yeah"]
    assert [u.speaker for u in d.utterances] == [Speaker.S1, Speaker.S2]


def test_duplicate_turn_index_rejected():
    rows = []
    for d in range(3):
        for t in range(3):
            rows.append({"dialogue_id": f"d{d}", "turn_index": t, "speaker": "s1", "text": "x"})
    rows.append({"dialogue_id": "d1", "turn_index": 2, "speaker": "s2", "text": "dup"})
    with pytest.raises(NonMonotoneTurnIndex, match="d1"):
        parse_corpus(corpus_lines(rows), Language.EN)


@pytest.mark.parametrize("bad,what", [
    ('{"turn_index": 0, "speaker": "s1", "text": "x"}', "missing fields"),
    ('{"dialogue_id": "d", "turn_index": -1, "speaker": "s1", "text": "x"}', "non-negative"),
    ('{"dialogue_id": "d", "turn_index": 0, "speaker": "s3", "text": "x"}', "speaker"),
    ('{"dialogue_id": "d", "turn_index": 0, "speaker": "s1", "text": "   "}', "empty"),
    ('not json', "invalid JSON"),
])
def test_malformed_records_report_line(bad, what):
    good = '{"dialogue_id": "d", "turn_index": 0, "speaker": "s1", "text": "ok"}'
    with pytest.raises(MalformedRecord, match="line 2") as err:
        parse_corpus([good, bad], Language.EN)
    assert what.split()[0] in str(err.value)


def test_more_than_two_speakers_guard():
    utts = (
        Utterance("d", 0, Speaker.S1, "a"),
        Utterance("d", 1, Speaker.S2, "b"),
    )
    Dialogue("d", Language.EN, utts)  # fine
    with pytest.raises(MoreThanTwoSpeakers):
        # Simulate a hypothetical third speaker by duck-typing the enum slot.
        class S3:
            value = "s3"
        Dialogue("d", Language.EN, utts + (Utterance("d", 2, S3(), "c"),))


def test_monologue_flagged_not_rejected():
    lines = corpus_lines([
        {"dialogue_id": "m", "turn_index": 0, "speaker": "s1", "text": "one"},
        {"dialogue_id": "m", "turn_index": 1, "speaker": "s1", "text": "two"},
    ])
    (d,) = parse_corpus(lines, Language.EN)
    assert d.is_monologue


def test_merge_prepends_speaker_tokens():
    lines = corpus_lines([
        {"dialogue_id": "d", "turn_index": 0, "speaker": "s1", "text": "did you check your inbox?"},
        {"dialogue_id": "d", "turn_index": 1, "speaker": "s2", "text": "uh-huh"},
    ])
    (d,) = parse_corpus(lines, Language.EN)
    m = merge_dialogue(d)
    assert m.tokens[:2] == ("<s1>", "did")
    assert m.tokens[-2:] == ("<s2>", "uh-huh")


def test_merge_single_utterance():
    d = Dialogue("d", Language.EN, (Utterance("d", 0, Speaker.S1, "hello there"),))
    assert merge_dialogue(d).tokens == ("<s1>", "hello", "there")


def test_same_speaker_adjacent_utterances_keep_tokens():
    d = Dialogue("d", Language.EN, (
        Utterance("d", 0, Speaker.S1, "one"),
        Utterance("d", 1, Speaker.S1, "two"),
    ))
    assert merge_dialogue(d).tokens == ("<s1>", "one", "<s1>", "two")


def test_merge_round_trip_six_utterances():
    rows = [
        {"dialogue_id": "d", "turn_index": i, "speaker": "s1" if i % 2 else "s2",
         "text": f"utterance number {i} with words"}
        for i in range(6)
    ]
    (d,) = parse_corpus(corpus_lines(rows), Language.EN)
    got = unmerge_sequence(merge_dialogue(d))
    assert got == [(u.turn_index, u.speaker, u.text) for u in d.utterances]


def test_merge_round_trip_japanese():
    rows = [
        {"dialogue_id": "j", "turn_index": 0, "speaker": "s1", "text": "うんうんうん、そうだね"},
        {"dialogue_id": "j", "turn_index": 1, "speaker": "s2", "text": "はい"},
    ]
    (d,) = parse_corpus(corpus_lines(rows), Language.JA)
    m = merge_dialogue(d)
    assert m.tokens[0] == "<s1>" and m.tokens[1] == "う"
    assert [t for _, _, t in unmerge_sequence(m)] == ["うんうんうん、そうだね", "はい"]


_text = st.text(min_size=1, max_size=30).filter(lambda s: normalize_text(s))


@settings(max_examples=60)
@given(st.lists(_text, min_size=1, max_size=6),
       st.sampled_from([Language.EN, Language.JA]))
def test_parse_serialize_round_trip(texts, language):
    rows = [
        {"dialogue_id": "d", "turn_index": i,
         "speaker": "s1" if i % 2 == 0 else "s2", "text": t}
        for i, t in enumerate(texts)
    ]
    dialogues = parse_corpus(corpus_lines(rows), language)
    canonical = serialize_corpus(dialogues)
    again = serialize_corpus(parse_corpus(canonical.splitlines(), language))
    assert again == canonical


@settings(max_examples=60)
@given(st.lists(_text, min_size=1, max_size=6),
       st.sampled_from([Language.EN, Language.JA]))
def test_merge_unmerge_round_trip(texts, language):
    utts = tuple(
        Utterance("d", i, Speaker.S1 if i % 2 == 0 else Speaker.S2, normalize_text(t))
        for i, t in enumerate(texts)
    )
    d = Dialogue("d", language, utts)
    got = unmerge_sequence(merge_dialogue(d))
    assert got == [(u.turn_index, u.speaker, u.text) for u in utts]


def test_merge_distinct_texts_distinct_sequences():
    mk = lambda text: Dialogue("d", Language.EN, (Utterance("d", 0, Speaker.S1, text),))
    assert merge_dialogue(mk("a b")).tokens != merge_dialogue(mk("a c")).tokens


def test_merge_injective_even_when_text_contains_speaker_token():
    # Adversarial case: a literal "<s2>" inside an utterance makes the token
    # streams collide, but the source spans still tell the dialogues apart.
    one_utt = Dialogue("d", Language.EN, (Utterance("d", 0, Speaker.S1, "a <s2> b"),))
    two_utt = Dialogue("d", Language.EN, (
        Utterance("d", 0, Speaker.S1, "a"),
        Utterance("d", 1, Speaker.S2, "b"),
    ))
    m1, m2 = merge_dialogue(one_utt), merge_dialogue(two_utt)
    assert m1.tokens == m2.tokens
    assert m1.source_spans != m2.source_spans
    assert m1 != m2
    assert [t for _, _, t in unmerge_sequence(m1)] == ["a <s2> b"]
    assert [t for _, _, t in unmerge_sequence(m2)] == ["a", "b"]


def _dialogues(n):
    rows = [{"dialogue_id": f"d{i}", "turn_index": 0, "speaker": "s1", "text": "hi"} for i in range(n)]
    return parse_corpus(corpus_lines(rows), Language.EN)


def test_split_deterministic_80_20():
    ds = _dialogues(10)
    train, ev = split_corpus(ds, 0.8, seed=7)
    assert (len(train), len(ev)) == (8, 2)
    assert split_corpus(ds, 0.8, seed=7) == (train, ev)


def test_split_rounding():
    train, ev = split_corpus(_dialogues(5), 0.8, seed=1)
    assert (len(train), len(ev)) == (round(0.8 * 5), 5 - round(0.8 * 5))


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
def test_split_invalid_fraction(fraction):
    with pytest.raises(InvalidFraction):
        split_corpus(_dialogues(4), fraction, seed=0)


def test_split_no_dialogue_straddles():
    ds = _dialogues(9)
    train, ev = split_corpus(ds, 0.5, seed=3)
    ids = {d.id for d in train} | {d.id for d in ev}
    assert len(ids) == 9
    assert not ({d.id for d in train} & {d.id for d in ev})


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=25)
def test_split_seed_stability(seed):
    ds = _dialogues(12)
    first = split_corpus(ds, 0.75, seed)
    assert split_corpus(ds, 0.75, seed) == first
