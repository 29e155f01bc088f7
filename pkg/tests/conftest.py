import json
from pathlib import Path

import pytest

from markerlab import Language, annotate_corpus, load_builtin_lexicon, parse_corpus

FIXTURES = Path(__file__).parent / "fixtures"


def corpus_lines(rows):
    return [json.dumps(r, ensure_ascii=False) for r in rows]


@pytest.fixture(scope="session")
def en_lexicon():
    return load_builtin_lexicon("en")


@pytest.fixture(scope="session")
def ja_lexicon():
    return load_builtin_lexicon("ja")


@pytest.fixture(scope="session")
def small_en_corpus():
    rows = [
        {"dialogue_id": "d0", "turn_index": 0, "speaker": "s1", "text": "well, I think uh maybe"},
        {"dialogue_id": "d0", "turn_index": 1, "speaker": "s2", "text": "uh-huh"},
        {"dialogue_id": "d0", "turn_index": 2, "speaker": "s1", "text": "so the maximum value is fine"},
        {"dialogue_id": "d1", "turn_index": 0, "speaker": "s2", "text": "oh yeah that works"},
        {"dialogue_id": "d1", "turn_index": 1, "speaker": "s1", "text": "he did well yesterday"},
        {"dialogue_id": "d1", "turn_index": 2, "speaker": "s1", "text": "yeah"},
    ]
    return parse_corpus(corpus_lines(rows), Language.EN)


@pytest.fixture(scope="session")
def annotated_en(small_en_corpus, en_lexicon):
    return annotate_corpus(small_en_corpus, en_lexicon)
