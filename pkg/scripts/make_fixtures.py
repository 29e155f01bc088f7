#!/usr/bin/env python3
"""Regenerate the checked-in test fixtures under tests/fixtures/.

Run from the repo root after any deliberate change to the corpus, lexicon, or
interchange formats, then review the diff before committing:

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from markerlab import Language, annotate_corpus, load_builtin_lexicon, parse_corpus
from markerlab.cli import annotated_lines

FIXTURES = REPO / "tests" / "fixtures"

EN_ROWS = [
    ("en0", 0, "s1", "well, I was going to say the maximum value is fine"),
    ("en0", 1, "s2", "uh-huh"),
    ("en0", 2, "s1", "he did well yesterday so it went okay"),
    ("en0", 3, "s2", "oh yeah of course"),
    ("en0", 4, "s1", "and um the number was uh big"),
    ("en1", 0, "s1", "yes it was Um huge"),
    ("en1", 1, "s2", "mmhmm"),
    ("en1", 2, "s1", "right, that sums it up"),
    ("en1", 3, "s2", "huh interesting"),
    ("en1", 4, "s1", "no doubt about the outcome"),
    ("en2", 0, "s1", "so, first we checked the inbox"),
    ("en2", 1, "s2", "okay, right"),
    ("en2", 2, "s1", "the album was called Uh-Huh actually"),
    ("en2", 3, "s2", "yeah yeah yeah"),
    ("en2", 4, "s1", "this summary mentions no markers at all"),
    ("en3", 0, "s1", "I guess uh we are done"),
    ("en3", 1, "s1", "oh wait there is more"),
    ("en3", 2, "s1", "never mind it is fine"),
    ("en3", 3, "s1", "uh huh huh what a day"),
    ("en3", 4, "s1", "the end"),
    ("en4", 0, "s1", "did you check your inbox?"),
    ("en4", 1, "s2", "uh-huh"),
    ("en4", 2, "s1", "good"),
    ("en4", 3, "s2", "uh, but why?"),
    ("en4", 4, "s1", "just checking"),
]

JA_ROWS = [
    ("ja0", 0, "s1", "うんうんうん、そうだね"),
    ("ja0", 1, "s2", "はい"),
    ("ja0", 2, "s1", "なんかね、いやいや大変だった"),
    ("ja0", 3, "s2", "へーそうですか"),
    ("ja0", 4, "s1", "まあそうかもね"),
    ("ja1", 0, "s1", "えーっと思いました"),
    ("ja1", 1, "s2", "ううん、それは違うよ"),
    ("ja1", 2, "s1", "あのー、少し待って"),
    ("ja1", 3, "s2", "んーそれはどうかな"),
    ("ja1", 4, "s1", "はあ、なるほどだよ"),
    ("ja2", 0, "s1", "そうそうそう、それですよ"),
    ("ja2", 1, "s2", "ええ、わかります"),
    ("ja2", 2, "s1", "あっという間でした"),
    ("ja2", 3, "s2", "うーん、むずかしいです"),
    ("ja2", 4, "s1", "いやー、それはすごい"),
    ("ja3", 0, "s1", "はいはい、そうですよね"),
    ("ja3", 1, "s2", "ま、それでいいよ"),
    ("ja3", 2, "s1", "ねー、きいてよ"),
    ("ja3", 3, "s2", "あああれはなんだったの"),
    ("ja3", 4, "s1", "そうかそうか"),
    ("ja4", 0, "s1", "あーそれはそうと"),
    ("ja4", 1, "s2", "うん"),
    ("ja4", 2, "s1", "ははは、わらいごとじゃない"),
    ("ja4", 3, "s2", "えっそうなの"),
    ("ja4", 4, "s1", "おわりです"),
]


def corpus_text(rows):
    return "\n".join(
        json.dumps(
            {"dialogue_id": d, "turn_index": t, "speaker": s, "text": x},
            ensure_ascii=False, separators=(",", ":")
        )
        for d, t, s, x in rows
    ) + "\n"


def write_corpus_and_golden():
    for name, rows, lang in (("en", EN_ROWS, Language.EN), ("ja", JA_ROWS, Language.JA)):
        corpus = corpus_text(rows)
        (FIXTURES / f"corpus_{name}.jsonl").write_text(corpus, encoding="utf-8")
        dialogues = parse_corpus(corpus.splitlines(), lang)
        annotated = annotate_corpus(dialogues, load_builtin_lexicon(name))
        golden = "\n".join(annotated_lines(annotated, lang)) + "\n"
        (FIXTURES / f"golden_annotated_{name}.jsonl").write_text(golden, encoding="utf-8")


def write_embeddings_fixture():
    """Three markers, each a 3-blob mixture in 8 dims: sweeps should pick k=3."""
    rng = np.random.default_rng(20240817)
    path = FIXTURES / "embeddings_blobs.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"k": 8, "model": "fixture-blobs", "fine_tuned": False}) + "\n")
        for marker in ("uh", "yeah", "oh"):
            centers = rng.normal(size=(3, 8)) * 60.0
            for i in range(45):
                vec = rng.normal(centers[i % 3], 1.0)
                vec = np.asarray(vec, dtype=np.float32).tolist()
                fh.write(json.dumps({
                    "canonical": marker, "dialogue_id": "fx", "turn_index": i,
                    "context": "one", "matrix": [vec],
                }) + "\n")


def write_generations_fixture():
    records = [
        {
            "context": "/A did you check your inbox? /B",
            "generated": "yeah I did uh this morning",
            "reference": "yeah I did check it this morning",
            "language": "en",
            "marker_logprobs": [
                {"surface": "yeah", "canonical": "yeah", "logprob": -0.5},
                {"surface": "uh", "canonical": "uh", "logprob": -1.5},
            ],
            "cand_vecs": [[1.0, 0.0], [0.0, 1.0]],
            "ref_vecs": [[1.0, 0.0]],
        },
        {
            "context": "/A how was the trip? /B",
            "generated": "oh it was fine I guess",
            "reference": "oh it was fine overall",
            "language": "en",
            "marker_logprobs": [
                {"surface": "oh", "canonical": "oh", "logprob": -1.0},
            ],
            "cand_vecs": [[1.0, 0.0]],
            "ref_vecs": [[1.0, 0.0]],
        },
        {
            "context": "/A see you tomorrow /B",
            "generated": "okay, right see you then",
            "reference": "right see you then",
            "language": "en",
            "marker_logprobs": [
                {"surface": "okay", "canonical": "okay", "logprob": -1.0},
                {"surface": "right", "canonical": "right", "logprob": -1.0},
            ],
            "cand_vecs": [[0.0, 1.0]],
            "ref_vecs": [[0.0, 1.0]],
        },
    ]
    path = FIXTURES / "generations.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_corpus_and_golden()
    write_embeddings_fixture()
    write_generations_fixture()
    for p in sorted(FIXTURES.iterdir()):
        print(f"wrote {p.relative_to(REPO)} ({p.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
