#!/usr/bin/env python3
"""End-to-end demo on synthetic data: corpus -> datasets -> clustering -> metrics.

Builds a small two-speaker corpus with planted markers, generates the three
fine-tuning datasets, fabricates span embeddings (a structured mixture per
marker), and runs the cluster and eval-nlg commands. Everything lands under
--out-dir (default ./demo_run) and reruns are byte-identical for a fixed seed.

    python scripts/run_synthetic_pipeline.py --out-dir demo_run --seed 7
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from markerlab.cli import main as cli_main

MARKERS = ["uh", "yeah", "well", "oh", "um"]
FILLER_TEXTS = [
    "uh I was thinking about the plan",
    "yeah that sounds right to me",
    "well, we could try it tomorrow",
    "oh that is interesting",
    "um let me check the schedule",
    "the meeting moved to the afternoon",
    "we should send the summary first",
]


def build_corpus(path: Path, seed: int, n_dialogues: int = 12) -> None:
    rng = np.random.default_rng(seed)
    with path.open("w", encoding="utf-8") as fh:
        for d in range(n_dialogues):
            n_turns = int(rng.integers(4, 9))
            for t in range(n_turns):
                fh.write(json.dumps({
                    "dialogue_id": f"demo{d}",
                    "turn_index": t,
                    "speaker": "s1" if t % 2 == 0 else "s2",
                    "text": FILLER_TEXTS[int(rng.integers(0, len(FILLER_TEXTS)))],
                }, ensure_ascii=False) + "\n")


def build_embeddings(path: Path, seed: int, dim: int = 24, per_marker: int = 48) -> None:
    rng = np.random.default_rng(seed + 1)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"k": dim, "model": "synthetic-demo", "fine_tuned": True}) + "\n")
        for marker in MARKERS:
            centers = rng.normal(size=(3, dim)) * 40.0
            for i in range(per_marker):
                vec = rng.normal(centers[i % 3], 1.0).astype(np.float32)
                fh.write(json.dumps({
                    "canonical": marker, "dialogue_id": "demo", "turn_index": i,
                    "context": "one", "matrix": [vec.tolist()],
                }) + "\n")


def build_generations(path: Path) -> None:
    pairs = [
        ("yeah I think so too", "yeah I agree with that"),
        ("uh maybe we should wait", "um maybe we wait a bit"),
        ("well, that settles it", "that settles it then"),
    ]
    with path.open("w", encoding="utf-8") as fh:
        for generated, reference in pairs:
            fh.write(json.dumps({
                "context": "/A what do you think? /B",
                "generated": generated,
                "reference": reference,
                "language": "en",
                "marker_logprobs": [
                    {"surface": m, "canonical": m, "logprob": -1.2}
                    for m in generated.split() if m in MARKERS
                ],
            }, ensure_ascii=False) + "\n")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="demo_run")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = out / "corpus.jsonl"
    embeddings = out / "embeddings.jsonl"
    generations = out / "generations.jsonl"
    build_corpus(corpus, args.seed)
    build_embeddings(embeddings, args.seed)
    build_generations(generations)

    steps = [
        ["annotate", "--corpus", str(corpus), "--lexicon", "en", "--language", "en",
         "--out-dir", str(out)],
        ["gen-data", "--task", "mask", "--corpus", str(corpus), "--lexicon", "en",
         "--language", "en", "--seed", str(args.seed), "--out-dir", str(out)],
        ["gen-data", "--task", "ntp", "--corpus", str(corpus), "--lexicon", "en",
         "--language", "en", "--out-dir", str(out)],
        ["gen-data", "--task", "ttp", "--corpus", str(corpus), "--lexicon", "en",
         "--language", "en", "--out-dir", str(out)],
        ["cluster", "--embeddings", str(embeddings), "--seed", str(args.seed),
         "--out-dir", str(out)],
        ["eval-nlg", "--generations", str(generations), "--lexicon", "en",
         "--out-dir", str(out)],
    ]
    for step in steps:
        rc = cli_main(step)
        if rc != 0:
            print(f"step failed: {step[0]}", file=sys.stderr)
            return rc

    print(f"\nresults in {out}/")
    for name in sorted(p.name for p in out.iterdir()):
        print(f"  {name}")
    metrics = json.loads((out / "metrics.json").read_text())
    print("\ngeneration metrics:", json.dumps(metrics, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
