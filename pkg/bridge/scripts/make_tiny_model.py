#!/usr/bin/env python3
"""Build the bundled tiny model under bridge/tiny_model/.

A 2-layer, 32-dim GPT-2 (~60k parameters) with a word/character-level
tokenizer whose vocabulary covers the bilingual test fixtures and the bundled
lexicons. Weights are randomly initialized with a fixed seed; the point is a
fast, deterministic, network-free model for CI and local smoke runs, not a
useful language model. Rerun this script only when the tokenizer scheme or
fixture vocabulary changes, and commit the regenerated directory.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import torch
from tokenizers import Regex, Tokenizer, models, pre_tokenizers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

BRIDGE = Path(__file__).resolve().parent.parent
REPO = BRIDGE.parent
OUT = BRIDGE / "tiny_model"

CJK = r"[　-ヿ㐀-䶿一-鿿＀-￯]"
PUNCT = r"[!-/:-@\[-`{-~]"
SPECIALS = ["<unk>", "<pad>", "<s1>", "<s2>", "[MASK]", "<ts>"]


def split_like_tokenizer(text: str) -> list[str]:
    """Mirror the pre-tokenizer: whitespace words, CJK chars and ASCII
    punctuation isolated."""
    import re
    pieces = []
    for word in text.split():
        pieces.extend(p for p in re.split(f"({CJK}|{PUNCT})", word) if p)
    return pieces


def gather_vocab() -> list[str]:
    words: set[str] = set()
    for name in ("corpus_en.jsonl", "corpus_ja.jsonl"):
        path = REPO / "tests" / "fixtures" / name
        for line in path.read_text(encoding="utf-8").splitlines():
            text = json.loads(line)["text"]
            words.update(split_like_tokenizer(text))
            words.update(split_like_tokenizer(text.lower()))
    for name in ("lexicon_en.jsonl", "lexicon_ja.jsonl"):
        path = REPO / "src" / "markerlab" / "data" / name
        for line in path.read_text(encoding="utf-8").splitlines():
            for variant in json.loads(line)["variants"]:
                words.update(split_like_tokenizer(variant))
    # basic latin letters/digits so novel short tokens often stay in-vocab
    words.update("abcdefghijklmnopqrstuvwxyz")
    words.update(str(d) for d in range(10))
    return SPECIALS + sorted(words)


def main() -> None:
    vocab_list = gather_vocab()
    vocab = {tok: i for i, tok in enumerate(vocab_list)}
    tokenizer = Tokenizer(models.WordLevel(vocab=vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.Sequence([
        pre_tokenizers.WhitespaceSplit(),
        pre_tokenizers.Split(Regex(CJK), behavior="isolated"),
        pre_tokenizers.Split(Regex(PUNCT), behavior="isolated"),
    ])
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="<unk>",
        pad_token="<pad>",
        additional_special_tokens=["<s1>", "<s2>", "[MASK]", "<ts>"],
    )

    torch.manual_seed(20240817)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=512,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=vocab["<pad>"],
        eos_token_id=vocab["<pad>"],
    )
    model = GPT2LMHeadModel(config)
    n_params = sum(p.numel() for p in model.parameters())
    assert n_params <= 1_000_000, n_params

    OUT.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(OUT)
    fast.save_pretrained(OUT)
    print(f"tiny model: vocab={len(vocab)} params={n_params} -> {OUT}")


if __name__ == "__main__":
    main()
