"""Small-scale fine-tuning on the generated dataset files.

Three objectives, all trained as causal language modelling on the bundled (or
any loadable) model:

- ntp: plain next-token prediction over the merged sequences.
- mask: the corrupted sequence is the input and the loss covers only the
  marker-span positions, where the model predicts the original subwords. A
  masked surface token maps to as many [MASK] subwords as the original token
  had, so input and label id sequences stay aligned one to one.
- ttp: next-token prediction over sequences with a <ts> token inserted after
  every labelled turn shift, so the model learns to emit the shift marker.

Defaults follow the usual small-batch recipe (batch size 3, AdamW, learning
rate 1e-4, weight decay 0.01). This is utility tooling for producing
checkpoints the extraction operations can consume, not a replication of any
large training run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch

from .backend import Backend

IGNORE = -100
TASKS = ("mask", "ntp", "ttp")


@dataclass
class TrainResult:
    losses: list[float]
    checkpoint: Path


def _read_jsonl(path: str | Path) -> list[dict]:
    return [
        json.loads(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def _mask_token(backend: Backend) -> str:
    return "[MASK]" if "[MASK]" in backend.tokenizer.get_vocab() else backend.tokenizer.unk_token


def build_mask_example(backend: Backend, record: dict) -> tuple[list[int], list[int]]:
    """(input_ids, label_ids) for one masked record; labels are IGNORE except
    at span subword positions, which carry the original token's subwords."""
    input_tokens = record["input_tokens"]
    labels = record["labels"]
    span_positions = {i for lo, hi in record["spans"] for i in range(lo, hi)}
    mask_surface = _mask_token(backend)
    ids: list[int] = []
    label_ids: list[int] = []
    for pos, surface in enumerate(input_tokens):
        if pos in span_positions:
            original_ids = backend.encode_ids(labels[pos])
            if surface == labels[pos]:
                sub = original_ids
            elif surface == mask_surface or surface == "[MASK]":
                sub = backend.encode_ids(mask_surface) * len(original_ids)
                sub = sub[:len(original_ids)] or backend.encode_ids(mask_surface)
            else:
                sub = backend.encode_ids(surface)
                if len(sub) < len(original_ids):
                    sub = sub + [sub[-1]] * (len(original_ids) - len(sub))
                sub = sub[:len(original_ids)]
            ids.extend(sub)
            label_ids.extend(original_ids[:len(sub)])
        else:
            sub = backend.encode_ids(surface)
            ids.extend(sub)
            label_ids.extend([IGNORE] * len(sub))
    return ids, label_ids


def _build_examples(backend: Backend, task: str, records: list[dict]) -> list[tuple[list[int], list[int]]]:
    examples = []
    for record in records:
        if task == "mask":
            examples.append(build_mask_example(backend, record))
        elif task == "ntp":
            ids = backend.encode_ids(" ".join(record["tokens"]))
            examples.append((ids, list(ids)))
        elif task == "ttp":
            tokens = list(record["tokens"])
            for idx in sorted(record["shift_after"], reverse=True):
                tokens.insert(idx + 1, "<ts>")
            ids = backend.encode_ids(" ".join(tokens))
            examples.append((ids, list(ids)))
        else:
            raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    return [ex for ex in examples if ex[0]]


def _batch(backend: Backend, chunk: list[tuple[list[int], list[int]]]):
    width = min(max(len(ids) for ids, _ in chunk), backend.max_positions)
    pad = backend.pad_id
    input_ids, label_ids, attention = [], [], []
    for ids, labels in chunk:
        ids, labels = ids[:width], labels[:width]
        fill = width - len(ids)
        input_ids.append(ids + [pad] * fill)
        label_ids.append(labels + [IGNORE] * fill)
        attention.append([1] * len(ids) + [0] * fill)
    device = backend.device
    return (
        torch.tensor(input_ids, dtype=torch.long, device=device),
        torch.tensor(label_ids, dtype=torch.long, device=device),
        torch.tensor(attention, dtype=torch.long, device=device),
    )


def finetune(
    backend: Backend,
    task: str,
    dataset: str | Path,
    out_dir: str | Path,
    steps: int = 10,
    batch_size: int = 3,
    learning_rate: float = 1e-4,
    weight_decay: float = 0.01,
    seed: int = 0,
    overfit_one_batch: bool = False,
) -> TrainResult:
    """Train for a fixed number of optimizer steps and save a checkpoint.

    overfit_one_batch repeats the first batch every step, the standard sanity
    check that the loss can go down at all.
    """
    examples = _build_examples(backend, task, _read_jsonl(dataset))
    if not examples:
        raise ValueError(f"dataset {dataset} produced no trainable examples")
    generator = torch.Generator().manual_seed(seed)
    optimizer = torch.optim.AdamW(
        backend.model.parameters(), lr=learning_rate, weight_decay=weight_decay
    )
    backend.model.train()
    losses: list[float] = []
    order: list[int] = []
    first_batch = None
    for step in range(steps):
        if overfit_one_batch:
            if first_batch is None:
                first_batch = _batch(backend, examples[:batch_size])
            input_ids, label_ids, attention = first_batch
        else:
            if len(order) < batch_size:
                order += torch.randperm(len(examples), generator=generator).tolist()
            take, order = order[:batch_size], order[batch_size:]
            input_ids, label_ids, attention = _batch(backend, [examples[i] for i in take])
        out = backend.model(input_ids, attention_mask=attention, labels=label_ids)
        optimizer.zero_grad()
        out.loss.backward()
        optimizer.step()
        losses.append(float(out.loss.detach()))
    backend.model.eval()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    backend.model.save_pretrained(out_dir)
    backend.tokenizer.save_pretrained(out_dir)
    return TrainResult(losses, out_dir)
