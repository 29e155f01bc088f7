"""Model access: loading, tokenization with offsets, hidden states, log-probs.

One class fronts both the bundled tiny model and any Hugging Face causal LM
directory or hub id; everything flows through AutoModelForCausalLM plus a
fast tokenizer, so offsets are always available for span alignment. The
bundled model lives in bridge/tiny_model and loads with no network access.

Inference is deterministic: eval mode, no dropout, no sampling, CPU by
default. Inputs longer than the model's position budget are truncated on the
left (keeping the most recent context, where the span sits).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from transformers import AutoModelForCausalLM, AutoTokenizer
from transformers.utils import logging as hf_logging

hf_logging.set_verbosity_error()
hf_logging.disable_progress_bar()

TINY_MODEL_DIR = Path(__file__).resolve().parent.parent.parent / "tiny_model"


class ModelLoadError(Exception):
    pass


class TokenAlignmentError(Exception):
    pass


def resolve_model_id(model: str) -> str:
    if model == "tiny":
        if not TINY_MODEL_DIR.is_dir():
            raise ModelLoadError(
                f"bundled tiny model missing at {TINY_MODEL_DIR}; "
                "run bridge/scripts/make_tiny_model.py"
            )
        return str(TINY_MODEL_DIR)
    return model


class Backend:
    def __init__(self, model, tokenizer, model_id: str, fine_tuned: bool, device: str):
        self.model = model.to(device)
        self.model.eval()
        self.tokenizer = tokenizer
        self.model_id = model_id
        self.fine_tuned = fine_tuned
        self.device = device

    @classmethod
    def load(cls, model: str, checkpoint: str | None = None,
             device: str | None = None) -> "Backend":
        device = device or "cpu"
        source = checkpoint if checkpoint else resolve_model_id(model)
        try:
            tokenizer = AutoTokenizer.from_pretrained(source)
            lm = AutoModelForCausalLM.from_pretrained(source)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model from {source}: {exc}") from exc
        if not tokenizer.is_fast:
            raise ModelLoadError(f"{source} has no fast tokenizer; offsets unavailable")
        return cls(lm, tokenizer, model, checkpoint is not None, device)

    @property
    def hidden_size(self) -> int:
        return int(self.model.config.hidden_size)

    @property
    def max_positions(self) -> int:
        return int(getattr(self.model.config, "max_position_embeddings", 1024))

    @property
    def pad_id(self) -> int:
        if self.tokenizer.pad_token_id is not None:
            return int(self.tokenizer.pad_token_id)
        return int(self.tokenizer.eos_token_id or 0)

    def encode_with_offsets(self, text: str) -> tuple[list[int], list[tuple[int, int]]]:
        enc = self.tokenizer(text, return_offsets_mapping=True, add_special_tokens=False)
        return list(enc["input_ids"]), [tuple(o) for o in enc["offset_mapping"]]

    def encode_ids(self, text: str) -> list[int]:
        return list(self.tokenizer(text, add_special_tokens=False)["input_ids"])

    def _forward(self, ids: list[int], hidden: bool):
        if not ids:
            raise TokenAlignmentError("empty input after tokenization")
        tensor = torch.tensor([ids], dtype=torch.long, device=self.device)
        with torch.no_grad():
            return self.model(tensor, output_hidden_states=hidden)

    def last_hidden_states(self, ids: list[int]) -> np.ndarray:
        """(T, hidden_size) final-layer states for a token id sequence."""
        out = self._forward(ids, hidden=True)
        return out.hidden_states[-1][0].to(torch.float64).cpu().numpy()

    def next_token_logprobs(self, ids: list[int]) -> np.ndarray:
        """(T,) array where entry t is log p(ids[t] | ids[:t]); entry 0 is 0.

        A causal model cannot score its first token, so position 0 contributes
        log 1 = 0 and callers should keep some preceding text in front of
        anything they score.
        """
        out = self._forward(ids, hidden=False)
        logprobs = torch.log_softmax(out.logits[0].to(torch.float64), dim=-1)
        scores = np.zeros(len(ids))
        for t in range(1, len(ids)):
            scores[t] = float(logprobs[t - 1, ids[t]])
        return scores

    def truncate_left(self, ids: list[int], offsets: list[tuple[int, int]]):
        """Clip to the model's position budget, keeping the sequence tail."""
        limit = self.max_positions
        if len(ids) <= limit:
            return ids, offsets
        return ids[-limit:], offsets[-limit:]
