"""Transformer-model bridge for the markerlab file formats.

Connects actual causal language models to the core toolkit's interchange
files: per-span last-layer embedding matrices, per-occurrence marker
log-probabilities for generation records, and small-scale fine-tuning on the
mask/ntp/ttp dataset files. A tiny bundled model makes everything runnable on
CPU with no network.
"""

from .backend import Backend, ModelLoadError, TokenAlignmentError
from .extract import BridgeJob, extract_span_embeddings
from .finetune import TrainResult, build_mask_example, finetune
from .score import score_marker_logprobs

__version__ = "0.1.0"
