"""Bridge command line: extract, score, finetune.

    markerlab-bridge extract  --model tiny --annotated ann.jsonl --context one --output spans.jsonl
    markerlab-bridge score    --model tiny --generations gens.jsonl --output scored.jsonl
    markerlab-bridge finetune --model tiny --task ntp --dataset ntp.jsonl --output ckpt/ --steps 50

`--model` is "tiny" (the bundled CPU model), a local checkpoint directory, or
a Hugging Face model id (the latter needs the model available locally or
network access). `--checkpoint` points extraction/scoring at a fine-tuned
directory produced by the finetune command.
"""

from __future__ import annotations

import argparse
import sys

from .backend import Backend, ModelLoadError, TokenAlignmentError
from .extract import BridgeJob, extract_span_embeddings
from .finetune import TASKS, finetune
from .score import score_marker_logprobs


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--model", default="tiny")
    shared.add_argument("--checkpoint")
    shared.add_argument("--device")

    parser = argparse.ArgumentParser(prog="markerlab-bridge",
                                     description="Transformer bridge for markerlab file formats")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ext = sub.add_parser("extract", parents=[shared],
                           help="write span embedding matrices for an annotated corpus")
    p_ext.add_argument("--annotated", required=True)
    p_ext.add_argument("--context", choices=["none", "one", "full"], default="one")
    p_ext.add_argument("--output", required=True)

    p_score = sub.add_parser("score", parents=[shared],
                             help="augment generation records with marker log-probabilities")
    p_score.add_argument("--generations", required=True)
    p_score.add_argument("--output", required=True)

    p_ft = sub.add_parser("finetune", parents=[shared],
                          help="train on a mask/ntp/ttp dataset and save a checkpoint")
    p_ft.add_argument("--task", choices=list(TASKS), required=True)
    p_ft.add_argument("--dataset", required=True)
    p_ft.add_argument("--output", required=True)
    p_ft.add_argument("--steps", type=int, default=100)
    p_ft.add_argument("--batch-size", type=int, default=3)
    p_ft.add_argument("--learning-rate", type=float, default=1e-4)
    p_ft.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            job = BridgeJob(args.model, args.checkpoint, args.context,
                            args.annotated, args.output, args.device)
            path = extract_span_embeddings(job)
            print(f"wrote {path}", file=sys.stderr)
        elif args.command == "score":
            job = BridgeJob(args.model, args.checkpoint, device=args.device)
            path = score_marker_logprobs(job, args.generations, args.output)
            print(f"wrote {path}", file=sys.stderr)
        elif args.command == "finetune":
            backend = Backend.load(args.model, args.checkpoint, args.device)
            result = finetune(backend, args.task, args.dataset, args.output,
                              steps=args.steps, batch_size=args.batch_size,
                              learning_rate=args.learning_rate, seed=args.seed)
            print(f"loss {result.losses[0]:.4f} -> {result.losses[-1]:.4f} "
                  f"over {len(result.losses)} steps; checkpoint at {result.checkpoint}",
                  file=sys.stderr)
        return 0
    except (ModelLoadError, TokenAlignmentError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
