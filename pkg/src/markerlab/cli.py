"""Command-line surface: annotate, gen-data, cluster, eval-nlg, export-2d.

Configuration comes from an optional JSON file (--config) whose keys mirror
RunConfig; explicit command-line flags win over the file. Every command is
deterministic for fixed inputs and seed, writes data only to files (stdout
stays clean), keeps diagnostics on stderr, and reports failures as one
machine-readable JSON object on stderr with a nonzero exit code.

CSV outputs follow RFC 4180 (CRLF line endings, minimal quoting); JSON
outputs use a fixed key order so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import cluster as cl
from . import datasetgen as dg
from . import embeddings as emb
from . import nlgeval as nlg
from .corpus import Language, parse_corpus
from .errors import MarkerlabError, TooFewPoints, TooFewRecords
from .lexicon import (
    AnnotatedCorpus,
    MarkerLexicon,
    annotate_corpus,
    find_spans_text,
    load_builtin_lexicon,
    load_lexicon,
    marker_stats,
)
from .rng import derive_seed

SPACES = ("ori", "pca100")


@dataclass(frozen=True)
class RunConfig:
    corpus: str | None = None
    lexicon: str | None = None        # builtin name ("en"/"ja") or a file path
    language: str | None = None
    context: str = "one"
    seed: int | None = None
    p_mask: float = 0.8
    p_random: float = 0.1
    p_keep: float = 0.1
    mask_token: str = "[MASK]"
    random_pool_size: int = 1000
    k_min: int = 2
    k_max: int = 15
    pca_target: int = 100
    n_init: int = 10
    nfkc: bool = False
    out_dir: str = "."
    space: str = "both"

    @classmethod
    def from_sources(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        base: dict = {}
        if config_path:
            with open(config_path, "r", encoding="utf-8") as fh:
                base = json.load(fh)
            unknown = set(base) - {f.name for f in fields(cls)}
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged = {**base, **{k: v for k, v in overrides.items() if v is not None}}
        return cls(**merged)


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            raise ValueError(f"missing required setting: {name}")
    for name in names:
        if name == "corpus" and not Path(cfg.corpus).is_file():
            raise ValueError(f"corpus file not found: {cfg.corpus}")


def _load_lexicon(cfg: RunConfig) -> MarkerLexicon:
    if cfg.lexicon in ("en", "ja"):
        return load_builtin_lexicon(cfg.lexicon)
    path = Path(cfg.lexicon)
    if not path.is_file():
        raise ValueError(f"lexicon is neither a builtin name nor a file: {cfg.lexicon}")
    with path.open("rb") as fh:
        return load_lexicon(fh, nfkc=cfg.nfkc)


def _load_annotated(cfg: RunConfig) -> tuple[AnnotatedCorpus, MarkerLexicon]:
    _require(cfg, "corpus", "lexicon", "language")
    lex = _load_lexicon(cfg)
    with open(cfg.corpus, "rb") as fh:
        dialogues = parse_corpus(fh, Language(cfg.language))
    return annotate_corpus(dialogues, lex), lex


def _jdump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _out_path(cfg: RunConfig, name: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def annotated_lines(annotated: AnnotatedCorpus, language: Language) -> list[str]:
    """Serialized annotate output: a header line, then one line per utterance."""
    lines = [_jdump({"language": language.value})]
    for d in annotated.dialogues:
        for u in d.utterances:
            spans = annotated.spans_for(u.dialogue_id, u.turn_index)
            lines.append(_jdump({
                "dialogue_id": u.dialogue_id,
                "turn_index": u.turn_index,
                "speaker": u.speaker.value,
                "text": u.text,
                "tagged": annotated.tagged[(u.dialogue_id, u.turn_index)],
                "spans": [
                    {
                        "start": s.char_start,
                        "end": s.char_end,
                        "canonical": s.canonical,
                        "variant": s.matched_variant,
                    }
                    for s in spans
                ],
            }))
    return lines


def cmd_annotate(cfg: RunConfig) -> int:
    annotated, _ = _load_annotated(cfg)
    out = _out_path(cfg, "annotated.jsonl")
    out.write_text("\n".join(annotated_lines(annotated, Language(cfg.language))) + "\n", encoding="utf-8")
    stats = marker_stats(annotated)
    _write_csv(
        _out_path(cfg, "marker_stats.csv"),
        ["canonical", "count", "share"],
        [[s.canonical, s.count, repr(s.share)] for s in stats],
    )
    n_mono = sum(d.is_monologue for d in annotated.dialogues)
    print(
        f"annotated {len(annotated.dialogues)} dialogues "
        f"({n_mono} single-speaker), {len(annotated.spans)} marker spans",
        file=sys.stderr,
    )
    return 0


def cmd_gen_data(cfg: RunConfig, task: str) -> int:
    annotated, _ = _load_annotated(cfg)
    out = _out_path(cfg, f"{task}.jsonl")
    lines: list[str] = []
    if task == "mask":
        _require(cfg, "seed")
        pool = dg.default_random_pool(annotated, cfg.random_pool_size)
        policy = dg.MaskingPolicy(cfg.p_mask, cfg.p_random, cfg.p_keep, cfg.mask_token, pool)
        examples = dg.build_masking_dataset(annotated, policy, cfg.seed)
        for ex in examples:
            lines.append(_jdump({
                "input_tokens": list(ex.input_tokens),
                "labels": list(ex.label_tokens),
                "spans": [list(r) for r in ex.span_positions],
            }))
        n_spans = sum(len(ex.span_positions) for ex in examples)
        summary = f"{len(examples)} masked sequences, {n_spans} spans"
    elif task == "ntp":
        seqs = dg.build_ntp_dataset(annotated)
        for seq in seqs:
            lines.append(_jdump({"tokens": list(seq.tokens)}))
        summary = f"{len(seqs)} sequences, {sum(len(s.tokens) for s in seqs)} tokens"
    elif task == "ttp":
        labeled = dg.build_ttp_dataset(annotated)
        for seq in labeled:
            lines.append(_jdump({
                "tokens": list(seq.tokens),
                "shift_after": sorted(seq.shift_after),
            }))
        summary = f"{len(labeled)} sequences, {sum(len(s.shift_after) for s in labeled)} shifts"
    else:
        raise ValueError(f"unknown task {task!r}")
    out.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    print(f"{task}: {summary} -> {out}", file=sys.stderr)
    return 0


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def cmd_cluster(cfg: RunConfig, embeddings_path: str) -> int:
    _require(cfg, "seed")
    if not Path(embeddings_path).is_file():
        raise ValueError(f"embeddings file not found: {embeddings_path}")
    with open(embeddings_path, "rb") as fh:
        full = emb.read_embeddings(fh)
    if len(full) < 2:
        raise TooFewRecords("clustering needs at least two embedding records")
    spaces = SPACES if cfg.space == "both" else (cfg.space,)
    standardized = emb.standardize(full)
    by_space = {}
    for space in spaces:
        if space == "ori":
            by_space[space] = standardized
        elif space == "pca100":
            by_space[space] = emb.pca_reduce(standardized, cfg.pca_target)
        else:
            raise ValueError(f"unknown space {space!r}")
    context = full.provenance.context.value if full.provenance.context else "mixed"
    fine_tuned = full.provenance.fine_tuned

    markers = sorted({key.canonical for key in full.keys})
    sil_rows: list[list] = []
    best_rows: list[list] = []
    reps: dict[str, dict[str, np.ndarray]] = {space: {} for space in spaces}
    for space in spaces:
        es = by_space[space]
        for marker in markers:
            sub = es.subset(marker)
            try:
                report = cl.sweep_k(
                    sub.vectors, cfg.k_min, cfg.k_max,
                    seed=derive_seed(cfg.seed, f"{space}:{marker}"),
                    n_init=cfg.n_init,
                )
            except TooFewPoints:
                best_rows.append([marker, context, _fmt(fine_tuned), space,
                                  "too_few_records", len(sub), "", ""])
                print(f"warning: marker {marker!r} has {len(sub)} records in {space}; "
                      f"needs {cfg.k_min + 1}", file=sys.stderr)
                continue
            for k in sorted(report.per_k):
                sil_rows.append([marker, context, _fmt(fine_tuned), space, k, repr(report.per_k[k])])
            best_rows.append([marker, context, _fmt(fine_tuned), space, "ok",
                              len(sub), report.best_k, repr(report.best_sc)])
            reps[space][marker] = cl.marker_representative(report.best_clustering)

    _write_csv(_out_path(cfg, "silhouette.csv"),
               ["marker", "context", "fine_tuned", "space", "k", "silhouette"], sil_rows)
    _write_csv(_out_path(cfg, "best_k.csv"),
               ["marker", "context", "fine_tuned", "space", "status", "n", "best_k", "best_sc"],
               best_rows)
    for space in spaces:
        if reps[space]:
            dm = cl.distance_matrix(reps[space])
            rows = [[label] + [repr(float(v)) for v in dm.values[i]]
                    for i, label in enumerate(dm.labels)]
            _write_csv(_out_path(cfg, f"distance_{space}.csv"),
                       ["marker"] + list(dm.labels), rows)
    _export_2d(cfg, standardized)
    print(f"clustered {len(markers)} markers over spaces {', '.join(spaces)}", file=sys.stderr)
    return 0


def _export_2d(cfg: RunConfig, standardized: emb.EmbeddingSet) -> None:
    two_d = emb.pca_reduce(standardized, 2)
    rows = [
        [key.canonical, key.dialogue_id, key.turn_index, key.context.value,
         repr(float(vec[0])), repr(float(vec[1])) if two_d.dimension > 1 else repr(0.0)]
        for key, vec in zip(two_d.keys, two_d.vectors)
    ]
    _write_csv(_out_path(cfg, "pca2d.csv"),
               ["canonical", "dialogue_id", "turn_index", "context", "x", "y"], rows)


def cmd_export_2d(cfg: RunConfig, embeddings_path: str) -> int:
    if not Path(embeddings_path).is_file():
        raise ValueError(f"embeddings file not found: {embeddings_path}")
    with open(embeddings_path, "rb") as fh:
        full = emb.read_embeddings(fh)
    if len(full) < 2:
        raise TooFewRecords("2-D export needs at least two embedding records")
    _export_2d(cfg, emb.standardize(full))
    print(f"exported {len(full)} points to pca2d.csv", file=sys.stderr)
    return 0


def cmd_eval_nlg(cfg: RunConfig, generations_path: str) -> int:
    _require(cfg, "lexicon")
    lex = _load_lexicon(cfg)
    if not Path(generations_path).is_file():
        raise ValueError(f"generations file not found: {generations_path}")
    with open(generations_path, "rb") as fh:
        records = nlg.read_generations(fh)
    report = nlg.evaluate(records, lex)
    metrics = {
        "diversity": report.diversity,
        "frequency": report.frequency,
        "weighted_perplexity": report.weighted_perplexity,
        "bertscore_f1": report.bertscore_f1,
        "bleu": report.bleu,
    }
    _out_path(cfg, "metrics.json").write_text(
        json.dumps(metrics, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    rows = []
    for i, record in enumerate(records):
        spans = find_spans_text(record.generated, lex)
        lps = [lp.logprob for lp in (record.marker_logprobs or ())]
        try:
            record_bleu = nlg.bleu([record])
        except MarkerlabError:
            record_bleu = None
        f1 = (
            nlg.bertscore_f1([record])
            if record.cand_vecs is not None and record.ref_vecs is not None
            else None
        )
        rows.append([
            i,
            record.language.value,
            len(spans),
            len({c for _, _, c, _ in spans}),
            _fmt(sum(lps) / len(lps) if lps else None),
            _fmt(record_bleu),
            _fmt(f1),
        ])
    _write_csv(_out_path(cfg, "per_record.csv"),
               ["index", "language", "n_markers", "distinct_markers",
                "mean_marker_logprob", "bleu", "bertscore_f1"], rows)
    print(f"evaluated {len(records)} generation records", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file with RunConfig keys")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--out-dir")
    shared.add_argument("--language", choices=["en", "ja"])
    shared.add_argument("--context", choices=["none", "one", "full"])
    shared.add_argument("--space", choices=["ori", "pca100", "both"])
    shared.add_argument("--corpus")
    shared.add_argument("--lexicon", help="builtin name (en|ja) or lexicon file path")
    shared.add_argument("--k-min", type=int, dest="k_min")
    shared.add_argument("--k-max", type=int, dest="k_max")
    shared.add_argument("--pca-target", type=int, dest="pca_target")
    shared.add_argument("--n-init", type=int, dest="n_init",
                        help="k-means restarts per k (default 10)")
    shared.add_argument("--nfkc", action="store_const", const=True, default=None,
                        help="apply Unicode NFKC to lexicon variants at load")

    parser = argparse.ArgumentParser(
        prog="markerlab",
        description="Backchannel/filler datasets, embedding clustering, and generation metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("annotate", parents=[shared],
                   help="locate markers; write annotated.jsonl and marker_stats.csv")
    p_gen = sub.add_parser("gen-data", parents=[shared],
                           help="write a mask/ntp/ttp fine-tuning dataset")
    p_gen.add_argument("--task", choices=["mask", "ntp", "ttp"], required=True)
    p_cl = sub.add_parser("cluster", parents=[shared],
                          help="k sweeps, silhouettes, distance matrices from an embeddings file")
    p_cl.add_argument("--embeddings", required=True)
    p_ev = sub.add_parser("eval-nlg", parents=[shared],
                          help="generation metrics from a generations file")
    p_ev.add_argument("--generations", required=True)
    p_2d = sub.add_parser("export-2d", parents=[shared],
                          help="2-D principal-component export of an embeddings file")
    p_2d.add_argument("--embeddings", required=True)
    return parser


_CONFIG_KEYS = (
    "corpus", "lexicon", "language", "context", "seed",
    "k_min", "k_max", "pca_target", "n_init", "nfkc", "out_dir", "space",
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    try:
        cfg = RunConfig.from_sources(args.config, overrides)
        if args.command == "annotate":
            return cmd_annotate(cfg)
        if args.command == "gen-data":
            return cmd_gen_data(cfg, args.task)
        if args.command == "cluster":
            return cmd_cluster(cfg, args.embeddings)
        if args.command == "eval-nlg":
            return cmd_eval_nlg(cfg, args.generations)
        if args.command == "export-2d":
            return cmd_export_2d(cfg, args.embeddings)
        raise ValueError(f"unknown command {args.command!r}")
    except (MarkerlabError, ValueError, OSError) as exc:
        print(_jdump({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
