import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import FIXTURES


def run_cli(*args, expect=0):
    result = subprocess.run(
        [sys.executable, "-m", "markerlab.cli", *args],
        capture_output=True, text=True,
    )
    assert result.returncode == expect, result.stderr
    return result


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("lang", ["en", "ja"])
def test_annotate_matches_golden(tmp_path, lang):
    run_cli(
        "annotate",
        "--corpus", str(FIXTURES / f"corpus_{lang}.jsonl"),
        "--lexicon", lang, "--language", lang,
        "--out-dir", str(tmp_path),
    )
    got = (tmp_path / "annotated.jsonl").read_bytes()
    want = (FIXTURES / f"golden_annotated_{lang}.jsonl").read_bytes()
    assert got == want


def test_annotate_rerun_byte_identical(tmp_path):
    args = (
        "annotate", "--corpus", str(FIXTURES / "corpus_en.jsonl"),
        "--lexicon", "en", "--language", "en",
    )
    run_cli(*args, "--out-dir", str(tmp_path / "a"))
    run_cli(*args, "--out-dir", str(tmp_path / "b"))
    for name in ("annotated.jsonl", "marker_stats.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_marker_stats_csv_shares_sum_to_one(tmp_path):
    run_cli(
        "annotate", "--corpus", str(FIXTURES / "corpus_en.jsonl"),
        "--lexicon", "en", "--language", "en", "--out-dir", str(tmp_path),
    )
    rows = read_csv(tmp_path / "marker_stats.csv")
    assert rows[0] == ["canonical", "count", "share"]
    assert abs(sum(float(r[2]) for r in rows[1:]) - 1.0) < 1e-9


def test_gen_data_mask_all_spans_masked(tmp_path):
    run_cli(
        "gen-data", "--task", "mask",
        "--corpus", str(FIXTURES / "corpus_en.jsonl"),
        "--lexicon", "en", "--language", "en", "--seed", "3",
        "--config", str(_policy_config(tmp_path, 1.0, 0.0, 0.0)),
        "--out-dir", str(tmp_path),
    )
    for line in (tmp_path / "mask.jsonl").read_text().splitlines():
        obj = json.loads(line)
        assert len(obj["input_tokens"]) == len(obj["labels"])
        for lo, hi in obj["spans"]:
            assert obj["input_tokens"][lo:hi] == ["[MASK]"] * (hi - lo)


def _policy_config(tmp_path, p_mask, p_random, p_keep):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "p_mask": p_mask, "p_random": p_random, "p_keep": p_keep,
    }))
    return cfg


def test_gen_data_mask_requires_seed(tmp_path):
    result = run_cli(
        "gen-data", "--task", "mask",
        "--corpus", str(FIXTURES / "corpus_en.jsonl"),
        "--lexicon", "en", "--language", "en",
        "--out-dir", str(tmp_path), expect=1,
    )
    err = json.loads(result.stderr.splitlines()[-1])
    assert "seed" in err["message"]


def test_gen_data_ttp_label_counts(tmp_path):
    run_cli(
        "gen-data", "--task", "ttp",
        "--corpus", str(FIXTURES / "corpus_en.jsonl"),
        "--lexicon", "en", "--language", "en", "--out-dir", str(tmp_path),
    )
    lines = (tmp_path / "ttp.jsonl").read_text().splitlines()
    assert len(lines) == 5
    corpus_rows = [json.loads(l) for l in (FIXTURES / "corpus_en.jsonl").read_text().splitlines()]
    by_dialogue = {}
    for row in corpus_rows:
        by_dialogue.setdefault(row["dialogue_id"], []).append(row["speaker"])
    for line, speakers in zip(lines, by_dialogue.values()):
        obj = json.loads(line)
        expected = 1 + sum(a != b for a, b in zip(speakers, speakers[1:]))
        assert len(obj["shift_after"]) == expected


def test_gen_data_ntp_round_trips_token_counts(tmp_path):
    run_cli(
        "gen-data", "--task", "ntp",
        "--corpus", str(FIXTURES / "corpus_en.jsonl"),
        "--lexicon", "en", "--language", "en", "--out-dir", str(tmp_path),
    )
    lines = (tmp_path / "ntp.jsonl").read_text().splitlines()
    assert len(lines) == 5
    assert all(json.loads(l)["tokens"][0] == "<s1>" for l in lines)


def test_cluster_blob_fixture_finds_three(tmp_path):
    run_cli(
        "cluster", "--embeddings", str(FIXTURES / "embeddings_blobs.jsonl"),
        "--seed", "11", "--out-dir", str(tmp_path),
    )
    rows = read_csv(tmp_path / "best_k.csv")
    header, body = rows[0], rows[1:]
    assert header == ["marker", "context", "fine_tuned", "space", "status", "n", "best_k", "best_sc"]
    assert len(body) == 6  # 3 markers x 2 spaces
    assert all(r[4] == "ok" and r[6] == "3" for r in body)
    dm = read_csv(tmp_path / "distance_ori.csv")
    assert dm[0] == ["marker", "oh", "uh", "yeah"]
    assert float(dm[1][1]) == 0.0
    assert (tmp_path / "silhouette.csv").exists()
    assert (tmp_path / "pca2d.csv").exists()
    assert (tmp_path / "distance_pca100.csv").exists()


def test_cluster_rerun_byte_identical(tmp_path):
    args = ("cluster", "--embeddings", str(FIXTURES / "embeddings_blobs.jsonl"), "--seed", "11")
    run_cli(*args, "--out-dir", str(tmp_path / "a"))
    run_cli(*args, "--out-dir", str(tmp_path / "b"))
    for name in ("silhouette.csv", "best_k.csv", "distance_ori.csv", "pca2d.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cluster_sparse_marker_warns_not_fails(tmp_path):
    emb = tmp_path / "emb.jsonl"
    with emb.open("w") as fh:
        fh.write(json.dumps({"k": 2, "model": "t", "fine_tuned": False}) + "\n")
        for i in range(10):
            fh.write(json.dumps({
                "canonical": "uh", "dialogue_id": "d", "turn_index": i,
                "context": "none", "matrix": [[float(i), float(i % 3)]],
            }) + "\n")
        fh.write(json.dumps({
            "canonical": "rare", "dialogue_id": "d", "turn_index": 0,
            "context": "none", "matrix": [[0.0, 0.0]],
        }) + "\n")
    result = run_cli("cluster", "--embeddings", str(emb), "--seed", "1",
                     "--out-dir", str(tmp_path), "--space", "ori")
    assert "rare" in result.stderr
    rows = read_csv(tmp_path / "best_k.csv")
    statuses = {r[0]: r[4] for r in rows[1:]}
    assert statuses == {"uh": "ok", "rare": "too_few_records"}


def test_eval_nlg_outputs(tmp_path):
    run_cli(
        "eval-nlg", "--generations", str(FIXTURES / "generations.jsonl"),
        "--lexicon", "en", "--out-dir", str(tmp_path),
    )
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert set(metrics) == {"diversity", "frequency", "weighted_perplexity", "bertscore_f1", "bleu"}
    assert metrics["diversity"] == 5
    assert 0.0 <= metrics["frequency"] <= 1.0
    assert metrics["weighted_perplexity"] >= 1.0
    rows = read_csv(tmp_path / "per_record.csv")
    assert len(rows) == 4


def test_export_2d(tmp_path):
    run_cli("export-2d", "--embeddings", str(FIXTURES / "embeddings_blobs.jsonl"),
            "--out-dir", str(tmp_path))
    rows = read_csv(tmp_path / "pca2d.csv")
    assert rows[0] == ["canonical", "dialogue_id", "turn_index", "context", "x", "y"]
    assert len(rows) == 1 + 135


def test_error_reported_as_json(tmp_path):
    result = run_cli("annotate", "--corpus", str(tmp_path / "missing.jsonl"),
                     "--lexicon", "en", "--language", "en",
                     "--out-dir", str(tmp_path), expect=1)
    err = json.loads(result.stderr.splitlines()[-1])
    assert err["error"] == "ValueError"
    assert "missing.jsonl" in err["message"]


def test_config_file_flags_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "corpus": str(FIXTURES / "corpus_en.jsonl"),
        "lexicon": "en",
        "language": "en",
        "out_dir": str(tmp_path / "from_config"),
    }))
    run_cli("annotate", "--config", str(cfg))
    assert (tmp_path / "from_config" / "annotated.jsonl").exists()
    run_cli("annotate", "--config", str(cfg), "--out-dir", str(tmp_path / "flag_wins"))
    assert (tmp_path / "flag_wins" / "annotated.jsonl").exists()


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"corpsu": "typo.jsonl"}))
    result = run_cli("annotate", "--config", str(cfg), expect=1)
    err = json.loads(result.stderr.splitlines()[-1])
    assert "corpsu" in err["message"]
