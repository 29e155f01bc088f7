import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from markerlab import (
    ContextSetting,
    EmbeddingSet,
    Provenance,
    SpanEmbeddingRecord,
    SpanKey,
    pca_fit,
    pca_reduce,
    pool_span,
    read_embeddings,
    standardize,
    write_embeddings,
)
from markerlab.errors import DimensionMismatch, MalformedRecord, TooFewRecords


def _set(vectors, context=ContextSetting.NO_CONTEXT, provenance=Provenance()):
    vectors = np.asarray(vectors, dtype=np.float64)
    keys = [SpanKey("uh", "d0", i, context) for i in range(len(vectors))]
    return EmbeddingSet(keys, vectors, provenance)


def test_pool_single_row_identity():
    row = np.array([[1.0, 2.0, 3.0]])
    assert np.array_equal(pool_span(row), row[0])


def test_pool_two_rows_mean():
    assert np.array_equal(pool_span(np.array([[1.0, 3.0], [3.0, 5.0]])), [2.0, 4.0])


def test_pool_matches_naive_loop():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(4, 8))
    naive = np.array([sum(m[q][k] for q in range(4)) / 4 for k in range(8)])
    assert np.abs(pool_span(m) - naive).max() < 1e-12


@settings(max_examples=30)
@given(arrays(np.float64, (5, 3), elements=st.floats(-100, 100)))
def test_pool_permutation_invariant(m):
    rng = np.random.default_rng(1)
    perm = rng.permutation(5)
    assert np.allclose(pool_span(m), pool_span(m[perm]), atol=1e-9)


def test_pool_explicit_weights():
    m = np.array([[0.0], [10.0]])
    assert pool_span(m, weights=[3.0, 1.0])[0] == pytest.approx(2.5)


def test_standardize_two_points():
    out = standardize(_set([[0.0], [2.0]]))
    assert np.allclose(out.vectors.ravel(), [-1.0, 1.0])


def test_standardize_constant_dimension_zeroed():
    out = standardize(_set([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    assert np.allclose(out.vectors[:, 1], 0.0)


def test_standardize_moments():
    rng = np.random.default_rng(2)
    out = standardize(_set(rng.normal(2.0, 3.0, size=(100, 16))))
    assert np.abs(out.vectors.mean(axis=0)).max() < 1e-9
    assert np.abs(out.vectors.std(axis=0) - 1.0).max() < 1e-9


def test_standardize_idempotent():
    rng = np.random.default_rng(3)
    once = standardize(_set(rng.normal(size=(40, 6))))
    twice = standardize(once)
    assert np.abs(twice.vectors - once.vectors).max() < 1e-9


def test_standardize_too_few():
    with pytest.raises(TooFewRecords):
        standardize(_set([[1.0, 2.0]]))


def test_pca_full_rank_is_isometry():
    rng = np.random.default_rng(4)
    es = _set(rng.normal(size=(30, 5)))
    out = pca_reduce(es, target_dim=100)
    d_in = np.linalg.norm(es.vectors[:, None] - es.vectors[None, :], axis=-1)
    d_out = np.linalg.norm(out.vectors[:, None] - out.vectors[None, :], axis=-1)
    assert np.abs(d_in - d_out).max() < 1e-9


def test_pca_collinear_points():
    es = _set([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    out = pca_reduce(es, target_dim=1)
    assert out.vectors.shape == (3, 1)
    total_in = es.vectors.var(axis=0).sum()
    assert out.vectors.var(axis=0).sum() == pytest.approx(total_in, rel=1e-12)
    mean, components, _ = pca_fit(es.vectors, 1)
    recon = out.vectors @ components.T + mean
    assert np.abs(recon - es.vectors).max() < 1e-9


def test_pca_variance_conservation_full_rank():
    rng = np.random.default_rng(5)
    es = _set(rng.normal(size=(50, 8)))
    out = pca_reduce(es, target_dim=8)
    assert out.vectors.var(axis=0).sum() == pytest.approx(
        es.vectors.var(axis=0).sum(), rel=1e-6
    )


def test_pca_dimension_clamped_by_records():
    es = _set(np.eye(4)[:3])  # 3 records in 4 dims
    out = pca_reduce(es, target_dim=100)
    assert out.dimension == 2  # n - 1


def test_pca_beats_random_projections():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(200, 50)) @ np.diag(np.linspace(3, 0.1, 50))
    es = _set(x)
    ours = pca_reduce(es, target_dim=10).vectors.var(axis=0).sum()
    centered = x - x.mean(axis=0)
    for _ in range(100):
        q, _ = np.linalg.qr(rng.normal(size=(50, 10)))
        assert (centered @ q).var(axis=0).sum() <= ours + 1e-9


def test_pca_sign_convention_deterministic():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(40, 6))
    _, c1, _ = pca_fit(x, 6)
    _, c2, _ = pca_fit(x.copy(), 6)
    assert np.array_equal(c1, c2)
    for j in range(c1.shape[1]):
        assert c1[np.argmax(np.abs(c1[:, j])), j] > 0


def _interchange_lines(n=5, k=4, context="one"):
    rng = np.random.default_rng(8)
    lines = [json.dumps({"k": k, "model": "toy", "fine_tuned": True})]
    for i in range(n):
        m = rng.normal(size=(2, k)).astype(np.float32).tolist()
        lines.append(json.dumps({
            "canonical": "uh", "dialogue_id": "d0", "turn_index": i,
            "context": context, "matrix": m,
        }))
    return lines


def _round_trip(es):
    buf = io.StringIO()
    write_embeddings(es, buf)
    buf.seek(0)
    return read_embeddings(buf)


def test_read_write_round_trip_single_row_matrices():
    # One-row matrices pool to themselves, so float32 file values survive intact.
    rng = np.random.default_rng(9)
    lines = [json.dumps({"k": 6, "model": "toy", "fine_tuned": False})]
    for i in range(50):
        row = rng.normal(size=6).astype(np.float32).tolist()
        lines.append(json.dumps({
            "canonical": "uh", "dialogue_id": "d0", "turn_index": i,
            "context": "none", "matrix": [row],
        }))
    es = read_embeddings(lines)
    assert _round_trip(es) == es


def test_write_read_fixpoint_after_quantization():
    # Pooled multi-row matrices may exceed float32 precision; one write
    # quantizes them and further round trips are exact.
    es = read_embeddings(_interchange_lines(50))
    once = _round_trip(es)
    assert _round_trip(once) == once
    assert np.abs(once.vectors - es.vectors).max() < 1e-6


def test_read_sets_provenance():
    es = read_embeddings(_interchange_lines())
    assert es.provenance == Provenance("toy", True, ContextSetting.ONE_CONTEXT)


def test_mixed_k_rejected():
    lines = _interchange_lines(k=16)
    bad = json.dumps({
        "canonical": "uh", "dialogue_id": "d0", "turn_index": 9,
        "context": "one", "matrix": [[0.0] * 8],
    })
    with pytest.raises(DimensionMismatch):
        read_embeddings(lines + [bad])


def test_empty_stream_empty_set():
    es = read_embeddings([])
    assert len(es) == 0
    with pytest.raises(TooFewRecords):
        standardize(es)
    with pytest.raises(TooFewRecords):
        pca_reduce(es)


def test_non_finite_matrix_rejected():
    with pytest.raises(MalformedRecord):
        SpanEmbeddingRecord("uh", "d", 0, ContextSetting.NO_CONTEXT,
                            np.array([[np.nan, 1.0]]))


def test_malformed_json_line_reported():
    lines = _interchange_lines(2)
    lines.insert(2, "{broken")
    with pytest.raises(MalformedRecord, match="line 3"):
        read_embeddings(lines)


def test_subset_filters_by_canonical():
    keys = [SpanKey(c, "d", i, ContextSetting.NO_CONTEXT)
            for i, c in enumerate(["uh", "yeah", "uh"])]
    es = EmbeddingSet(keys, np.arange(6.0).reshape(3, 2), Provenance())
    sub = es.subset("uh")
    assert len(sub) == 2
    assert np.array_equal(sub.vectors, [[0.0, 1.0], [4.0, 5.0]])
