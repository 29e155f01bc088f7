"""k-means clustering, silhouette scoring, k sweeps, and marker geometry.

The clustering stack is written against plain numpy arrays so it can be
oracle-tested in isolation. All randomness (k-means++ seeding, per-k
substreams) flows through the portable SplitMix64 generator; identical
(points, seed) inputs give identical results on any platform. Distances are
Euclidean throughout and are computed from explicit coordinate differences,
trading a little speed for accuracy near duplicate points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, KTooLarge, SingleCluster, TooFewPoints
from .rng import SplitMix64, derive_seed

_BLOCK_TARGET_FLOATS = 8_000_000  # ~64 MB of float64 scratch per block


@dataclass(frozen=True)
class Clustering:
    k: int
    assignments: np.ndarray  # (n,) int cluster ids, every id in [0, k) used
    centroids: np.ndarray    # (k, d)
    inertia: float
    inertia_history: tuple[float, ...]  # per-iteration, non-increasing


@dataclass(frozen=True)
class SilhouetteReport:
    per_k: dict[int, float]
    best_k: int
    best_sc: float
    best_clustering: Clustering


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple[str, ...]
    values: np.ndarray  # symmetric, zero diagonal


def _row_blocks(n: int, width: int) -> list[tuple[int, int]]:
    step = max(1, _BLOCK_TARGET_FLOATS // max(1, width))
    return [(i, min(i + step, n)) for i in range(0, n, step)]


def pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of a and rows of b, blockwise."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]))
    for lo, hi in _row_blocks(a.shape[0], b.shape[0] * a.shape[1]):
        diff = a[lo:hi, None, :] - b[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _kmeanspp_init(points: np.ndarray, k: int, rng: SplitMix64) -> np.ndarray:
    """Greedy k-means++: each new center is the best of a few D^2-weighted draws."""
    n = points.shape[0]
    n_trials = 2 + int(math.log(k)) if k > 1 else 1
    centers = [rng.next_below(n)]
    d2 = pairwise_sq_dists(points, points[centers[-1]:centers[-1] + 1])[:, 0]
    while len(centers) < k:
        total = d2.sum()
        if total <= 0:
            centers.append(rng.next_below(n))
            continue
        cum = np.cumsum(d2)
        best: tuple[int, float, np.ndarray] | None = None
        for _ in range(n_trials):
            r = rng.next_float() * total
            idx = int(min(np.searchsorted(cum, r, side="right"), n - 1))
            nd2 = np.minimum(d2, pairwise_sq_dists(points, points[idx:idx + 1])[:, 0])
            pot = float(nd2.sum())
            if best is None or pot < best[1]:
                best = (idx, pot, nd2)
        centers.append(best[0])
        d2 = best[2]
    return points[centers].copy()


def _fix_empty_clusters(
    points: np.ndarray, assign: np.ndarray, centroids: np.ndarray, d2min: np.ndarray
) -> None:
    """Re-seed each empty cluster from the point farthest from its centroid.

    Points that are their cluster's only member are not eligible donors, so a
    transfer can never empty another cluster.
    """
    k = centroids.shape[0]
    used = np.bincount(assign, minlength=k)
    for c in range(k):
        if used[c] > 0:
            continue
        eligible = np.where(used[assign] > 1, d2min, -np.inf)
        far = int(np.argmax(eligible))
        centroids[c] = points[far]
        used[assign[far]] -= 1
        assign[far] = c
        used[c] = 1
        d2min[far] = 0.0


def _lloyd(
    points: np.ndarray, init_centroids: np.ndarray, max_iter: int, tol: float
) -> Clustering:
    n, k = points.shape[0], init_centroids.shape[0]
    centroids = init_centroids.copy()
    history: list[float] = []

    def step() -> np.ndarray:
        d2 = pairwise_sq_dists(points, centroids)
        assign = np.argmin(d2, axis=1)
        d2min = d2[np.arange(n), assign]
        _fix_empty_clusters(points, assign, centroids, d2min)
        inertia = float(d2min.sum())
        if history and inertia > history[-1] + 1e-9 * max(1.0, history[-1]):
            raise AssertionError("k-means inertia increased between iterations")
        history.append(inertia)
        return assign

    assign = step()
    for _ in range(max_iter):
        new_centroids = np.stack([points[assign == c].mean(axis=0) for c in range(k)])
        movement = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        assign = step()
        if movement < tol:
            break
    return Clustering(k, assign, centroids, history[-1], tuple(history))


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-6,
    n_init: int = 10,
) -> Clustering:
    """Lloyd's algorithm from seeded greedy k-means++ initialization.

    Runs n_init independent restarts on substreams of the seed and keeps the
    lowest-inertia result (the first one on exact ties), so the outcome is
    deterministic for a given (points, k, seed, n_init). Each restart iterates
    until the largest centroid movement drops below tol or max_iter is
    reached, then recomputes assignments once against the final centroids so
    the reported inertia is exactly consistent with them. Inertia is checked
    to be non-increasing at every iteration.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds n={n}")
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    best: Clustering | None = None
    for restart in range(n_init):
        rng = SplitMix64(derive_seed(seed, f"init={restart}"))
        result = _lloyd(points, _kmeanspp_init(points, k, rng), max_iter, tol)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def silhouette_score(points: np.ndarray, assignments: np.ndarray) -> float:
    """Mean silhouette coefficient under Euclidean distance.

    Per point, a is the mean distance to its own cluster (excluding itself)
    and b the smallest mean distance to any other cluster; the coefficient is
    (b - a) / max(a, b), with 0 for singleton clusters and for the 0/0 case of
    coincident points. Cluster relabeling and rigid motions of the data leave
    the score unchanged.
    """
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    n = points.shape[0]
    labels, assign = np.unique(assignments, return_inverse=True)
    k = len(labels)
    if k < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    counts = np.bincount(assign, minlength=k).astype(np.float64)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), assign] = 1.0

    cluster_dist_sums = np.empty((n, k))
    for lo, hi in _row_blocks(n, n * points.shape[1]):
        diff = points[lo:hi, None, :] - points[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        cluster_dist_sums[lo:hi] = dist @ onehot

    own = counts[assign]
    s = np.zeros(n)
    own_sums = cluster_dist_sums[np.arange(n), assign]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = own_sums / (own - 1.0)
    other = np.where(
        np.arange(k)[None, :] == assign[:, None], np.inf,
        cluster_dist_sums / counts[None, :],
    )
    b = other.min(axis=1)
    multi = own > 1
    denom = np.maximum(a[multi], b[multi])
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(denom > 0, (b[multi] - a[multi]) / denom, 0.0)
    s[multi] = vals
    return float(s.mean())


def sweep_k(
    points: np.ndarray, k_min: int = 2, k_max: int = 15, seed: int = 0,
    n_init: int = 10,
) -> SilhouetteReport:
    """Silhouette over k in [k_min, min(k_max, n-1)]; best k wins, ties go low."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < k_min + 1:
        raise TooFewPoints(f"need at least k_min+1={k_min + 1} points, got {n}")
    per_k: dict[int, float] = {}
    clusterings: dict[int, Clustering] = {}
    for k in range(k_min, min(k_max, n - 1) + 1):
        clustering = kmeans(points, k, derive_seed(seed, f"k={k}"), n_init=n_init)
        clusterings[k] = clustering
        per_k[k] = silhouette_score(points, clustering.assignments)
    best_k = min(per_k, key=lambda k: (-per_k[k], k))
    return SilhouetteReport(per_k, best_k, per_k[best_k], clusterings[best_k])


def marker_representative(clustering: Clustering) -> np.ndarray:
    """Unweighted mean of the cluster centroids."""
    return clustering.centroids.mean(axis=0)


def distance_matrix(representatives: dict[str, np.ndarray]) -> DistanceMatrix:
    """Euclidean distances between representatives, labels in input order."""
    labels = tuple(representatives)
    vecs = [np.asarray(representatives[name], dtype=np.float64) for name in labels]
    dims = {v.shape for v in vecs}
    if len(dims) > 1:
        raise DimensionMismatch(f"representatives have mixed shapes: {sorted(dims)}")
    m = len(labels)
    values = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = float(np.sqrt(((vecs[i] - vecs[j]) ** 2).sum()))
            values[i, j] = values[j, i] = d
    return DistanceMatrix(labels, values)
