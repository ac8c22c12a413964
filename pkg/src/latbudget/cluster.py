"""K-means over importance rows, explanatory attribution and biplot coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClusterResult:
    """Lloyd clustering of J points in R^I.

    ``assignments`` holds cluster ids 1..K (clusters numbered by first
    appearance in row order). ``wcss_trace`` is the within-cluster sum of
    squares after every centroid update.
    """

    assignments: np.ndarray
    centroids: np.ndarray
    wcss: float
    iterations: int
    wcss_trace: np.ndarray
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()

    @property
    def K(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class BiplotCoords:
    row_points: np.ndarray
    col_points: np.ndarray
    explained: np.ndarray
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()


def _wcss(points, labels, centroids):
    return float(np.sum((points - centroids[labels]) ** 2))


def _centroids(points, labels, K):
    C = np.zeros((K, points.shape[1]))
    for k in range(K):
        C[k] = points[labels == k].mean(axis=0)
    return C


def _repair_empty(points, labels, K):
    """Move the worst-fitting point of a multi-member cluster into each empty one."""
    labels = labels.copy()
    while True:
        sizes = np.bincount(labels, minlength=K)
        empty = np.flatnonzero(sizes == 0)
        if not len(empty):
            return labels
        present = np.flatnonzero(sizes > 0)
        C = np.zeros((K, points.shape[1]))
        for k in present:
            C[k] = points[labels == k].mean(axis=0)
        dist = np.sum((points - C[labels]) ** 2, axis=1)
        dist[sizes[labels] < 2] = -1.0
        labels[int(np.argmax(dist))] = empty[0]


def _lloyd(points, K, rng, max_iter):
    labels = _repair_empty(points, rng.integers(0, K, size=len(points)), K)
    C = _centroids(points, labels, K)
    trace = [_wcss(points, labels, C)]
    it = 0
    while it < max_iter:
        it += 1
        d = np.sum((points[:, None, :] - C[None, :, :]) ** 2, axis=2)
        new = _repair_empty(points, np.argmin(d, axis=1), K)
        if np.array_equal(new, labels):
            break
        labels = new
        C = _centroids(points, labels, K)
        trace.append(_wcss(points, labels, C))
    return labels, C, it, trace


def kmeans(points, K, seed=1, max_iter=100, n_init=1, row_labels=(), col_labels=()):
    """Lloyd's algorithm from a seeded random initial assignment.

    ``points`` is the J x I importance matrix (or an ``ImportanceTable``).
    With ``n_init > 1`` the run with the lowest within-cluster SS wins,
    earliest run on ties.
    """
    if hasattr(points, "values") and hasattr(points, "row_labels"):
        row_labels, col_labels = points.row_labels, points.col_labels
        points = points.values
    X = np.asarray(points, dtype=float)
    J = X.shape[0]
    if not 1 <= K <= J:
        raise ValueError(f"K={K} outside 1..{J}")
    if n_init < 1:
        raise ValueError("n_init must be at least 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(X, K, rng, max_iter)
        if best is None or run[3][-1] < best[3][-1]:
            best = run
    labels, C, iters, trace = best
    # renumber clusters by first appearance
    order = list(dict.fromkeys(labels.tolist()))
    remap = np.empty(K, dtype=int)
    remap[order] = np.arange(K)
    return ClusterResult(remap[labels] + 1, C[order], _wcss(X, remap[labels], C[order]),
                         iters, np.array(trace), tuple(row_labels), tuple(col_labels))


def attribute_explanatory(result: ClusterResult) -> np.ndarray:
    """Cluster id (1..K) whose centroid is largest at each explanatory level."""
    return np.argmax(result.centroids, axis=0) + 1


def _fix_signs(U, V):
    for k in range(U.shape[1]):
        if U[np.argmax(np.abs(U[:, k])), k] < 0:
            U[:, k] = -U[:, k]
            V[:, k] = -V[:, k]
    return U, V


def biplot(t) -> BiplotCoords:
    """Rank-2 SVD of the column-centred J x I table.

    Row points are ``U * s``, column points ``V``; each singular pair is
    signed so the largest-magnitude entry of its left vector is positive.
    """
    values = np.asarray(getattr(t, "values", t), dtype=float)
    J, I = values.shape
    if J < 2 or I < 2:
        raise ValueError("biplot needs at least a 2 x 2 table")
    C = values - values.mean(axis=0)
    U, s, Vt = np.linalg.svd(C, full_matrices=False)
    total = float(np.sum(s ** 2))
    if total <= 1e-300 or s[0] <= 1e-12 * max(1.0, np.abs(values).max()):
        raise ValueError("table has rank 0 after centring; no biplot")
    U, V = _fix_signs(U[:, :2].copy(), Vt[:2].T.copy())
    rows = tuple(getattr(t, "row_labels", ())) or tuple(str(j + 1) for j in range(J))
    cols = tuple(getattr(t, "col_labels", ())) or tuple(str(i + 1) for i in range(I))
    return BiplotCoords(U * s[:2], V, s[:2] ** 2 / total, rows, cols)
