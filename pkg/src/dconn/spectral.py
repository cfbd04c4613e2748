"""Normalized-cut spectral clustering of a representative graph.

Pipeline: affinity -> symmetric normalized Laplacian -> leading eigenvectors
(fixed k, or chosen by Davies-Bouldin separation) -> row normalization ->
k-means -> labels pushed from representatives to the points they quantize.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .graph import ConnGraph
from .vq import BmuAssignment, Codebook, kmeans, squared_distances

__all__ = [
    "Laplacian",
    "SpectralEmbedding",
    "ClusterResult",
    "SpectralError",
    "build_laplacian",
    "embed",
    "davies_bouldin_1d",
    "select_k_auto",
    "cluster_embedding",
    "generalize_labels",
    "spectral_cluster",
]


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class Laplacian:
    """L_sym on the non-isolated vertices; ``kept[i]`` is the original index of row i."""

    matrix: np.ndarray
    kept: np.ndarray
    m: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def spectrum(self):
        """Eigenvalues (ascending) and eigenvectors with a deterministic sign."""
        vals, vecs = np.linalg.eigh(self.matrix)
        idx = np.argmax(np.abs(vecs), axis=0)
        signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
        signs[signs == 0] = 1.0
        return vals, vecs * signs


@dataclass(frozen=True)
class SpectralEmbedding:
    coords: np.ndarray
    eigenvalues: np.ndarray
    row_normalized: bool = True
    columns: tuple = ()


@dataclass
class ClusterResult:
    rep_labels: np.ndarray
    point_labels: np.ndarray
    k_used: int
    eigen_report: Optional[dict] = None
    seeds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rep_labels": [int(v) for v in self.rep_labels],
            "point_labels": [int(v) for v in self.point_labels],
            "k_used": int(self.k_used),
            "eigen_report": self.eigen_report,
            "seeds": self.seeds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_laplacian(g) -> Laplacian:
    """I - D^-1/2 A D^-1/2 over the vertices with nonzero degree.

    Weights are divided by their maximum first; the result is mathematically
    unchanged and integer graphs scaled by an integer give bit-identical
    matrices.
    """
    a = g.weights if isinstance(g, ConnGraph) else np.asarray(g)
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SpectralError(f"affinity must be square, got shape {a.shape}")
    if not np.allclose(a, a.T) or np.any(np.diag(a) != 0) or np.any(a < 0):
        raise SpectralError("affinity must be symmetric, non-negative with a zero diagonal")
    deg = a.sum(axis=1)
    kept = np.flatnonzero(deg > 0)
    if kept.size == 0:
        raise SpectralError("every vertex is isolated; the graph has no edges")
    sub = a[np.ix_(kept, kept)]
    sub = sub / sub.max()
    inv_sqrt = 1.0 / np.sqrt(sub.sum(axis=1))
    lap = np.eye(kept.size) - inv_sqrt[:, None] * sub * inv_sqrt[None, :]
    lap = (lap + lap.T) / 2
    return Laplacian(lap, kept, a.shape[0])


def _row_normalize(x):
    norms = np.linalg.norm(x, axis=1)
    out = x.copy()
    nz = norms > 0
    out[nz] /= norms[nz, None]
    return out


def embed(lap: Laplacian, k: Optional[int] = None, columns: Optional[Sequence[int]] = None, normalize: bool = True) -> SpectralEmbedding:
    """Rows of the eigenvectors for the ``k`` smallest eigenvalues.

    ``columns`` selects specific eigenvectors (by ascending eigenvalue rank)
    instead, as produced by :func:`select_k_auto`.
    """
    if columns is None:
        if k is None or not 1 <= k <= lap.size:
            raise SpectralError(f"k must be in [1, {lap.size}], got {k}")
        columns = range(k)
    columns = tuple(int(c) for c in columns)
    if not columns or min(columns) < 0 or max(columns) >= lap.size:
        raise SpectralError(f"eigenvector indices must lie in [0, {lap.size})")
    vals, vecs = lap.spectrum()
    x = vecs[:, list(columns)]
    if normalize:
        x = _row_normalize(x)
    return SpectralEmbedding(x, vals[list(columns)], normalize, columns)


def two_means_1d(values: np.ndarray):
    """Optimal 2-means split of a 1-d sample (exhaustive over sorted cut points).

    Returns a boolean mask of the upper group, or None if all values coincide.
    """
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    s = v[order]
    n = len(s)
    if n < 2 or s[-1] - s[0] <= 0:
        return None
    csum = np.cumsum(s)
    csq = np.cumsum(s * s)
    i = np.arange(1, n)
    left_sse = csq[i - 1] - csum[i - 1] ** 2 / i
    right_sum = csum[-1] - csum[i - 1]
    right_sse = (csq[-1] - csq[i - 1]) - right_sum**2 / (n - i)
    # only cut between distinct values
    valid = s[i] > s[i - 1]
    cost = np.where(valid, left_sse + right_sse, np.inf)
    cut = int(np.argmin(cost)) + 1
    mask = np.zeros(n, dtype=bool)
    mask[order[cut:]] = True
    return mask


def davies_bouldin_1d(values: np.ndarray) -> float:
    """Davies-Bouldin index of the optimal 2-means split of ``values``.

    Scatter is the mean absolute deviation from the group centroid. A vector
    that cannot be split (constant) scores +inf.
    """
    v = np.asarray(values, dtype=float)
    mask = two_means_1d(v)
    if mask is None:
        return float("inf")
    a, b = v[~mask], v[mask]
    ca, cb = a.mean(), b.mean()
    sa, sb = np.abs(a - ca).mean(), np.abs(b - cb).mean()
    return float((sa + sb) / abs(cb - ca))


def select_k_auto(lap: Laplacian, k_max: int):
    """Choose eigenvectors by how cleanly each one splits into two groups.

    Scores the ``k_max`` smallest-eigenvalue eigenvectors with
    :func:`davies_bouldin_1d`; those scoring below mean - std (sample std over
    the finite scores) qualify. With fewer than two qualifiers the two best
    scores are taken instead. Returns ``(selected indices, scores)``.
    """
    if not 2 <= k_max <= lap.size:
        raise SpectralError(f"k_max must be in [2, {lap.size}], got {k_max}")
    _, vecs = lap.spectrum()
    scores = np.array([davies_bouldin_1d(vecs[:, j]) for j in range(k_max)])
    finite = scores[np.isfinite(scores)]
    if len(finite) >= 2:
        cut = finite.mean() - np.std(finite, ddof=1)
        selected = [j for j in range(k_max) if scores[j] < cut]
    else:
        selected = []
    if len(selected) < 2:
        selected = sorted(np.argsort(scores, kind="stable")[:2].tolist())
    return [int(j) for j in selected], scores


def cluster_embedding(emb: SpectralEmbedding, k_clusters: int, seed: int = 0, restarts: int = 10, max_iters: int = 300) -> np.ndarray:
    """Best-of-``restarts`` k-means on the embedding rows."""
    rows = emb.coords
    if not 1 <= k_clusters <= rows.shape[0]:
        raise SpectralError(f"k_clusters must be in [1, {rows.shape[0]}], got {k_clusters}")
    if k_clusters == 1:
        return np.zeros(rows.shape[0], dtype=np.int64)
    return kmeans(rows, k_clusters, seed=seed, max_iters=max_iters, restarts=restarts).labels.astype(np.int64)


def generalize_labels(
    rep_labels,
    asg: BmuAssignment,
    kept_vertices=None,
    points: Optional[np.ndarray] = None,
    codebook: Optional[Codebook] = None,
) -> np.ndarray:
    """Give every point the label of its best matching unit.

    Points whose BMU is isolated (label -1) take the label of the nearest
    labelled representative when ``points`` and ``codebook`` are given, and of
    their second BMU otherwise (-1 if that is isolated too).
    """
    rep = np.asarray(rep_labels, dtype=np.int64)
    labels = rep[asg.bmu].copy()
    orphan = labels < 0
    if not orphan.any():
        return labels
    active = np.flatnonzero(rep >= 0) if kept_vertices is None else np.asarray(kept_vertices)
    active = active[rep[active] >= 0]
    if active.size == 0:
        return labels
    if points is not None and codebook is not None:
        pts = np.asarray(points, dtype=float)[orphan]
        d2 = squared_distances(pts, codebook.vectors[active])
        labels[orphan] = rep[active[np.argmin(d2, axis=1)]]
    else:
        labels[orphan] = rep[asg.second[orphan]]
    return labels


def spectral_cluster(
    graph,
    asg: Optional[BmuAssignment] = None,
    k: Optional[int] = 2,
    seed: int = 0,
    restarts: int = 10,
    auto: bool = False,
    k_max: int = 10,
    points: Optional[np.ndarray] = None,
    codebook: Optional[Codebook] = None,
) -> ClusterResult:
    """Full pipeline from a graph to representative and point labels.

    With ``auto=True`` the eigenvectors are chosen by :func:`select_k_auto`
    and the number of clusters equals the number chosen. If fewer active
    vertices than clusters remain, every active vertex gets its own cluster.
    """
    lap = build_laplacian(graph)
    report = None
    if auto:
        kk = min(k_max, lap.size)
        if kk < 2:
            cols = [0]
        else:
            cols, scores = select_k_auto(lap, kk)
            report = {"db_scores": [_finite(s) for s in scores], "selected": cols}
        k_clusters = len(cols)
        emb = embed(lap, columns=cols)
    else:
        k_clusters = min(int(k), lap.size)
        emb = embed(lap, k_clusters)
    active = cluster_embedding(emb, k_clusters, seed=seed, restarts=restarts)
    rep = np.full(lap.m, -1, dtype=np.int64)
    rep[lap.kept] = active
    if asg is None:
        pl = rep.copy()
    else:
        pl = generalize_labels(rep, asg, lap.kept, points, codebook)
    return ClusterResult(rep, pl, k_clusters, report, {"kmeans": int(seed)})


def _finite(x):
    x = float(x)
    return x if np.isfinite(x) else None
