"""Vector quantization: codebook training and best/second-best matching units."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import Dataset

__all__ = [
    "Codebook",
    "BmuAssignment",
    "VQError",
    "METHODS",
    "train",
    "assign_bmus",
    "kmeans",
    "KMeansResult",
    "squared_distances",
]

METHODS = ("kmeans", "neural_gas")


class VQError(ValueError):
    pass


def _points(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.points
    pts = np.asarray(data, dtype=float)
    if pts.ndim != 2:
        raise VQError(f"expected an n x d matrix, got shape {pts.shape}")
    return pts


def squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Exact n x m matrix of squared Euclidean distances.

    Computed from explicit differences rather than the |x|^2 - 2xc + |c|^2
    expansion so that equal distances compare equal (tie-breaking relies on it).
    """
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True)
class Codebook:
    vectors: np.ndarray
    method: str = "kmeans"
    seed: int = 0

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=float)
        if vec.ndim != 2 or vec.shape[0] < 2:
            raise VQError(f"a codebook needs at least 2 vectors, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise VQError("codebook vectors must be finite")
        if self.method not in METHODS:
            raise VQError(f"unknown method {self.method!r}")
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    def to_dict(self) -> dict:
        return {"vectors": self.vectors.tolist(), "method": self.method, "seed": int(self.seed)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "Codebook":
        return cls(np.asarray(obj["vectors"], dtype=float), obj["method"], int(obj["seed"]))

    @classmethod
    def from_json(cls, text: str) -> "Codebook":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class BmuAssignment:
    """Per-point indices of the nearest (``bmu``) and second nearest (``second``) units."""

    bmu: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        bmu = np.asarray(self.bmu, dtype=np.int64).reshape(-1)
        second = np.asarray(self.second, dtype=np.int64).reshape(-1)
        if bmu.shape != second.shape:
            raise VQError("bmu and second must have the same length")
        if np.any(bmu == second):
            raise VQError("bmu and second-bmu must differ for every point")
        object.__setattr__(self, "bmu", bmu)
        object.__setattr__(self, "second", second)

    @property
    def n(self) -> int:
        return self.bmu.shape[0]


def assign_bmus(data, cb: Codebook) -> BmuAssignment:
    """Nearest and second-nearest codebook vectors; ties go to the lower index."""
    pts = _points(data)
    if pts.shape[1] != cb.vectors.shape[1]:
        raise VQError(f"data has {pts.shape[1]} dimensions, codebook has {cb.vectors.shape[1]}")
    d2 = squared_distances(pts, cb.vectors)
    order = np.argsort(d2, axis=1, kind="stable")
    return BmuAssignment(order[:, 0].copy(), order[:, 1].copy())


@dataclass
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int
    history: list


def _kmeans_pp(pts, k, rng):
    n = pts.shape[0]
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    closest = squared_distances(pts, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centers[c] = pts[idx]
        closest = np.minimum(closest, squared_distances(pts, centers[c : c + 1])[:, 0])
    return centers


def _lloyd(pts, centers, max_iters):
    k = centers.shape[0]
    labels = None
    history = []
    it = 0
    for it in range(1, max_iters + 1):
        d2 = squared_distances(pts, centers)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(pts)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        own = d2[np.arange(len(pts)), labels].copy()
        for c in range(k):
            if counts[c]:
                centers[c] = pts[labels == c].mean(axis=0)
            else:
                # empty cell: move it onto the point worst served by its center
                far = int(np.argmax(own))
                centers[c] = pts[far]
                own[far] = -1.0
    d2 = squared_distances(pts, centers)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(pts)), labels].sum())
    return KMeansResult(centers, labels, inertia, it, history)


def kmeans(points, k: int, seed: int = 0, max_iters: int = 100, restarts: int = 1) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeding, best of ``restarts`` by inertia."""
    pts = _points(points)
    if not 1 <= k <= pts.shape[0]:
        raise VQError(f"k must be in [1, {pts.shape[0]}], got {k}")
    if max_iters < 1 or restarts < 1:
        raise VQError("max_iters and restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        res = _lloyd(pts, _kmeans_pp(pts, k, rng), max_iters)
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def _neural_gas(pts, m, rng, epochs, eps=(0.5, 0.005), lam=None):
    lam0, lam1 = lam if lam is not None else (m / 2.0, 0.01)
    vectors = pts[rng.choice(pts.shape[0], size=m, replace=False)].copy()
    total = epochs * pts.shape[0]
    step = 0
    for _ in range(epochs):
        for i in rng.permutation(pts.shape[0]):
            frac = step / max(total - 1, 1)
            e = eps[0] * (eps[1] / eps[0]) ** frac
            l = lam0 * (lam1 / lam0) ** frac
            diff = pts[i] - vectors
            ranks = np.argsort(np.argsort(np.einsum("ij,ij->i", diff, diff), kind="stable"), kind="stable")
            vectors += (e * np.exp(-ranks / l))[:, None] * diff
            step += 1
    return vectors


def train(data, m: int, method: str = "kmeans", seed: int = 0, max_iters: int = 100) -> Codebook:
    """Fit ``m`` representatives to the data.

    ``kmeans`` runs Lloyd iterations from k-means++ seeding until the
    assignment stops changing (or ``max_iters``). ``neural_gas`` runs
    ``max_iters`` epochs of rank-based soft updates with exponentially decaying
    step size and neighbourhood range.
    """
    pts = _points(data)
    n = pts.shape[0]
    if m < 2:
        raise VQError(f"m must be >= 2, got {m}")
    if m > n:
        raise VQError(f"m={m} exceeds the number of points n={n}")
    if max_iters < 1:
        raise VQError("max_iters must be >= 1")
    if method == "kmeans":
        vectors = kmeans(pts, m, seed=seed, max_iters=max_iters).centers
    elif method == "neural_gas":
        vectors = _neural_gas(pts, m, np.random.default_rng(seed), max_iters)
    else:
        raise VQError(f"unknown method {method!r}; expected one of {METHODS}")
    return Codebook(vectors, method, seed)
