"""Synthetic benchmark shapes, additive noise and labelled CSV loading."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Dataset",
    "NoiseSpec",
    "DatasetError",
    "CsvError",
    "CsvMissingError",
    "CsvValueError",
    "CsvColumnError",
    "CsvShapeError",
    "SHAPES",
    "generate_synthetic",
    "add_noise",
    "load_csv",
    "save_csv",
]

# Geometry constants. All shapes live roughly inside the unit square so that
# noise levels of a few hundredths are comparable to the gaps between clusters.
RING_RADII = (0.05, 0.2, 0.35)

LINES_LENGTH = 0.6
LINES_SPACING = 0.2

SMILE_EYES = ((-0.2, 0.2), (0.2, 0.2))
SMILE_EYE_RADIUS = 0.07
SMILE_NOSE = (0.0, 0.0)
SMILE_NOSE_RADIUS = 0.06
SMILE_MOUTH_CENTER = (0.0, 0.05)
SMILE_MOUTH_RADIUS = 0.3
SMILE_MOUTH_ARC = (np.deg2rad(200.0), np.deg2rad(340.0))

SHAPES = {
    "three_rings": "three_rings",
    "rings": "three_rings",
    "smile": "smile",
    "four_lines": "four_lines",
    "lines4": "four_lines",
}

_DEFAULT_SIZES = {
    "three_rings": (50, 200, 350),
    "smile": (50, 50, 50, 100),
    "four_lines": (100, 100, 100, 100),
}


class DatasetError(ValueError):
    """Invalid dataset input."""


class CsvError(DatasetError):
    """A CSV file could not be turned into a Dataset."""


class CsvMissingError(CsvError, FileNotFoundError):
    pass


class CsvValueError(CsvError):
    """Non-numeric feature cell."""


class CsvColumnError(CsvError):
    """Requested label column is not in the header."""


class CsvShapeError(CsvError):
    """Empty file or rows whose field count differs from the header."""


@dataclass(frozen=True)
class Dataset:
    """n points in d dimensions, optionally with ground-truth classes."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "data"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DatasetError(f"points must be an n x d matrix with n, d >= 1, got shape {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.array(self.labels)
            if lab.shape != (pts.shape[0],):
                raise DatasetError(f"labels must have length {pts.shape[0]}, got shape {lab.shape}")
            if lab.size and (not np.issubdtype(lab.dtype, np.integer) or lab.min() < 0):
                raise DatasetError("labels must be non-negative integers")
            lab = lab.astype(np.int64)
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DatasetError(f"sigma must be >= 0, got {self.sigma}")


def _ring(rng, n, radius):
    # evenly spaced angles, random phase
    theta = rng.uniform(0.0, 2 * np.pi) + np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


def _disk(rng, n, center, radius):
    # sunflower spiral: evenly spread over the disk area, random rotation
    k = np.arange(n) + 0.5
    r = radius * np.sqrt(k / n)
    theta = rng.uniform(0.0, 2 * np.pi) + k * np.pi * (3.0 - np.sqrt(5.0))
    return np.asarray(center) + np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _arc(rng, n, center, radius, span):
    # evenly spaced angles, random offset within one step
    step = (span[1] - span[0]) / n
    theta = span[0] + (rng.uniform(0.0, 1.0) + np.arange(n)) * step
    return np.asarray(center) + radius * np.column_stack([np.cos(theta), np.sin(theta)])


def _segment(rng, n, y):
    # evenly spaced along the segment, random offset
    x = (rng.uniform(0.0, 1.0) + np.arange(n)) * (LINES_LENGTH / n)
    return np.column_stack([x, np.full(n, y)])


def generate_synthetic(shape: str, sizes: Optional[Sequence[int]] = None, seed: int = 0) -> Dataset:
    """Sample one of the noiseless benchmark shapes.

    ``shape`` is ``three_rings`` (alias ``rings``), ``smile`` or
    ``four_lines`` (alias ``lines4``). ``sizes`` gives the number of points per
    component, in the order: rings inner to outer; smile left eye, right eye,
    nose, mouth; lines bottom to top.
    """
    try:
        kind = SHAPES[shape]
    except KeyError:
        raise DatasetError(f"unknown shape {shape!r}; expected one of {sorted(SHAPES)}") from None
    if sizes is None:
        sizes = _DEFAULT_SIZES[kind]
    sizes = [int(s) for s in sizes]
    n_parts = len(_DEFAULT_SIZES[kind])
    if len(sizes) != n_parts:
        raise DatasetError(f"{kind} needs {n_parts} cluster sizes, got {len(sizes)}")
    if min(sizes) < 1:
        raise DatasetError(f"every cluster needs at least one point, got sizes {sizes}")

    rng = np.random.default_rng(seed)
    if kind == "three_rings":
        parts = [_ring(rng, s, r) for s, r in zip(sizes, RING_RADII)]
    elif kind == "four_lines":
        parts = [_segment(rng, s, i * LINES_SPACING) for i, s in enumerate(sizes)]
    else:
        parts = [
            _disk(rng, sizes[0], SMILE_EYES[0], SMILE_EYE_RADIUS),
            _disk(rng, sizes[1], SMILE_EYES[1], SMILE_EYE_RADIUS),
            _disk(rng, sizes[2], SMILE_NOSE, SMILE_NOSE_RADIUS),
            _arc(rng, sizes[3], SMILE_MOUTH_CENTER, SMILE_MOUTH_RADIUS, SMILE_MOUTH_ARC),
        ]
    labels = np.repeat(np.arange(n_parts), sizes)
    return Dataset(np.vstack(parts), labels, name=kind)


def add_noise(data: Dataset, spec: NoiseSpec) -> Dataset:
    """Return a copy of ``data`` with isotropic Gaussian noise added."""
    if spec.sigma == 0:
        return Dataset(data.points.copy(), data.labels, name=data.name)
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, spec.sigma, size=data.points.shape)
    return Dataset(data.points + noise, data.labels, name=data.name)


def load_csv(path, label_column: Optional[str] = None) -> Dataset:
    """Read a numeric CSV with a header row.

    Every column except ``label_column`` becomes a feature, in header order.
    Label values may be arbitrary strings; they are mapped to 0, 1, ... in
    order of first appearance.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise CsvMissingError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise CsvShapeError(f"{path}: empty file, a header row is required")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise CsvShapeError(f"{path}: no data rows")

    label_idx = None
    if label_column is not None:
        if label_column not in header:
            raise CsvColumnError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
    feature_idx = [j for j in range(len(header)) if j != label_idx]
    if not feature_idx:
        raise CsvColumnError(f"{path}: no feature columns")

    points = np.empty((len(body), len(feature_idx)))
    raw_labels = []
    for i, row in enumerate(body):
        line = i + 2  # 1-based, counting the header
        if len(row) != len(header):
            raise CsvShapeError(f"{path}: row {line} has {len(row)} fields, header has {len(header)}")
        for k, j in enumerate(feature_idx):
            try:
                points[i, k] = float(row[j])
            except ValueError:
                raise CsvValueError(
                    f"{path}: row {line}, column {header[j]!r}: non-numeric value {row[j]!r}"
                ) from None
        if label_idx is not None:
            raw_labels.append(row[label_idx].strip())

    labels = None
    if label_idx is not None:
        codes: dict = {}
        labels = np.array([codes.setdefault(v, len(codes)) for v in raw_labels], dtype=np.int64)
    name = os.path.splitext(os.path.basename(path))[0]
    return Dataset(points, labels, name=name)


def save_csv(data: Dataset, path, label_column: str = "label", columns: Optional[Sequence[str]] = None) -> None:
    """Write ``data`` in the format read by :func:`load_csv`."""
    if columns is None:
        columns = [f"x{j}" for j in range(data.d)]
    if len(columns) != data.d:
        raise DatasetError(f"{len(columns)} column names for {data.d} features")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = list(columns)
        if data.labels is not None:
            header.append(label_column)
        writer.writerow(header)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.points[i]]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            writer.writerow(row)
