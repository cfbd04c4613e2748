"""DCONN / CONN graphs built from matching-unit pairs, and their filtered variants.

Graphs are held as dense m x m integer matrices; at the codebook sizes used
here (a few hundred units at most) that is cheaper than any sparse format.
:meth:`ConnGraph.edges` enumerates the nonzero upper-triangle entries.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .vq import BmuAssignment, Codebook

__all__ = [
    "DconnMatrix",
    "ConnGraph",
    "Thresholds",
    "GraphError",
    "VARIANTS",
    "normalize_variant",
    "build_dconn",
    "build_conn",
    "global_filter",
    "local_filter",
    "dconn_balance",
    "filter_all",
    "write_edge_list",
    "read_edge_list",
    "write_sidecar",
]

VARIANTS = ("conn", "conn_g", "conn_l1", "conn_l2")


class GraphError(ValueError):
    pass


def normalize_variant(name: str) -> str:
    """Accept both ``conn-l1`` (CLI spelling) and ``conn_l1``."""
    v = name.strip().lower().replace("-", "_")
    if v not in VARIANTS:
        raise GraphError(f"unknown graph variant {name!r}; expected one of {VARIANTS}")
    return v


# relative spread below which a sample counts as constant (float round-off)
_SPREAD_TOL = 1e-9


def _sample_std(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


@dataclass(frozen=True)
class DconnMatrix:
    """counts[p, q] = number of points whose BMU is p and second BMU is q."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise GraphError(f"counts must be square, got shape {c.shape}")
        if np.any(c < 0):
            raise GraphError("counts must be non-negative")
        if np.any(np.diag(c)):
            raise GraphError("counts must have a zero diagonal")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def m(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ConnGraph:
    weights: np.ndarray
    variant: str = "conn"

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.int64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError(f"weights must be square, got shape {w.shape}")
        if np.any(w < 0):
            raise GraphError("weights must be non-negative")
        if not np.array_equal(w, w.T):
            raise GraphError("weights must be symmetric")
        if np.any(np.diag(w)):
            raise GraphError("weights must have a zero diagonal")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "variant", normalize_variant(self.variant))

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    def edges(self):
        """List of ``(p, q, weight)`` with ``p < q`` and ``weight > 0``."""
        p, q = np.nonzero(np.triu(self.weights, 1))
        return [(int(a), int(b), int(self.weights[a, b])) for a, b in zip(p, q)]

    def edge_mask(self) -> np.ndarray:
        return self.weights > 0

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def degree(self) -> np.ndarray:
        """Number of neighbours of every vertex."""
        return np.count_nonzero(self.weights, axis=1)


@dataclass(frozen=True)
class Thresholds:
    """Filter thresholds with the statistics they were derived from.

    ``stats`` holds ``"global": (mean, std)`` and/or ``"local": [(mean, std), ...]``
    (nan for vertices that do not vote).
    """

    t_global: float = 0.0
    t_local: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"t_global": float(self.t_global)}
        if self.t_local is not None:
            out["t_local"] = [None if not np.isfinite(t) else float(t) for t in self.t_local]
        for key, val in self.stats.items():
            if key == "local":
                out["local_stats"] = [[_json_float(a), _json_float(b)] for a, b in val]
            else:
                out[f"{key}_stats"] = [_json_float(v) for v in val]
        return out


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else None


def build_dconn(asg: BmuAssignment, m: int) -> DconnMatrix:
    bmu, second = asg.bmu, asg.second
    if bmu.size and (bmu.min() < 0 or second.min() < 0 or bmu.max() >= m or second.max() >= m):
        raise GraphError(f"assignment indices must lie in [0, {m})")
    counts = np.zeros((m, m), dtype=np.int64)
    np.add.at(counts, (bmu, second), 1)
    return DconnMatrix(counts)


def build_conn(dconn: DconnMatrix) -> ConnGraph:
    return ConnGraph(dconn.counts + dconn.counts.T, "conn")


def global_filter(conn: ConnGraph, dconn: DconnMatrix):
    """Drop edges whose two directed counts disagree by more than mean + std.

    The statistic is |V_pq - V_qp| over the present edges. An edge survives if
    its difference is below the threshold; when the differences have no spread
    (all equal, or a single edge) nothing stands out and every edge is kept.
    Returns ``(conn_g, thresholds)``.
    """
    if conn.m != dconn.m:
        raise GraphError("graph and DCONN sizes differ")
    c = dconn.counts
    diff = np.abs(c - c.T)
    iu = np.triu_indices(conn.m, 1)
    present = conn.weights[iu] > 0
    if not present.any():
        return ConnGraph(conn.weights, "conn_g"), Thresholds(0.0, stats={"global": (0.0, 0.0)})
    d = diff[iu][present]
    mu, sd = float(d.mean()), _sample_std(d)
    t = mu + sd
    keep_pair = (diff < t) | (diff <= mu) if sd == 0 else diff < t
    w = np.where(keep_pair, conn.weights, 0)
    return ConnGraph(w, "conn_g"), Thresholds(t, stats={"global": (mu, sd)})


def local_thresholds(graph: ConnGraph, dist: np.ndarray):
    """Per-vertex mean + std of distances to its neighbours in ``graph``.

    Vertices with fewer than two neighbours, or whose neighbours are all
    equidistant, get +inf: they never vote.
    """
    m = graph.m
    t = np.full(m, np.inf)
    stats = []
    mask = graph.edge_mask()
    for p in range(m):
        dp = dist[p, mask[p]]
        if len(dp) >= 2:
            mu, sd = float(dp.mean()), _sample_std(dp)
            if sd > _SPREAD_TOL * mu:
                t[p] = mu + sd
            stats.append((mu, sd))
        else:
            stats.append((np.nan, np.nan))
    return t, stats


def local_filter(conn_g: ConnGraph, cb: Codebook, mode: str = "l1", reference: Optional[ConnGraph] = None):
    """Voting filter on representative distances.

    Each endpoint whose local threshold an edge reaches (``d >= T``) casts one
    removal vote. ``mode="l1"`` drops edges with any vote, ``mode="l2"`` only
    edges with two. Thresholds come from ``reference`` (default: the graph
    being filtered). Returns ``(graph, thresholds)``.
    """
    mode = mode.lower().replace("conn_", "").replace("conn-", "")
    if mode not in ("l1", "l2"):
        raise GraphError(f"mode must be 'l1' or 'l2', got {mode!r}")
    if conn_g.m != cb.m:
        raise GraphError(f"graph has {conn_g.m} vertices, codebook has {cb.m}")
    ref = conn_g if reference is None else reference
    if ref.m != conn_g.m:
        raise GraphError("reference graph size differs")
    diff = cb.vectors[:, None, :] - cb.vectors[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    t, stats = local_thresholds(ref, dist)
    votes = (dist >= t[:, None]).astype(int) + (dist >= t[None, :]).astype(int)
    limit = 1 if mode == "l1" else 2
    w = np.where(votes >= limit, 0, conn_g.weights)
    return ConnGraph(w, "conn_" + mode), Thresholds(0.0, t, stats={"local": stats})


def edge_votes(conn_g: ConnGraph, cb: Codebook) -> np.ndarray:
    """m x m matrix of removal votes (0, 1 or 2) on the edges of ``conn_g``."""
    diff = cb.vectors[:, None, :] - cb.vectors[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    t, _ = local_thresholds(conn_g, dist)
    votes = (dist >= t[:, None]).astype(int) + (dist >= t[None, :]).astype(int)
    return np.where(conn_g.edge_mask(), votes, 0)


def dconn_balance(dconn: DconnMatrix) -> float:
    """sum |V_pq - V_qp| / sum (V_pq + V_qp) over the edges; 0 is fully reciprocated."""
    c = dconn.counts
    iu = np.triu_indices(dconn.m, 1)
    upper, lower = c[iu], c.T[iu]
    total = int((upper + lower).sum())
    if total == 0:
        raise GraphError("DCONN has no edges; balance is undefined")
    return float(np.abs(upper - lower).sum()) / total


def filter_all(dconn: DconnMatrix, cb: Codebook, local_reference: str = "conn_g") -> dict:
    """All four graph variants plus the thresholds used to derive them."""
    conn = build_conn(dconn)
    conn_g, tg = global_filter(conn, dconn)
    ref = conn if local_reference == "conn" else None
    l1, t1 = local_filter(conn_g, cb, "l1", reference=ref)
    l2, t2 = local_filter(conn_g, cb, "l2", reference=ref)
    return {
        "graphs": {"conn": conn, "conn_g": conn_g, "conn_l1": l1, "conn_l2": l2},
        "thresholds": {"conn_g": tg, "conn_l1": t1, "conn_l2": t2},
    }


def write_edge_list(graph: ConnGraph, path) -> None:
    """CSV with header ``p,q,weight``; one row per edge, ``p < q``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "q", "weight"])
        w.writerows(graph.edges())


def read_edge_list(path, m: int, variant: str = "conn") -> ConnGraph:
    weights = np.zeros((m, m), dtype=np.int64)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["p", "q", "weight"]:
            raise GraphError(f"{path}: expected header p,q,weight, got {header}")
        for row in reader:
            if not row:
                continue
            p, q, wt = (int(v) for v in row)
            if not 0 <= p < q < m:
                raise GraphError(f"{path}: edge ({p}, {q}) must satisfy 0 <= p < q < {m}")
            weights[p, q] = weights[q, p] = wt
    return ConnGraph(weights, variant)


def write_sidecar(graph: ConnGraph, path, thresholds: Optional[Thresholds] = None, balance: Optional[float] = None) -> None:
    meta = {
        "variant": graph.variant,
        "m": graph.m,
        "n_edges": graph.n_edges,
        "thresholds": thresholds.to_dict() if thresholds is not None else None,
        "balance": balance,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
