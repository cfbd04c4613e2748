"""Seeded noise-sweep experiments over the four graph variants."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import dataset as ds
from .graph import VARIANTS, build_dconn, dconn_balance, filter_all, normalize_variant
from .metrics import clustering_accuracy, edge_count, rand_index
from .spectral import spectral_cluster
from .vq import METHODS, assign_bmus, train

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ExperimentError",
    "derive_seed",
    "load_dataset",
    "run_experiment",
    "balance_report",
    "result_to_json",
    "table_csv",
]

# independent random streams per run
_STREAMS = {"data": 0, "noise": 1, "vq": 2, "kmeans": 3}


class ExperimentError(RuntimeError):
    pass


def derive_seed(seed: int, stream: str) -> int:
    """Deterministic 32-bit seed for one named stream of one run."""
    return int(np.random.SeedSequence([int(seed), _STREAMS[stream]]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce an experiment.

    Data comes from ``shape`` (+ ``sizes``) unless ``dataset`` (a CSV path)
    is set. ``k`` is an integer, ``"auto"``, or None for the true class count.
    """

    shape: Optional[str] = "three_rings"
    sizes: Optional[list] = None
    dataset: Optional[str] = None
    label_column: Optional[str] = None
    sigmas: list = field(default_factory=lambda: [0.0])
    m: int = 32
    method: str = "kmeans"
    max_iters: int = 100
    variants: list = field(default_factory=lambda: list(VARIANTS))
    k: Union[int, str, None] = None
    k_max: int = 10
    runs: int = 10
    seed: int = 0
    restarts: int = 10
    freeze_noise: bool = False
    local_reference: str = "conn_g"
    out: Optional[str] = None

    def __post_init__(self):
        self.variants = [normalize_variant(v) for v in self.variants]
        self.sigmas = [float(s) for s in self.sigmas]
        if self.sizes is not None:
            self.sizes = [int(s) for s in self.sizes]
        self.validate()

    def validate(self):
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not self.sigmas or any(s < 0 for s in self.sigmas) or len(set(self.sigmas)) != len(self.sigmas):
            raise ValueError(f"sigmas must be distinct values >= 0, got {self.sigmas}")
        if not self.variants or len(set(self.variants)) != len(self.variants):
            raise ValueError(f"variants must be a nonempty list without repeats, got {self.variants}")
        if self.method not in METHODS:
            raise ValueError(f"unknown VQ method {self.method!r}")
        if self.dataset is None and self.shape is None:
            raise ValueError("either a synthetic shape or a CSV dataset is required")
        if self.k is not None and self.k != "auto" and int(self.k) < 1:
            raise ValueError(f"k must be a positive integer, 'auto' or None, got {self.k}")
        if self.local_reference not in ("conn", "conn_g"):
            raise ValueError("local_reference must be 'conn' or 'conn_g'")

    @property
    def auto_k(self) -> bool:
        return self.k == "auto"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = cls.__dataclass_fields__
        unknown = set(obj) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_dataset(cfg: ExperimentConfig, seed: int) -> ds.Dataset:
    if cfg.dataset is not None:
        return ds.load_csv(cfg.dataset, cfg.label_column)
    return ds.generate_synthetic(cfg.shape, cfg.sizes, seed=seed)


def _n_clusters(cfg, data):
    if cfg.k is not None and not cfg.auto_k:
        return int(cfg.k)
    if data.labels is not None:
        return data.n_classes
    if cfg.auto_k:
        return None
    raise ExperimentError("k is required when the data has no labels")


def _cluster(graph, asg, data, cb, k, cfg, seed):
    if graph.n_edges == 0:
        # nothing to cut: one degenerate cluster
        return np.zeros(data.n, dtype=np.int64), 1
    res = spectral_cluster(
        graph,
        asg,
        k=k,
        seed=seed,
        restarts=cfg.restarts,
        auto=cfg.auto_k,
        k_max=cfg.k_max,
        points=data.points,
        codebook=cb,
    )
    return res.point_labels, res.k_used


def _one_run(cfg, r):
    seed_r = cfg.seed + r
    data_seed = cfg.seed if cfg.freeze_noise else seed_r
    clean = load_dataset(cfg, derive_seed(data_seed, "data"))
    k = _n_clusters(cfg, clean)
    records = []
    for sigma in cfg.sigmas:
        data = ds.add_noise(clean, ds.NoiseSpec(sigma, derive_seed(data_seed, "noise")))
        try:
            cb = train(data, cfg.m, cfg.method, derive_seed(seed_r, "vq"), cfg.max_iters)
            asg = assign_bmus(data, cb)
            dconn = build_dconn(asg, cfg.m)
            balance = dconn_balance(dconn)
            graphs = filter_all(dconn, cb, cfg.local_reference)["graphs"]
        except Exception as exc:
            raise ExperimentError(f"run {r} (seed {seed_r}), sigma={sigma}: {exc}") from exc
        rec = {"run": r, "seed": seed_r, "sigma": sigma, "balance": balance, "variants": {}}
        for v in cfg.variants:
            g = graphs[v]
            try:
                labels, k_used = _cluster(g, asg, data, cb, k, cfg, derive_seed(seed_r, "kmeans"))
            except Exception as exc:
                raise ExperimentError(f"run {r} (seed {seed_r}), sigma={sigma}, variant={v}: {exc}") from exc
            entry = {"edges": edge_count(g), "k_used": int(k_used)}
            if data.labels is not None:
                entry["accuracy"] = clustering_accuracy(labels, data.labels)
                entry["rand_index"] = rand_index(labels, data.labels) if data.n >= 2 else None
            else:
                entry["accuracy"] = entry["rand_index"] = None
            rec["variants"][v] = entry
        records.append(rec)
    return records


def _mean_std(x):
    if any(v is None for v in x):
        return None, None
    a = np.asarray(x, dtype=float)
    return float(a.mean()), float(a.std(ddof=1)) if len(a) > 1 else 0.0


def aggregate(cfg: ExperimentConfig, log_rows: list) -> list:
    """Mean and sample std per (sigma, variant), in config order."""
    out = []
    for sigma in cfg.sigmas:
        rows = [row for row in log_rows if row["sigma"] == sigma]
        bal = float(np.mean([row["balance"] for row in rows]))
        for v in cfg.variants:
            acc_mean, acc_std = _mean_std([row["variants"][v]["accuracy"] for row in rows])
            ri_mean, _ = _mean_std([row["variants"][v]["rand_index"] for row in rows])
            e_mean, e_std = _mean_std([row["variants"][v]["edges"] for row in rows])
            out.append(
                {
                    "sigma": sigma,
                    "variant": v,
                    "acc_mean": acc_mean,
                    "acc_std": acc_std,
                    "ri_mean": ri_mean,
                    "edges_mean": e_mean,
                    "edges_std": e_std,
                    "balance_mean": bal,
                    "runs": len(rows),
                }
            )
    return out


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run ``cfg.runs`` seeded repetitions and aggregate them.

    Run ``r`` uses seed ``cfg.seed + r``; separate streams derived from it drive
    data sampling, noise, VQ initialisation and the embedding k-means. Within a
    run every variant shares one dataset and one codebook.
    """
    cfg.validate()
    log_rows = []
    for r in range(cfg.runs):
        log.debug("run %d/%d", r + 1, cfg.runs)
        log_rows.extend(_one_run(cfg, r))
    return {"config": cfg.to_dict(), "results": aggregate(cfg, log_rows), "runs": log_rows}


def result_to_json(result: dict) -> str:
    return json.dumps(result, indent=2) + "\n"


def _fmt(mean, std, digits):
    if mean is None:
        return ""
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


def table_csv(result: dict) -> str:
    """Accuracy row and edge-count row per sigma, one column per variant."""
    cfg = result["config"]
    variants = [normalize_variant(v) for v in cfg["variants"]]
    by_key = {(row["sigma"], row["variant"]): row for row in result["results"]}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "sigma", "row"] + variants)
    for sigma in cfg["sigmas"]:
        rows = [by_key[(sigma, v)] for v in variants]
        w.writerow([cfg["m"], sigma, "accuracy"] + [_fmt(r["acc_mean"], r["acc_std"], 2) for r in rows])
        w.writerow([cfg["m"], sigma, "edges"] + [_fmt(r["edges_mean"], r["edges_std"], 2) for r in rows])
    return buf.getvalue()


def balance_report(
    shape: Optional[str] = "three_rings",
    m: int = 100,
    runs: int = 10,
    seed: int = 0,
    sigma: float = 0.0,
    sizes=None,
    dataset: Optional[str] = None,
    label_column: Optional[str] = None,
    method: str = "kmeans",
    max_iters: int = 100,
) -> dict:
    """DCONN balance per run and its mean, without building any filtered graph."""
    cfg = ExperimentConfig(
        shape=shape,
        sizes=sizes,
        dataset=dataset,
        label_column=label_column,
        sigmas=[sigma],
        m=m,
        method=method,
        max_iters=max_iters,
        runs=runs,
        seed=seed,
    )
    per_run = []
    for r in range(runs):
        seed_r = seed + r
        data = load_dataset(cfg, derive_seed(seed_r, "data"))
        data = ds.add_noise(data, ds.NoiseSpec(sigma, derive_seed(seed_r, "noise")))
        cb = train(data, m, method, derive_seed(seed_r, "vq"), max_iters)
        per_run.append(dconn_balance(build_dconn(assign_bmus(data, cb), m)))
    return {"sigma": sigma, "m": m, "per_run": per_run, "mean": float(np.mean(per_run))}
