"""Command line entry point: ``dconn generate|run|balance|graph``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import dataset as ds
from .graph import build_dconn, dconn_balance, filter_all, normalize_variant, write_edge_list, write_sidecar
from .harness import ExperimentConfig, balance_report, result_to_json, run_experiment, table_csv
from .vq import assign_bmus, train


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _add_data_args(p, required=False):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--dataset", help="CSV file with a header row")
    src.add_argument("--shape", choices=sorted(ds.SHAPES), help="synthetic shape")
    p.add_argument("--label-column", help="CSV column holding class labels")
    p.add_argument("--sizes", type=_int_list, help="per-cluster point counts, e.g. 50,200,350")


def _data_source(args):
    if args.dataset is None and args.shape is None:
        args.shape = "three_rings"
    return {"shape": None if args.dataset else args.shape, "dataset": args.dataset,
            "label_column": args.label_column, "sizes": args.sizes}


def cmd_generate(args):
    data = ds.generate_synthetic(args.shape, args.sizes, seed=args.seed)
    if args.sigma:
        data = ds.add_noise(data, ds.NoiseSpec(args.sigma, args.seed))
    ds.save_csv(data, args.out)
    print(f"wrote {data.n} points ({data.n_classes} classes) to {args.out}", file=sys.stderr)


def cmd_run(args):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            obj = json.load(fh)
        # --out on the command line wins over the file
        if args.out:
            obj["out"] = args.out
        cfg = ExperimentConfig.from_dict(obj)
    else:
        k = args.k
        if k not in (None, "auto"):
            k = int(k)
        cfg = ExperimentConfig(
            **_data_source(args),
            sigmas=args.sigma,
            m=args.m,
            method=args.method,
            max_iters=args.max_iters,
            variants=args.variants.split(","),
            k=k,
            k_max=args.k_max,
            runs=args.runs,
            seed=args.seed,
            restarts=args.restarts,
            freeze_noise=args.freeze_noise,
            local_reference=args.local_reference,
            out=args.out,
        )
    result = run_experiment(cfg)
    text = result_to_json(result)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif not args.table:
        sys.stdout.write(text)
    if args.table:
        sys.stdout.write(table_csv(result))


def cmd_balance(args):
    src = _data_source(args)
    rep = balance_report(
        shape=src["shape"],
        sizes=src["sizes"],
        dataset=src["dataset"],
        label_column=src["label_column"],
        m=args.m,
        runs=args.runs,
        seed=args.seed,
        sigma=args.sigma,
        method=args.method,
        max_iters=args.max_iters,
    )
    print(json.dumps(rep, indent=2))


def cmd_graph(args):
    src = _data_source(args)
    if src["dataset"]:
        data = ds.load_csv(src["dataset"], src["label_column"])
    else:
        data = ds.generate_synthetic(src["shape"], src["sizes"], seed=args.seed)
    data = ds.add_noise(data, ds.NoiseSpec(args.sigma, args.seed))
    cb = train(data, args.m, args.method, args.seed, args.max_iters)
    dconn = build_dconn(assign_bmus(data, cb), args.m)
    built = filter_all(dconn, cb, args.local_reference)
    variant = normalize_variant(args.variant)
    graph = built["graphs"][variant]
    write_edge_list(graph, args.out)
    sidecar = os.path.splitext(args.out)[0] + ".json"
    write_sidecar(graph, sidecar, built["thresholds"].get(variant), dconn_balance(dconn))
    print(f"wrote {graph.n_edges} edges to {args.out} and metadata to {sidecar}", file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="dconn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset to CSV")
    p.add_argument("--shape", choices=sorted(ds.SHAPES), required=True)
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.0, help="optional Gaussian noise")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    def vq_args(p, m):
        p.add_argument("--m", type=int, default=m, help="number of representatives")
        p.add_argument("--method", choices=["kmeans", "neural_gas"], default="kmeans")
        p.add_argument("--max-iters", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("run", help="noise sweep over graph variants")
    p.add_argument("--config", help="JSON experiment config; only --out and --table are honoured alongside it")
    _add_data_args(p)
    vq_args(p, 32)
    p.add_argument("--sigma", type=_float_list, default=[0.0], help="comma-separated noise levels")
    p.add_argument("--variants", default="conn,conn-g,conn-l1,conn-l2")
    p.add_argument("--k", default=None, help="number of clusters or 'auto' (default: true class count)")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--freeze-noise", action="store_true", help="reuse one data/noise draw for every run")
    p.add_argument("--local-reference", choices=["conn_g", "conn"], default="conn_g")
    p.add_argument("--out", help="result JSON path (default: stdout)")
    p.add_argument("--table", action="store_true", help="print a CSV table of means and stds")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("balance", help="DCONN balance per run")
    _add_data_args(p)
    vq_args(p, 100)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--runs", type=int, default=10)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("graph", help="export one graph variant as an edge list")
    _add_data_args(p)
    vq_args(p, 32)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--variant", default="conn")
    p.add_argument("--local-reference", choices=["conn_g", "conn"], default="conn_g")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"dconn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
