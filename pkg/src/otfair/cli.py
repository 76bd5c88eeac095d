"""Command-line entry points for training, runs, sweeps, and exports."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .harness import (ExperimentConfig, RunTrace, export_dual_snapshot,
                      load_checkpoint, load_config, persist_run, run_batch_sweep,
                      run_drift, run_experiment, summary_table, _load_and_split)
from .model import train_lr


def _apply_overrides(cfg, args):
    ot = cfg.ot
    if args.seed is not None:
        ot = replace(ot, seed=args.seed)
        cfg = replace(cfg, split_seed=args.seed)
    if args.batch_size is not None:
        ot = replace(ot, batch_scores=args.batch_size, batch_target=args.batch_size)
    if args.updates is not None:
        ot = replace(ot, num_updates=args.updates)
    cfg = replace(cfg, ot=ot)
    if args.trace_every is not None:
        cfg = replace(cfg, trace_every=args.trace_every)
    if getattr(args, "method", None):
        cfg = replace(cfg, method=args.method)
    if args.desk_scale:
        cfg = replace(cfg, desk_scale=True,
                      ot=replace(cfg.ot, num_updates=min(cfg.ot.num_updates, 20_000)))
    if args.out:
        cfg = replace(cfg, out=args.out)
    return cfg


def _add_common(p):
    p.add_argument("--config", required=True, help="experiment INI file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--updates", type=int, default=None)
    p.add_argument("--trace-every", type=int, default=None)
    p.add_argument("--desk-scale", action="store_true")


def _write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="otfair")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-lr", help="train the logistic score model only")
    _add_common(p)

    p = sub.add_parser("run", help="run one experiment (LR/COT/DOT/DPP)")
    _add_common(p)
    p.add_argument("--method", choices=("LR", "COT", "DOT", "DPP"))

    p = sub.add_parser("sweep-batch", help="batch-size sweep over COT and DOT")
    _add_common(p)
    p.add_argument("--sizes", default="10,20,64",
                   help="comma-separated batch sizes")

    p = sub.add_parser("drift", help="run over a changing-unfairness schedule")
    _add_common(p)
    p.add_argument("--method", choices=("COT", "DOT"))

    p = sub.add_parser("export-duals", help="evaluate potentials on a grid")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", default="")

    p = sub.add_parser("table", help="aggregate run metrics into one table")
    p.add_argument("dirs", nargs="+")
    p.add_argument("--out", default="")

    args = parser.parse_args(argv)

    if args.command == "export-duals":
        _, pairs, _ = load_checkpoint(args.checkpoint)
        rows = export_dual_snapshot(pairs, np.linspace(0.0, 1.0, args.grid))
        out = args.out or os.path.join(
            os.path.dirname(args.checkpoint) or ".", "duals.csv")
        _write_rows(out, rows)
        print(out)
        return 0

    if args.command == "table":
        rows = summary_table(args.dirs)
        fields = ["run", "method", "err05", "wass1", "sdd", "spdd"]
        lines = ["\t".join(fields)]
        lines += ["\t".join(f"{r[f]:.3f}" if isinstance(r.get(f), float)
                            else str(r.get(f, "")) for f in fields)
                  for r in rows]
        text = "\n".join(lines)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        print(text)
        return 0

    cfg = _apply_overrides(load_config(args.config), args)

    if args.command == "train-lr":
        train, test = _load_and_split(cfg)
        model = train_lr(train, cfg.lr_l2,
                         include_sensitive=cfg.include_sensitive)
        out = cfg.out_dir("lr")
        os.makedirs(out, exist_ok=True)
        model.save(os.path.join(out, "model.json"))
        print(os.path.join(out, "model.json"))
        return 0

    if args.command == "run":
        trace, row, model, pairs = run_experiment(cfg, return_state=True)
        out = persist_run(cfg.out_dir(cfg.method.lower()), trace, row,
                          model, pairs, cfg)
        print(json.dumps(row))
        print(out)
        return 0

    if args.command == "sweep-batch":
        sizes = [int(s) for s in args.sizes.replace(",", " ").split()]
        rows = run_batch_sweep(cfg, sizes)
        out = cfg.out_dir("sweep")
        os.makedirs(out, exist_ok=True)
        _write_rows(os.path.join(out, "sweep.csv"), rows)
        print(os.path.join(out, "sweep.csv"))
        return 0

    if args.command == "drift":
        trace, stats, model, pairs = run_drift(cfg)
        out = cfg.out_dir("drift")
        os.makedirs(out, exist_ok=True)
        trace.to_csv(os.path.join(out, "trace.csv"))
        with open(os.path.join(out, "phase_stats.json"), "w") as fh:
            json.dump(stats, fh, indent=2)
        with open(os.path.join(out, "manifest.json"), "w") as fh:
            json.dump(trace.manifest, fh, indent=2, default=str)
        print(os.path.join(out, "trace.csv"))
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
