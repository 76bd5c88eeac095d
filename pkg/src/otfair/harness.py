"""Experiment orchestration: configs, runs, traces, manifests, exports."""
from __future__ import annotations

import configparser
import csv
import json
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import dpp as dpp_mod
from .cot import DualPair, OtConfig, Regularizer, cot_run
from .data import (Dataset, UnfairnessSchedule, load_dataset,
                   resample_positive_rate, schedule_iterator, train_test_split)
from .dot import dot_run
from .metrics import (EmpiricalDistribution, err_at_threshold, pooled, sdd,
                      spdd, w1_barycenter, wasserstein1_1d)
from .model import LogisticModel, score_batch, train_lr
from .rff import DualPotential, RffMap, eval_potential

METHODS = ("LR", "COT", "DOT", "DPP")

OUT_ROOT_ENV = "OTFAIR_OUT"


@dataclass
class ExperimentConfig:
    dataset: str = ""
    schema: dict = field(default_factory=dict)
    delimiter: str = None
    method: str = "COT"
    ot: OtConfig = field(default_factory=OtConfig)
    target: str = "barycenter"  # barycenter | pooled | group:<col>=<value>
    schedule: UnfairnessSchedule = None
    schedule_group: str = ""  # "<col>=<value>" selector the schedule applies to
    split_seed: int = 0
    test_frac: float = 0.3
    lr_l2: float = 1.0
    include_sensitive: bool = True
    trace_every: int = 50
    desk_scale: bool = False
    desk_rows: int = 10_000
    eval_on_original: bool = False  # drift runs: fixed test set instead of shifted
    out: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")

    def out_dir(self, default_name="run"):
        if self.out:
            return self.out
        root = os.environ.get(OUT_ROOT_ENV, "runs")
        return os.path.join(root, default_name)


@dataclass
class RunTrace:
    rows: list
    manifest: dict

    def to_csv(self, path):
        if not self.rows:
            raise ValueError("empty trace")
        fields = list(self.rows[0])
        for row in self.rows[1:]:  # later rows may add per-group columns
            fields.extend(k for k in row if k not in fields)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, restval="")
            writer.writeheader()
            writer.writerows(self.rows)

    @staticmethod
    def read_csv(path):
        def parse(key, val):
            if key == "update":
                return int(float(val))
            return float(val) if val != "" else float("nan")

        with open(path, newline="") as fh:
            return [{k: parse(k, v) for k, v in row.items()}
                    for row in csv.DictReader(fh)]


def load_config(path):
    """Parse an INI experiment file into an ExperimentConfig."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # schema column names are case-sensitive
    with open(path) as fh:
        parser.read_file(fh)
    exp = parser["experiment"] if parser.has_section("experiment") else {}
    reg = Regularizer(
        exp.get("reg", "entropy"),
        float(exp.get("reg_strength", 0.05)),
    )
    ot = OtConfig(
        reg=reg,
        D=int(exp.get("rff_features", 100)),
        sigma2=float(exp.get("kernel_variance", 0.1)),
        eps_dual=float(exp.get("eps_dual", 0.02)),
        eps_theta=float(exp["eps_theta"]) if "eps_theta" in exp else None,
        num_updates=int(exp.get("updates", 100_000)),
        batch_scores=int(exp.get("batch_scores", 64)),
        batch_target=int(exp.get("batch_target", 64)),
        antisymmetric=exp.get("antisymmetric", "true").lower() in ("1", "true", "yes"),
        pair_mode=exp.get("pair_mode", "full"),
        seed=int(exp.get("seed", 0)),
    )
    cfg = ExperimentConfig(
        dataset=exp.get("dataset", ""),
        schema=dict(parser["schema"]) if parser.has_section("schema") else {},
        delimiter=exp.get("delimiter") or None,
        method=exp.get("method", "COT"),
        ot=ot,
        target=exp.get("target", "barycenter"),
        split_seed=int(exp.get("split_seed", 0)),
        test_frac=float(exp.get("test_frac", 0.3)),
        lr_l2=float(exp.get("lr_l2", 1.0)),
        include_sensitive=exp.get("include_sensitive", "true").lower()
        in ("1", "true", "yes"),
        trace_every=int(exp.get("trace_every", 50)),
        desk_scale=exp.get("desk_scale", "false").lower() in ("1", "true", "yes"),
        out=exp.get("out", ""),
    )
    if parser.has_section("schedule"):
        sched = parser["schedule"]
        cfg.schedule_group = sched.get("group", "")
        rates = [float(r) for r in sched.get("rates", "").replace(",", " ").split()]
        duration = int(sched.get("duration", 5000))
        cfg.schedule = UnfairnessSchedule([({}, duration) for _ in rates])
        # Rates are resolved against realized groups at run time.
        cfg.schedule._raw_rates = rates
    return cfg


def resolve_manifest(cfg):
    """Flatten the resolved configuration for reproducibility."""
    man = asdict(cfg)
    man["ot"] = asdict(cfg.ot)
    man["schedule"] = (
        {"group": cfg.schedule_group,
         "rates": getattr(cfg.schedule, "_raw_rates", None),
         "phases": [(list(map(list, r.keys())), d) for r, d in cfg.schedule.phases]}
        if cfg.schedule else None)
    return man


def _match_groups(ds, selector):
    """Group keys whose sensitive value matches '<column>=<value>'."""
    col, _, val = selector.partition("=")
    col, val = col.strip(), val.strip()
    if col not in ds.sensitive_names:
        raise ValueError(f"unknown sensitive column {col!r}")
    j = ds.sensitive_names.index(col)
    levels = ds.sensitive_levels[j]
    if val not in levels:
        raise ValueError(f"unknown level {val!r} for column {col!r}")
    code = levels.index(val)
    return [k for k in ds.group_keys if k[j] == code]


def group_score_distributions(ds, model, include_sensitive=True):
    Z = ds.design_matrix(include_sensitive=include_sensitive)
    s = score_batch(model, Z)
    return s, {k: EmpiricalDistribution(s[idx]) for k, idx in ds.groups.items()}


def build_target(ds, model, spec, include_sensitive=True):
    """Target score distribution from the trained model on a dataset."""
    s, dists = group_score_distributions(ds, model, include_sensitive)
    if spec == "barycenter":
        return w1_barycenter(dists)
    if spec == "pooled":
        return EmpiricalDistribution(s)
    if spec.startswith("group:"):
        keys = _match_groups(ds, spec[len("group:"):])
        samples = np.concatenate([dists[k].samples for k in keys])
        return EmpiricalDistribution(samples)
    raise ValueError(f"unknown target spec {spec!r}")


def evaluate(ds, scores, target):
    """Table row: Err-.5, Wass1 (vs target), SDD (vs pool), SPDD."""
    dists = {k: EmpiricalDistribution(scores[idx]) for k, idx in ds.groups.items()}
    return {
        "err05": err_at_threshold(scores, ds.y),
        "wass1": sum(wasserstein1_1d(g, target) for g in dists.values()),
        "sdd": sdd(dists, pooled(dists)),
        "spdd": spdd(dists),
    }


def _load_and_split(cfg):
    ds = load_dataset(cfg.dataset, cfg.schema, cfg.delimiter)
    if cfg.desk_scale and ds.n > cfg.desk_rows:
        rng = np.random.default_rng(cfg.split_seed)
        ds = ds.subset(np.sort(rng.choice(ds.n, cfg.desk_rows, replace=False)))
    return train_test_split(ds, cfg.test_frac, cfg.split_seed)


def _resolve_schedule(cfg, ds):
    """Fill per-phase rate maps against the realized groups."""
    raw = getattr(cfg.schedule, "_raw_rates", None)
    if raw is None:
        return cfg.schedule
    keys = _match_groups(ds, cfg.schedule_group)
    phases = [({k: r for k in keys}, d)
              for r, (_, d) in zip(raw, cfg.schedule.phases)]
    return UnfairnessSchedule(phases)


def run_experiment(cfg, return_state=False):
    """Train LR, build the target, dispatch the method, evaluate on test.

    Returns (RunTrace, metrics row). With return_state=True also returns the
    final model and dual pairs (pairs only for COT).
    """
    train, test = _load_and_split(cfg)
    model = train_lr(train, cfg.lr_l2, include_sensitive=cfg.include_sensitive)
    target = build_target(train, model, cfg.target, cfg.include_sensitive)
    ot = cfg.ot
    pairs = None
    if cfg.method == "LR":
        final = model
        rows = []
    elif cfg.method == "COT":
        final, rows, pairs = cot_run(model, train, target, ot, cfg.trace_every,
                                     include_sensitive=cfg.include_sensitive)
    elif cfg.method == "DOT":
        final, rows = dot_run(model, train, target, ot, cfg.trace_every,
                              include_sensitive=cfg.include_sensitive)
    else:  # DPP
        _, train_dists = group_score_distributions(train, model,
                                                   cfg.include_sensitive)
        qmap = dpp_mod.fit_dpp({k: d.samples for k, d in train_dists.items()},
                               target)
        final = model
        rows = []

    s_test = score_batch(final, test.design_matrix(
        include_sensitive=cfg.include_sensitive))
    if cfg.method == "DPP":
        s_test = s_test.copy()
        for k, idx in test.groups.items():
            s_test[idx] = dpp_mod.dpp_transform(qmap, k, s_test[idx])
    metrics_row = evaluate(test, s_test, target)
    metrics_row["method"] = cfg.method
    trace = RunTrace(rows, resolve_manifest(cfg))
    if return_state:
        return trace, metrics_row, final, pairs
    return trace, metrics_row


def persist_run(out_dir, trace, metrics_row, model=None, pairs=None, cfg=None):
    os.makedirs(out_dir, exist_ok=True)
    if trace.rows:
        trace.to_csv(os.path.join(out_dir, "trace.csv"))
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(trace.manifest, fh, indent=2, default=str)
    with open(os.path.join(out_dir, "metrics.json"), "w") as fh:
        json.dump(metrics_row, fh, indent=2)
    if model is not None:
        model.save(os.path.join(out_dir, "model.json"))
    if pairs is not None and cfg is not None:
        save_checkpoint(os.path.join(out_dir, "checkpoint.json"),
                        model, pairs, cfg.ot,
                        trace.rows[-1]["update"] if trace.rows else 0)
    return out_dir


def run_batch_sweep(cfg, batch_sizes, methods=("COT", "DOT")):
    """Final Wass1/Err-.5 per (method, batch size)."""
    rows = []
    for size in batch_sizes:
        for method in methods:
            c = replace(cfg, method=method,
                        ot=replace(cfg.ot, batch_scores=size, batch_target=size))
            _, metrics_row = run_experiment(c)
            rows.append({"method": method, "batch_size": size,
                         "wass1": metrics_row["wass1"],
                         "err05": metrics_row["err05"]})
    return rows


def phase_stats(rows, phases, recovery_factor=1.5):
    """Per-phase minimum Wass1, its position, and updates-to-recovery.

    Recovery is the first in-phase update where Wass1 drops to
    recovery_factor times the previous phase's minimum.
    """
    stats = []
    start = 0
    prev_min = None
    for p, (_, duration) in enumerate(phases):
        end = start + duration
        in_phase = [r for r in rows if start < r["update"] <= end]
        if not in_phase:
            break
        wass = np.array([r["wass1"] for r in in_phase])
        upd = np.array([r["update"] for r in in_phase])
        i_min = int(np.argmin(wass))
        rec = None
        if prev_min is not None:
            hit = np.nonzero(wass <= recovery_factor * prev_min)[0]
            rec = int(upd[hit[0]] - start) if hit.size else None
        stats.append({"phase": p, "min_wass1": float(wass[i_min]),
                      "updates_to_min": int(upd[i_min] - start),
                      "updates_to_recovery": rec})
        prev_min = float(wass[i_min])
        start = end
    return stats


def run_drift(cfg):
    """Run the configured method over the unfairness schedule.

    Evaluates on each phase's shifted held-out subset by default
    (cfg.eval_on_original switches to the fixed test split).
    """
    if cfg.schedule is None:
        raise ValueError("drift run requires a schedule")
    train, test = _load_and_split(cfg)
    schedule = _resolve_schedule(cfg, train)
    model = train_lr(train, cfg.lr_l2, include_sensitive=cfg.include_sensitive)
    target = build_target(train, model, cfg.target, cfg.include_sensitive)

    train_seeds = np.random.SeedSequence(cfg.ot.seed).spawn(len(schedule.phases))
    phases = []
    for (rates, duration), ss in zip(schedule.phases, train_seeds):
        child = ss.spawn(2)
        shifted_train = resample_positive_rate(train, rates, child[0])
        ev = test if cfg.eval_on_original else resample_positive_rate(
            test, rates, child[1])
        phases.append((shifted_train, duration, ev))

    ot = replace(cfg.ot, num_updates=schedule.total_updates)
    if cfg.method == "COT":
        final, rows, pairs = cot_run(model, phases, target, ot, cfg.trace_every,
                                     include_sensitive=cfg.include_sensitive)
    elif cfg.method == "DOT":
        final, rows = dot_run(model, phases, target, ot, cfg.trace_every,
                              include_sensitive=cfg.include_sensitive)
        pairs = None
    else:
        raise ValueError("drift runs support COT and DOT only")
    trace = RunTrace(rows, resolve_manifest(cfg))
    return trace, phase_stats(rows, schedule.phases), final, pairs


def export_dual_snapshot(pairs, grid):
    """Rows (x, potential value per group and side) on a score grid."""
    grid = np.asarray(grid, dtype=float)
    rows = []
    for x in grid:
        row = {"x": float(x)}
        for key in sorted(pairs):
            tag = "_".join(map(str, key))
            row[f"lambda_scores_{tag}"] = float(
                eval_potential(pairs[key].score_side, x))
            row[f"lambda_target_{tag}"] = float(
                eval_potential(pairs[key].target_side, x))
        rows.append(row)
    return rows


def save_checkpoint(path, model, pairs, ot_cfg, iteration, rng_state=None):
    """Text checkpoint: model weights, dual coefficients, feature maps."""
    payload = {
        "iteration": int(iteration),
        "theta": [float(t) for t in model.theta],
        "names": list(model.names),
        "ot": {"D": ot_cfg.D, "sigma2": ot_cfg.sigma2, "seed": ot_cfg.seed,
               "reg": ot_cfg.reg.kind, "reg_strength": ot_cfg.reg.strength},
        "groups": {},
        "rng_state": rng_state,
    }
    for key, pair in pairs.items():
        m = pair.score_side.map
        payload["groups"]["|".join(map(str, key))] = {
            "coeffs_scores": [float(c) for c in pair.score_side.coeffs],
            "coeffs_target": [float(c) for c in pair.target_side.coeffs],
            "omegas": [float(w) for w in m.omegas],
            "phases": [float(b) for b in m.phases],
            "sigma2": m.sigma2,
        }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    model = LogisticModel(np.array(payload["theta"]), payload["names"])
    pairs = {}
    for tag, g in payload["groups"].items():
        key = tuple(int(v) for v in tag.split("|"))
        m = RffMap(np.array(g["omegas"]), np.array(g["phases"]), g["sigma2"])
        pairs[key] = DualPair(DualPotential(np.array(g["coeffs_scores"]), m),
                              DualPotential(np.array(g["coeffs_target"]), m))
    return model, pairs, payload


def summary_table(run_dirs):
    """Aggregate metrics.json rows into Table-style summary rows."""
    rows = []
    for d in run_dirs:
        with open(os.path.join(d, "metrics.json")) as fh:
            row = json.load(fh)
        row["run"] = d
        rows.append(row)
    return rows
