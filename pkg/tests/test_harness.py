"""Experiment harness: configs, runs, persistence, CLI, checkpoints."""
import json
import os

import numpy as np
import pytest

from otfair import cli, synthetic
from otfair.cot import OtConfig
from otfair.harness import (ExperimentConfig, RunTrace, build_target,
                            load_checkpoint, load_config, persist_run,
                            phase_stats, run_batch_sweep, run_drift,
                            run_experiment, save_checkpoint, summary_table)
from otfair.metrics import EmpiricalDistribution


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("harness") / "small.csv"
    synthetic.write_csv(path, 600, seed=3)
    return str(path)


def _config_text(dataset, extra=""):
    schema = "\n".join(f"{k} = {v}" for k, v in synthetic.SCHEMA.items())
    return (f"[experiment]\ndataset = {dataset}\nupdates = 40\n"
            f"batch_scores = 8\nbatch_target = 8\ntrace_every = 20\n"
            f"{extra}\n[schema]\n{schema}\n")


@pytest.fixture(scope="module")
def config_path(small_csv, tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "exp.ini"
    p.write_text(_config_text(small_csv))
    return str(p)


def test_load_config_parses_fields(config_path, small_csv):
    cfg = load_config(config_path)
    assert cfg.dataset == small_csv
    assert cfg.ot.num_updates == 40
    assert cfg.ot.batch_scores == 8
    assert cfg.ot.eps_theta is None  # method default applies at run time
    assert cfg.method == "COT"
    assert cfg.schema["race"] == "sensitive"


def test_load_config_schedule_section(small_csv, tmp_path):
    p = tmp_path / "drift.ini"
    p.write_text(_config_text(
        small_csv) + "[schedule]\ngroup = gender=female\nrates = 0.3 0.1\n"
                     "duration = 20\n")
    cfg = load_config(str(p))
    assert cfg.schedule is not None
    assert cfg.schedule._raw_rates == [0.3, 0.1]
    assert cfg.schedule.total_updates == 40


def test_experiment_config_rejects_unknown_method():
    with pytest.raises(ValueError):
        ExperimentConfig(method="SVM")


@pytest.mark.parametrize("method", ["LR", "COT", "DOT", "DPP"])
def test_run_experiment_all_methods(config_path, method):
    cfg = load_config(config_path)
    cfg.method = method
    trace, row = run_experiment(cfg)
    assert set(row) >= {"err05", "wass1", "sdd", "spdd", "method"}
    assert 0.0 <= row["err05"] <= 1.0
    assert row["wass1"] >= 0.0
    if method in ("COT", "DOT"):
        assert trace.rows[-1]["update"] == 40


def test_dpp_drives_wass1_near_zero(config_path):
    cfg = load_config(config_path)
    cfg.method = "DPP"
    _, dpp_row = run_experiment(cfg)
    cfg.method = "LR"
    _, lr_row = run_experiment(cfg)
    assert dpp_row["wass1"] < lr_row["wass1"]


def test_run_traces_identical_across_invocations(config_path, tmp_path):
    cfg = load_config(config_path)
    payloads = []
    for name in ("a", "b"):
        trace, row, model, pairs = run_experiment(cfg, return_state=True)
        out = persist_run(str(tmp_path / name), trace, row, model, pairs, cfg)
        with open(os.path.join(out, "trace.csv"), "rb") as fh:
            payloads.append(fh.read())
    assert payloads[0] == payloads[1]


def test_persist_run_writes_artifacts(config_path, tmp_path):
    cfg = load_config(config_path)
    trace, row, model, pairs = run_experiment(cfg, return_state=True)
    out = persist_run(str(tmp_path / "run"), trace, row, model, pairs, cfg)
    for name in ("trace.csv", "manifest.json", "metrics.json", "model.json",
                 "checkpoint.json"):
        assert os.path.exists(os.path.join(out, name))
    with open(os.path.join(out, "manifest.json")) as fh:
        manifest = json.load(fh)
    assert manifest["ot"]["num_updates"] == 40


def test_run_trace_csv_round_trip(tmp_path):
    rows = [{"update": 0, "wass1": 0.5, "err05": 0.2},
            {"update": 50, "wass1": 0.25, "err05": 0.21}]
    trace = RunTrace(rows, {})
    path = tmp_path / "trace.csv"
    trace.to_csv(str(path))
    back = RunTrace.read_csv(str(path))
    assert back == rows


def test_checkpoint_round_trip(config_path, tmp_path):
    cfg = load_config(config_path)
    _, _, model, pairs = run_experiment(cfg, return_state=True)
    path = str(tmp_path / "ckpt.json")
    save_checkpoint(path, model, pairs, cfg.ot, iteration=40)
    model2, pairs2, payload = load_checkpoint(path)
    assert payload["iteration"] == 40
    assert np.allclose(model.theta, model2.theta)
    for key in pairs:
        assert np.allclose(pairs[key].score_side.coeffs,
                           pairs2[key].score_side.coeffs)
        assert np.allclose(pairs[key].score_side.map.omegas,
                           pairs2[key].score_side.map.omegas)


def test_build_target_specs(census, base_model):
    bary = build_target(census, base_model, "barycenter")
    pool = build_target(census, base_model, "pooled")
    grp = build_target(census, base_model, "group:gender=male")
    assert isinstance(bary, EmpiricalDistribution)
    assert pool.n == census.n
    assert grp.n == sum(len(census.groups[k]) for k in census.group_keys
                        if k[census.sensitive_names.index("gender")]
                        == census.sensitive_levels[
                            census.sensitive_names.index("gender")].index("male"))
    with pytest.raises(ValueError):
        build_target(census, base_model, "median")
    with pytest.raises(ValueError):
        build_target(census, base_model, "group:gender=unknown")


def test_phase_stats_hand_case():
    rows = ([{"update": u, "wass1": 1.0 - u / 100.0} for u in range(10, 101, 10)]
            + [{"update": u, "wass1": 0.5} for u in range(110, 201, 10)])
    stats = phase_stats(rows, [({}, 100), ({}, 100)], recovery_factor=1.5)
    assert stats[0]["min_wass1"] == pytest.approx(0.0)
    assert stats[0]["updates_to_min"] == 100
    assert stats[0]["updates_to_recovery"] is None
    assert stats[1]["min_wass1"] == pytest.approx(0.5)
    assert stats[1]["updates_to_min"] == 10


def test_run_batch_sweep_shape(config_path):
    cfg = load_config(config_path)
    rows = run_batch_sweep(cfg, [4, 8])
    assert len(rows) == 4
    assert {r["method"] for r in rows} == {"COT", "DOT"}
    assert {r["batch_size"] for r in rows} == {4, 8}


def test_run_drift_requires_schedule(config_path):
    cfg = load_config(config_path)
    with pytest.raises(ValueError):
        run_drift(cfg)


def test_run_drift_small(small_csv, tmp_path):
    p = tmp_path / "drift.ini"
    p.write_text(_config_text(
        small_csv) + "[schedule]\ngroup = gender=female\nrates = 0.3 0.1\n"
                     "duration = 20\n")
    cfg = load_config(str(p))
    trace, stats, model, pairs = run_drift(cfg)
    assert trace.rows[-1]["update"] == 40
    assert len(stats) == 2


def test_cli_run_and_table(config_path, tmp_path, capsys):
    out = str(tmp_path / "lr_run")
    rc = cli.main(["run", "--config", config_path, "--method", "LR",
                   "--out", out])
    assert rc == 0
    assert os.path.exists(os.path.join(out, "metrics.json"))
    rc = cli.main(["table", out])
    assert rc == 0
    assert "err05" in capsys.readouterr().out


def test_cli_overrides_apply(config_path, tmp_path):
    out = str(tmp_path / "cot_run")
    rc = cli.main(["run", "--config", config_path, "--method", "COT",
                   "--updates", "20", "--trace-every", "10", "--out", out])
    assert rc == 0
    rows = RunTrace.read_csv(os.path.join(out, "trace.csv"))
    assert rows[-1]["update"] == 20


def test_cli_export_duals(config_path, tmp_path):
    out = str(tmp_path / "cot_run")
    cli.main(["run", "--config", config_path, "--method", "COT",
              "--out", out])
    rc = cli.main(["export-duals", "--checkpoint",
                   os.path.join(out, "checkpoint.json"), "--grid", "11"])
    assert rc == 0
    with open(os.path.join(out, "duals.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert len(lines) == 12  # header plus grid rows


def test_summary_table_reads_metrics(config_path, tmp_path):
    cfg = load_config(config_path)
    cfg.method = "LR"
    trace, row = run_experiment(cfg)
    out = persist_run(str(tmp_path / "lr"), trace, row)
    rows = summary_table([out])
    assert rows[0]["method"] == "LR"
