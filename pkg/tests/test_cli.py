import json
import math
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from apxcp.cli import (DEFAULT_LAMBDA_GRID, DEFAULT_SCHEDULE, DESK_SCHEDULE,
                       ExperimentConfig, _ols_slope, build_parser, cmd_compare,
                       cmd_gen_data, cmd_region, cmd_select_lambda, cmd_sweep,
                       load_config, main, select_lambda_core)
from apxcp.data_io import load_csv
from apxcp.kernels import KernelSpec
from apxcp.losses import LossSpec


# --- config plumbing ---

def test_config_round_trip():
    cfg = ExperimentConfig(kernel=KernelSpec("gaussian_rbf", 0.3),
                           loss=LossSpec("pseudo_huber", 2.0),
                           alpha=0.2, seed=5, n=64, method="local_stability",
                           lambda_fixed=0.75, grid_lo=-3.0, grid_hi=3.0,
                           lambda_grid=(0.1, 1.0), n_schedule=(8, 12, 16, 24))
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    plain = ExperimentConfig()
    assert ExperimentConfig.from_dict(plain.to_dict()) == plain


def test_config_unknown_keys_rejected():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({"alpa": 0.1})
    with pytest.raises(ValueError, match="grid"):
        ExperimentConfig.from_dict({"grid": {"cells": 100}})
    with pytest.raises(ValueError, match="lambda_rule"):
        ExperimentConfig.from_dict({"lambda_rule": {"exponent": 0.33}})


@pytest.mark.parametrize("kwargs", [
    {"alpha": 1.2},
    {"alpha": 0.0},
    {"lambda_r": 1.0},
    {"lambda_c": 0.0},
    {"lambda_fixed": -1.0},
    {"n": 1},
    {"method": "bogus"},
    {"lambda_grid": ()},
    {"lambda_grid": (0.5, -0.1)},
    {"split_fraction": 1.0},
    {"d1_fraction": 0.0},
    {"cross_folds": 1},
    {"grid_m": 1},
    {"sweep_grid_m": 0},
    {"noise_sd": -0.5},
    {"sweep_repetitions": 0},
    {"compare_repetitions": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**kwargs)


def test_config_hash_is_stable_and_sensitive():
    a = ExperimentConfig(seed=1)
    b = ExperimentConfig(seed=1)
    c = ExperimentConfig(seed=2)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 12
    int(a.config_hash(), 16)


def test_lambda_rule_default_anchored_at_129():
    # rule calibrated so lambda(n+1 = 129) is exactly one half
    cfg = ExperimentConfig()
    assert cfg.lambda_for(129) == pytest.approx(0.5)
    fixed = ExperimentConfig(lambda_fixed=0.125)
    assert fixed.lambda_for(129) == 0.125
    assert fixed.lambda_for(10_000) == 0.125


def test_grid_override_and_default():
    cfg = ExperimentConfig(grid_lo=-2.0, grid_hi=4.0, grid_m=13)
    g = cfg.grid_for(np.array([0.0, 1.0]))
    assert (g.lo, g.hi, g.m) == (-2.0, 4.0, 13)
    auto = ExperimentConfig(grid_m=11).grid_for(np.array([2.0, 6.0]))
    assert (auto.lo, auto.hi, auto.m) == (0.0, 8.0, 11)
    finer = ExperimentConfig().grid_for(np.array([0.0, 1.0]), m=7)
    assert finer.m == 7


def test_load_config(tmp_path):
    assert load_config(None) == ExperimentConfig()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"alpha": 0.25, "n": 32,
                                "loss": {"family": "pseudo_huber", "a": 1.5}}))
    cfg = load_config(path, seed_override=9)
    assert cfg.alpha == 0.25 and cfg.n == 32 and cfg.seed == 9
    assert cfg.loss == LossSpec("pseudo_huber", 1.5)


def test_schedules():
    assert len(DEFAULT_SCHEDULE) == 15
    assert DEFAULT_SCHEDULE[0] == 128 and DEFAULT_SCHEDULE[-1] == 1024
    assert len(DESK_SCHEDULE) == 8
    assert DESK_SCHEDULE[0] == 32 and DESK_SCHEDULE[-1] == 256
    for sched in (DEFAULT_SCHEDULE, DESK_SCHEDULE):
        assert all(b > a for a, b in zip(sched, sched[1:]))


# --- small numeric helpers ---

def test_ols_slope_recovers_power_law():
    ns = [16, 32, 64, 128, 256]
    vals = [3.0 * n ** -1.5 for n in ns]
    slope, intercept, used = _ols_slope(ns, vals)
    assert slope == pytest.approx(-1.5)
    assert intercept == pytest.approx(math.log(3.0))
    assert used == 5


def test_ols_slope_drops_nonpositive_points():
    slope, _, used = _ols_slope([10, 20, 40, 80], [1.0, 0.0, float("nan"), 0.5])
    assert used == 2
    assert math.isfinite(slope)
    _, _, used_few = _ols_slope([10, 20], [0.0, 1.0])
    assert used_few == 1
    assert math.isnan(_ols_slope([10, 20], [0.0, 0.0])[0])


def test_select_lambda_core_rules():
    assert select_lambda_core([0.7], lambda lam: 5.0)[0] == 0.7
    # exact ties break toward the larger candidate
    chosen, averages = select_lambda_core([0.1, 0.5, 1.0], lambda lam: 2.0)
    assert chosen == 1.0 and averages == [2.0, 2.0, 2.0]
    # a family where bigger lambda provably inflates the measure
    chosen, _ = select_lambda_core([0.1, 0.5, 1.0], lambda lam: lam)
    assert chosen == 0.1
    with pytest.raises(ValueError, match="candidate"):
        select_lambda_core([], lambda lam: 0.0)


# --- commands ---

def _tiny_cfg(**kwargs):
    base = dict(n=20, seed=0, grid_m=101)
    base.update(kwargs)
    return ExperimentConfig(**base)


def test_gen_data_deterministic_and_stamped(tmp_path):
    cfg = _tiny_cfg()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    out1.mkdir(), out2.mkdir()
    p1 = cmd_gen_data(cfg, out1)
    p2 = cmd_gen_data(cfg, out2)
    assert p1.read_bytes() == p2.read_bytes()
    first = p1.read_text().splitlines()[0]
    assert first.startswith(f"# config_hash={cfg.config_hash()} version=")
    meta = json.loads((out1 / "meta.json").read_text())
    assert meta["command"] == "gen-data"
    assert meta["config_hash"] == cfg.config_hash()
    assert meta["dataset"]["generator"] == "friedman1"


def test_gen_data_region_round_trip(tmp_path):
    gen_out = tmp_path / "gen"
    gen_out.mkdir()
    data_path = cmd_gen_data(_tiny_cfg(), gen_out)
    cfg = _tiny_cfg(method="local_stability", data_csv=str(data_path))
    region_out = tmp_path / "region"
    region_out.mkdir()
    result = cmd_region(cfg, region_out)
    ds = load_csv(data_path)
    assert result["curve"].grid.m == cfg.grid_m
    assert ds.n == 20
    lines = (region_out / "region.csv").read_text().splitlines()
    header = lines[1].split(",")
    # level-1 envelopes travel with the curve
    assert header == ["y", "upper_p", "lower_p", "in_region", "tau_test", "rho1"]
    blob = json.loads((region_out / "region.json").read_text())
    assert blob["method"] == "local_stability"
    assert blob["alpha"] == cfg.alpha


def test_region_extreme_alpha_keeps_only_pvalue_one_cells(tmp_path):
    # alpha above every attainable p-value except the exact-tie value 1:
    # the region is precisely the cells whose upper p-value equals 1
    cfg = _tiny_cfg(alpha=0.999, n=21)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = cmd_region(cfg, tmp_path)
    region, curve = result["region"], result["curve"]
    np.testing.assert_array_equal(region.mask, curve.upper == 1.0)
    assert region.measure == pytest.approx(curve.grid.step * (curve.upper == 1.0).sum())


def test_region_outputs_byte_deterministic(tmp_path):
    cfg = _tiny_cfg(method="influence_function")
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        out.mkdir()
        cmd_region(cfg, out)
        outs.append(out)
    for fname in ("region.csv", "region.json", "meta.json"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_sweep_small_schedule(tmp_path):
    cfg = ExperimentConfig(n_schedule=(8, 12, 16, 24), sweep_repetitions=1,
                           sweep_grid_m=2001, seed=0)
    result = cmd_sweep(cfg, tmp_path)
    rows = result["rows"]
    assert len(rows) == 4 * 1 * 3
    assert all(r[8] == "ok" for r in rows)
    for r in rows:
        assert r[5] >= r[4]  # bound dominates the observed gap
        assert r[7] >= 0.0
    assert set(result["slopes"]) == {(k, q) for k in
                                     ("uniform_stability", "local_stability",
                                      "influence_function")
                                     for q in ("delta", "bound")}
    for fname in ("sweep.csv", "sweep_summary.csv", "sweep_slopes.csv", "meta.json"):
        assert (tmp_path / fname).exists()
    slope_lines = (tmp_path / "sweep_slopes.csv").read_text().splitlines()
    assert slope_lines[0].startswith("# config_hash=")
    assert slope_lines[1] == "method,quantity,slope,intercept,points"


def test_sweep_requires_four_schedule_points(tmp_path):
    cfg = ExperimentConfig(n_schedule=(8, 12, 16))
    with pytest.raises(ValueError, match="4 points"):
        cmd_sweep(cfg, tmp_path)


def test_compare_small_run(tmp_path):
    cfg = ExperimentConfig(n=30, compare_repetitions=2, grid_m=201, seed=1)
    result = cmd_compare(cfg, tmp_path)
    rows = result["rows"]
    assert len(rows) == 2 * 5
    assert all(r[6] == "ok" for r in rows)
    oracle_rows = [r for r in rows if r[1] == "OracleCP"]
    assert all(r[5] == 1.0 for r in oracle_rows)
    stats = result["stats"]
    assert set(stats) == {"SplitCP", "UStableCP", "LocStableCP",
                          "InfluenceFunctionCP", "OracleCP"}
    for rec in stats.values():
        assert rec["reps_ok"] == 2
        assert 0.0 <= rec["coverage"] <= 1.0
    assert (tmp_path / "compare.csv").exists()
    assert (tmp_path / "compare_summary.csv").exists()


def test_select_lambda_requires_approximate_method(tmp_path):
    cfg = _tiny_cfg(method="full")
    with pytest.raises(ValueError, match="approximate"):
        cmd_select_lambda(cfg, tmp_path)


def test_select_lambda_small_run(tmp_path):
    cfg = ExperimentConfig(n=12, seed=3, grid_m=101, method="local_stability",
                           lambda_grid=(0.5, 1.0))
    result = cmd_select_lambda(cfg, tmp_path)
    assert result["lam"] in cfg.lambda_grid
    assert len(result["averages"]) == 2
    lines = (tmp_path / "selection.csv").read_text().splitlines()
    assert lines[1] == "lam,avg_upper_measure,all_regions_full"
    assert len(lines) == 4
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["lam_chosen"] == result["lam"]
    assert (tmp_path / "region.csv").exists()
    assert (tmp_path / "region.json").exists()


def test_select_lambda_degenerate_full_regions_warn(tmp_path):
    # alpha below the p-value floor keeps every cell for every candidate
    cfg = ExperimentConfig(n=12, seed=3, grid_m=51, method="uniform_stability",
                           alpha=0.001, lambda_grid=(0.5, 1.0))
    with pytest.warns(RuntimeWarning, match="full-grid"):
        result = cmd_select_lambda(cfg, tmp_path)
    assert result["lam"] == 1.0  # tie rule picks the largest candidate


# --- argv plumbing ---

def test_main_gen_data_with_seed_override(tmp_path, capsys):
    out = tmp_path / "results"
    assert main(["gen-data", "--out", str(out), "--seed", "7"]) == 0
    assert (out / "data.csv").exists()
    meta = json.loads((out / "meta.json").read_text())
    assert meta["config"]["seed"] == 7
    assert "wrote" in capsys.readouterr().out


def test_main_region_from_config_file(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"n": 20, "grid": {"m": 101},
                                    "method": "influence_function"}))
    out = tmp_path / "out"
    code = main(["region", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    captured = capsys.readouterr().out
    assert "method=influence_function" in captured
    assert "measure=" in captured
    assert (out / "region.json").exists()


def test_main_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("apxcp ")


def test_parser_rejects_missing_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_default_lambda_grid_positive():
    assert all(l > 0 for l in DEFAULT_LAMBDA_GRID)
    assert list(DEFAULT_LAMBDA_GRID) == sorted(DEFAULT_LAMBDA_GRID)
