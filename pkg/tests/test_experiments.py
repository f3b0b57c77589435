import dataclasses
import json

import pytest

from cffed.config import ExperimentConfig, SweepAxes
from cffed.experiments import (
    CSV_COLUMNS, drop_seed, read_rows, run_federation_sweep, run_single, run_sweep,
)
from cffed.scenario import ScenarioConfig


def small(**top):
    sweep = SweepAxes(rates_mbps=(0.0, 40.0), configurations=((15, 16),), federation_counts=(1, 2, 3, 4))
    base = dict(scenario=ScenarioConfig(num_csps=15, seed=11), sweep=sweep, drops=2)
    base.update(top)
    return ExperimentConfig(**base)


def test_run_single_zero_rate():
    cfg = small()
    row, sol = run_single(dataclasses.replace(cfg, scenario=dataclasses.replace(cfg.scenario, rate_thr_bps=0.0)))
    assert row.feasible and row.total_power_w == 0.0 and row.active_csps == 0


def test_run_single_infeasible_row_has_empty_power():
    cfg = small()
    sc = dataclasses.replace(cfg.scenario, antennas_per_csp=8, rate_thr_bps=96e6)
    row, _ = run_single(dataclasses.replace(cfg, scenario=sc))
    assert not row.feasible
    assert row.total_power_w is None and row.active_csps is None


def test_drop_seed_is_stable():
    assert drop_seed(0, 0) == drop_seed(0, 0)
    assert drop_seed(0, 0) != drop_seed(0, 1) != drop_seed(1, 0)


def test_sweep_structure_and_aggregates(tmp_path):
    rows = run_sweep(small(), tmp_path / "s.csv")
    assert [r.kind for r in rows] == ["drop", "drop", "aggregate"] * 2
    back = read_rows(tmp_path / "s.csv")
    assert list(back[0]) == list(CSV_COLUMNS)
    for i in (2, 5):
        agg, drops = back[i], back[i - 2:i]
        ok = [d for d in drops if d["feasible"]]
        assert agg["feasible_fraction"] == len(ok) / 2
        if ok:
            mean = sum(d["total_power_w"] for d in ok) / len(ok)
            assert agg["total_power_w"] == pytest.approx(mean, rel=1e-9)
    manifest = json.loads((tmp_path / "s.manifest.json").read_text())
    assert manifest["config_sha256"] == small().digest()
    assert set(manifest["versions"]) >= {"python", "numpy"}


def test_sweep_is_byte_identical(tmp_path):
    run_sweep(small(), tmp_path / "a.csv")
    run_sweep(small(), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_federation_sweep_pilot_lengths(tmp_path):
    cfg = small(drops=1)
    cfg = dataclasses.replace(cfg, sweep=dataclasses.replace(cfg.sweep, rates_mbps=(0.0,)))
    rows = run_federation_sweep(cfg, tmp_path / "f.csv")
    drops = [r for r in rows if r.kind == "drop"]
    assert [r.tau_p for r in drops] == [24, 12, 8, 6]
    assert [r.federations for r in drops] == [1, 2, 3, 4]


def test_federation_sweep_rejects_uneven_split(tmp_path):
    cfg = small(drops=1)
    cfg = dataclasses.replace(cfg, sweep=dataclasses.replace(cfg.sweep, federation_counts=(5,)))
    with pytest.raises(ValueError):
        run_federation_sweep(cfg, tmp_path / "f.csv")
