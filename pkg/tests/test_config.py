import json

import pytest

from cffed.config import ConfigError, ExperimentConfig, SweepAxes, config_from_dict, load_config


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.drops == 10 and cfg.scenario.num_csps == 30
    assert cfg.sweep.pairs()[0] == (15, 8)


def test_partial_document_merges_over_defaults():
    cfg = config_from_dict({"scenario": {"num_csps": 15}, "solver": {"node_limit": 50, "lam": 2.0}, "drops": 3})
    assert cfg.scenario.num_csps == 15 and cfg.scenario.num_ues == 24
    assert cfg.solver.milp.node_limit == 50 and cfg.solver.lam == 2.0
    assert cfg.drops == 3


def test_clutter_and_sweep_sections():
    cfg = config_from_dict({"channel": {"clutter": {"density": 0.3}}, "sweep": {"configurations": [[15, 32]]}})
    assert cfg.channel.clutter.density == 0.3
    assert cfg.sweep.pairs() == [(15, 32)]


@pytest.mark.parametrize("doc, path", [
    ({"scenario": {"foo": 1}}, "scenario.foo"),
    ({"bogus": 1}, "bogus"),
    ({"scenario": {"num_csps": "many"}}, "scenario.num_csps"),
    ({"scenario": {"pilot_len": 300}}, "scenario"),
    ({"channel": {"clutter": {"density": 2.0}}}, "channel.clutter"),
    ({"solver": {"node_limit": 0}}, "solver.node_limit"),
    ({"solver": {"lam": -1.0}}, "solver"),
    ({"sweep": {"rates_mbps": []}}, "sweep"),
    ({"drops": 0}, "drops"),
    ({"energy": {"eta_max": 2.0}}, "energy"),
])
def test_errors_name_the_field(doc, path):
    with pytest.raises(ConfigError) as err:
        config_from_dict(doc)
    assert str(err.value).startswith(path)


def test_load_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_roundtrip_and_digest(tmp_path):
    cfg = config_from_dict({"scenario": {"num_csps": 15}, "out_path": "a.csv"})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    back = load_config(path)
    assert back.to_dict() == cfg.to_dict()
    assert back.digest() == cfg.with_overrides(out_path="b.csv").digest()
    assert back.digest() != cfg.with_overrides(drops=3).digest()


def test_sweep_axes_validation():
    with pytest.raises(ValueError):
        SweepAxes(csp_counts=(0,))
    with pytest.raises(ValueError):
        SweepAxes(configurations=((15,),))
