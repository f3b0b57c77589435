import numpy as np
import pytest

from cffed.scenario import (
    HallGeometry, ScenarioConfig, StructuralInfeasibilityError, build_scenario, drop_ues,
    grid_shape, partition_ecsps, place_csps, spawn_streams,
)

HALL = HallGeometry()


@pytest.mark.parametrize("count, shape", [(15, (5, 3)), (30, (8, 4)), (60, (10, 6)), (1, (1, 1))])
def test_grid_shape(count, shape):
    assert grid_shape(count, HALL) == shape


def test_place_15_csps():
    pts = place_csps(15, HALL)
    assert sorted(set(pts[:, 0])) == [2.0, 6.0, 10.0]
    assert sorted(set(pts[:, 1])) == [2.0, 6.0, 10.0, 14.0, 18.0]
    assert (pts[:, 2] == 10.0).all()


def test_place_single_csp_at_center():
    assert place_csps(1, HALL).tolist() == [[6.0, 10.0, 10.0]]


def test_place_30_csps_inside_hall():
    pts = place_csps(30, HALL)
    assert len(pts) == 30
    assert (pts[:, 0] > 0).all() and (pts[:, 0] < 12).all()
    assert (pts[:, 1] > 0).all() and (pts[:, 1] < 20).all()


@pytest.mark.parametrize("count", [15, 60])
def test_full_grid_is_symmetric(count):
    pts = place_csps(count, HALL)
    mirrored = np.column_stack([12 - pts[:, 0], 20 - pts[:, 1], pts[:, 2]])
    key = lambda a: sorted(map(tuple, np.round(a, 9)))
    assert key(pts) == key(mirrored)


@pytest.mark.parametrize("S, n, sizes", [(15, 5, [3] * 5), (7, 3, [3, 2, 2]), (30, 1, [30])])
def test_partition_sizes(S, n, sizes):
    parts = partition_ecsps(place_csps(S, HALL), n)
    assert [len(p) for p in parts] == sizes
    flat = sorted(i for p in parts for i in p)
    assert flat == list(range(S))


def test_partition_strips_are_contiguous():
    pos = place_csps(15, HALL)
    parts = partition_ecsps(pos, 5)
    for p in parts:
        assert len(set(pos[list(p), 1])) == 1


def test_drop_ues_bounds_and_determinism():
    a = drop_ues(24, HALL, np.random.default_rng(5))
    b = drop_ues(24, HALL, np.random.default_rng(5))
    assert np.array_equal(a, b)
    assert a.shape == (24, 3)
    assert (a[:, 0] >= 0).all() and (a[:, 0] <= 12).all()
    assert (a[:, 1] >= 0).all() and (a[:, 1] <= 20).all()
    assert (a[:, 2] == 1.5).all()


def test_drop_ues_mean():
    pts = drop_ues(100_000, HALL, np.random.default_rng(1))
    assert pts[:, 0].mean() == pytest.approx(6.0, rel=0.01)
    assert pts[:, 1].mean() == pytest.approx(10.0, rel=0.01)


def test_build_default_scenario():
    sc = build_scenario(ScenarioConfig())
    assert (sc.S, sc.K, sc.num_ecsps) == (30, 24, 5)
    assert sorted(sc.csp_to_ecsp.tolist()) == sorted(sum(([e] * len(p) for e, p in enumerate(sc.ecsp_partition)), []))


def test_build_scenario_structural_infeasibility():
    with pytest.raises(StructuralInfeasibilityError):
        build_scenario(ScenarioConfig(num_federations=1, pilot_len=12, num_ues=24))


def test_scenario_determinism_and_roundtrip():
    cfg = ScenarioConfig(num_csps=15, seed=42)
    a, b = build_scenario(cfg), build_scenario(cfg)
    assert a.to_json() == b.to_json()
    c = type(a).from_dict(a.to_dict())
    assert c.to_json() == a.to_json()


def test_streams_are_independent():
    s1 = spawn_streams(3)
    s2 = spawn_streams(3)
    assert s1["ue_drop"].random() == s2["ue_drop"].random()
    assert spawn_streams(3)["ue_drop"].random() != spawn_streams(3)["channel"].random()


@pytest.mark.parametrize("kwargs", [dict(pilot_len=200), dict(num_ecsps=40), dict(num_csps=0), dict(rate_thr_bps=-1)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ScenarioConfig(**kwargs)


def test_hall_validation():
    with pytest.raises(ValueError):
        HallGeometry(ue_height_m=10.0)
    with pytest.raises(ValueError):
        HallGeometry(csp_height_m=11.0)
