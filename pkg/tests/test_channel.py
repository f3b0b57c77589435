from fractions import Fraction

import mpmath
import numpy as np
import pytest

from cffed.channel import (
    ChannelParams, ChannelRealization, Clutter, link_distances, load_channel_csv, los_probability,
    mmse_variance, path_loss_db, realize_channel, save_channel_csv,
)
from cffed.scenario import HallGeometry, ScenarioConfig, build_scenario, spawn_streams

HALL = HallGeometry()


def test_los_probability_values():
    assert los_probability(0.0, HALL) == 1.0
    assert los_probability(20.0, HALL) == pytest.approx(0.974, abs=5e-4)
    assert los_probability(5.0, HALL) > los_probability(15.0, HALL)


def test_los_probability_rejects_low_clutter():
    with pytest.raises(ValueError):
        los_probability(1.0, HALL, Clutter(height_m=1.0))


def test_path_loss_goldens():
    assert path_loss_db(10.0, 3e9, True) == pytest.approx(62.40, abs=0.01)
    assert path_loss_db(1.0, 3e9, True) == pytest.approx(40.90, abs=0.01)
    assert path_loss_db(0.3, 3e9, True) == path_loss_db(1.0, 3e9, True)


def test_path_loss_nlos_dominates_and_monotone():
    d = np.linspace(1, 30, 50)
    assert (path_loss_db(d, 3e9, False) >= path_loss_db(d, 3e9, True)).all()
    for los in (True, False):
        assert (np.diff(path_loss_db(d, 3e9, los)) >= 0).all()


def test_mmse_variance_high_precision():
    mpmath.mp.dps = 50
    beta, tau_p, snr = 1e-8, 12, 1e4
    exact = Fraction(tau_p) * Fraction(snr) * Fraction(beta) ** 2 / (Fraction(tau_p) * Fraction(snr) * Fraction(beta) + 1)
    ref = mpmath.mpf(exact.numerator) / exact.denominator
    got = mmse_variance(beta, tau_p, snr)
    assert abs(mpmath.mpf(got) - ref) / ref < 1e-15


def test_mmse_variance_identities():
    beta = 2e-9
    assert mmse_variance(beta, 1, 1 / beta) == pytest.approx(beta / 2, rel=1e-15)
    assert mmse_variance(beta, 12, 1e30) == pytest.approx(beta, rel=1e-12)
    lo, hi = mmse_variance(beta, 12, 1e3), mmse_variance(beta, 12, 1e6)
    assert 0 < lo < hi < beta


def test_realization_invariants_on_random_draws():
    sc = build_scenario(ScenarioConfig(num_csps=15))
    rng = np.random.default_rng(7)
    for _ in range(100):
        ch = realize_channel(sc, ChannelParams(), rng)
        assert ((ch.gamma > 0) & (ch.gamma <= ch.beta)).all()


def test_nearest_csp_strongest_without_shadowing():
    sc = build_scenario(ScenarioConfig(num_csps=15, seed=3))
    params = ChannelParams(shadowing_enabled=False, clutter=Clutter(density=1e-9))
    ch = realize_channel(sc, params, np.random.default_rng(0))
    assert ch.los.all()
    _, d3 = link_distances(sc)
    assert (np.argmax(ch.beta, axis=1) == np.argmin(d3, axis=1)).all()


def test_realization_deterministic_given_stream():
    sc = build_scenario(ScenarioConfig(seed=9))
    a = realize_channel(sc, ChannelParams(), spawn_streams(9)["channel"])
    b = realize_channel(sc, ChannelParams(), spawn_streams(9)["channel"])
    assert np.array_equal(a.beta, b.beta) and np.array_equal(a.los, b.los)


def test_realization_rejects_bad_gamma():
    with pytest.raises(ValueError):
        ChannelRealization(np.ones((1, 1)), np.full((1, 1), 2.0), np.ones((1, 1), bool), 1e-13)


def test_channel_csv_roundtrip(tmp_path):
    sc = build_scenario(ScenarioConfig(num_csps=15))
    ch = realize_channel(sc, ChannelParams(), np.random.default_rng(1))
    save_channel_csv(ch, tmp_path / "ch.csv")
    back = load_channel_csv(tmp_path / "ch.csv")
    assert np.array_equal(back.beta, ch.beta)
    assert np.array_equal(back.gamma, ch.gamma)
    assert np.array_equal(back.los, ch.los)
    assert back.noise_power_w == ch.noise_power_w
