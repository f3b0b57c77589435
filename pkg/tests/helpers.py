"""Small fixtures shared by several test modules."""

import numpy as np

from cffed.channel import ChannelParams, ChannelRealization, realize_channel
from cffed.model import FederationProblem, RateRequirement
from cffed.scenario import ScenarioConfig, build_scenario, spawn_streams


def drop_problem(rate_mbps=20.0, seed=0, **cfg):
    """One default-style drop with the given overrides."""
    config = ScenarioConfig(rate_thr_bps=rate_mbps * 1e6, seed=seed, **cfg)
    scenario = build_scenario(config)
    channel = realize_channel(scenario, ChannelParams(), spawn_streams(seed)["channel"])
    return FederationProblem.from_rate(scenario, channel, config.rate_thr_bps)


def fixed_problem(beta, gamma, thr, noise=3.98e-13, **cfg):
    """Problem over hand-written gains; beta and gamma are K x S."""
    beta = np.asarray(beta, dtype=float)
    K, S = beta.shape
    defaults = dict(num_csps=S, num_ecsps=1, num_ues=K, num_federations=1, pilot_len=max(K, 1))
    defaults.update(cfg)
    scenario = build_scenario(ScenarioConfig(**defaults))
    channel = ChannelRealization(beta, np.asarray(gamma, dtype=float), np.ones_like(beta, dtype=bool), noise)
    req = RateRequirement(np.zeros(K), np.full(K, float(thr)))
    return FederationProblem(scenario, channel, req)
