"""Large-scale fading for the 3GPP indoor-factory, sparse-clutter/high-BS
(InF-SH) scenario, and the MMSE estimate variance it induces."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .scenario import HallGeometry, Scenario

THERMAL_NOISE_DBM_PER_HZ = -174.0


def thermal_noise_w(bandwidth_hz: float = 20e6, noise_figure_db: float = 7.0) -> float:
    dbm = THERMAL_NOISE_DBM_PER_HZ + 10 * math.log10(bandwidth_hz) + noise_figure_db
    return 10 ** ((dbm - 30) / 10)


DEFAULT_NOISE_W = thermal_noise_w()
DEFAULT_PILOT_POWER_W = 0.1


@dataclass(frozen=True)
class Clutter:
    density: float = 0.2       # r
    size_m: float = 10.0       # d_clutter
    height_m: float = 2.0      # h_c

    def __post_init__(self):
        if not 0 < self.density < 1:
            raise ValueError("clutter density must lie in (0, 1)")
        if self.size_m <= 0 or self.height_m <= 0:
            raise ValueError("clutter size and height must be positive")


@dataclass(frozen=True)
class ChannelParams:
    pilot_snr: float = DEFAULT_PILOT_POWER_W / DEFAULT_NOISE_W
    noise_power_w: float = DEFAULT_NOISE_W
    shadowing_enabled: bool = True
    clutter: Clutter = Clutter()
    shadow_std_los_db: float = 4.3
    shadow_std_nlos_db: float = 5.9

    def __post_init__(self):
        if self.pilot_snr <= 0 or self.noise_power_w <= 0:
            raise ValueError("pilot SNR and noise power must be positive")
        if isinstance(self.clutter, dict):
            object.__setattr__(self, "clutter", Clutter(**self.clutter))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    beta: np.ndarray     # K x S linear gains
    gamma: np.ndarray    # K x S MMSE estimate variances
    los: np.ndarray      # K x S bool
    noise_power_w: float

    def __post_init__(self):
        if self.beta.shape != self.gamma.shape or self.beta.shape != self.los.shape:
            raise ValueError("beta, gamma and los must share one K x S shape")
        if not ((self.gamma > 0) & (self.gamma <= self.beta)).all():
            raise ValueError("MMSE variances must satisfy 0 < gamma <= beta")

    @property
    def shape(self):
        return self.beta.shape


def los_probability(d_2d, hall: HallGeometry, clutter: Clutter = Clutter()):
    """Probability that a link is line of sight (InF-SH)."""
    if clutter.height_m <= hall.ue_height_m:
        raise ValueError("clutter height must exceed the UE height")
    d_2d = np.asarray(d_2d, dtype=float)
    if (d_2d < 0).any():
        raise ValueError("distance must be non-negative")
    k_subsce = (
        -clutter.size_m / math.log(1 - clutter.density)
        * (hall.csp_height_m - hall.ue_height_m) / (clutter.height_m - hall.ue_height_m)
    )
    p = np.exp(-d_2d / k_subsce)
    return float(p) if p.ndim == 0 else p


def path_loss_db(d_3d, fc_hz: float, los, shadow_db=0.0):
    """InF path loss in dB; distances below 1 m are clamped to 1 m."""
    d = np.maximum(np.asarray(d_3d, dtype=float), 1.0)
    fc_ghz = fc_hz / 1e9
    pl_los = 31.84 + 21.5 * np.log10(d) + 19.0 * math.log10(fc_ghz)
    pl_sh = 32.4 + 23.0 * np.log10(d) + 20.0 * math.log10(fc_ghz)
    pl = np.where(los, pl_los, np.maximum(pl_los, pl_sh)) + shadow_db
    return float(pl) if pl.ndim == 0 else pl


def mmse_variance(beta, tau_p: int, pilot_snr: float):
    beta = np.asarray(beta, dtype=float)
    if (beta <= 0).any():
        raise ValueError("beta must be positive")
    snr = tau_p * pilot_snr * beta
    g = snr * beta / (snr + 1)
    return float(g) if g.ndim == 0 else g


def link_distances(scenario: Scenario):
    diff = scenario.ue_positions[:, None, :] - scenario.csp_positions[None, :, :]
    d_2d = np.hypot(diff[..., 0], diff[..., 1])
    d_3d = np.sqrt(d_2d**2 + diff[..., 2] ** 2)
    return d_2d, d_3d


def realize_channel(scenario: Scenario, params: ChannelParams, rng: np.random.Generator) -> ChannelRealization:
    cfg = scenario.config
    d_2d, d_3d = link_distances(scenario)
    # draw both arrays unconditionally so the stream position never depends on flags
    u = rng.uniform(size=d_2d.shape)
    n = rng.standard_normal(size=d_2d.shape)
    los = u < los_probability(d_2d, scenario.hall, params.clutter)
    shadow = np.where(los, params.shadow_std_los_db, params.shadow_std_nlos_db) * n
    if not params.shadowing_enabled:
        shadow = np.zeros_like(shadow)
    beta = 10 ** (-path_loss_db(d_3d, cfg.carrier_hz, los, shadow) / 10)
    gamma = mmse_variance(beta, cfg.pilot_len, params.pilot_snr)
    return ChannelRealization(beta=beta, gamma=gamma, los=los, noise_power_w=params.noise_power_w)


def save_channel_csv(channel: ChannelRealization, path) -> None:
    """One row per (matrix, UE); one column per CSP."""
    K, S = channel.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["matrix", "ue"] + [f"csp{s}" for s in range(S)])
        w.writerow(["noise_power_w", ""] + [repr(float(channel.noise_power_w))] + [""] * (S - 1))
        for name in ("beta", "gamma", "los"):
            mat = getattr(channel, name)
            for k in range(K):
                vals = [str(int(v)) for v in mat[k]] if name == "los" else [repr(float(v)) for v in mat[k]]
                w.writerow([name, k] + vals)


def load_channel_csv(path) -> ChannelRealization:
    rows = {"beta": [], "gamma": [], "los": []}
    noise = None
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row[0] == "noise_power_w":
                noise = float(row[2])
            else:
                rows[row[0]].append(row[2:])
    if noise is None:
        raise ValueError(f"{path}: missing noise_power_w row")
    return ChannelRealization(
        beta=np.array(rows["beta"], dtype=float),
        gamma=np.array(rows["gamma"], dtype=float),
        los=np.array(rows["los"], dtype=int).astype(bool),
        noise_power_w=noise,
    )
