"""Indoor-factory deployments: ceiling CSP grid, ECSP partition and UE drops."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

STREAMS = ("ue_drop", "channel", "solver")


class StructuralInfeasibilityError(ValueError):
    """More UEs than the federations can hold with orthogonal pilots."""


@dataclass(frozen=True)
class HallGeometry:
    width_m: float = 12.0
    length_m: float = 20.0
    height_m: float = 10.0
    csp_height_m: float = 10.0
    ue_height_m: float = 1.5

    def __post_init__(self):
        if min(self.width_m, self.length_m, self.height_m, self.csp_height_m, self.ue_height_m) <= 0:
            raise ValueError("hall dimensions must be positive")
        if self.csp_height_m > self.height_m:
            raise ValueError("CSPs cannot be mounted above the ceiling")
        if self.ue_height_m >= self.csp_height_m:
            raise ValueError("UEs must sit below the CSPs")


@dataclass(frozen=True)
class ScenarioConfig:
    num_csps: int = 30
    num_ecsps: int = 5
    antennas_per_csp: int = 16
    num_ues: int = 24
    num_federations: int = 2
    pilot_len: int = 12
    coherence_len: int = 200
    carrier_hz: float = 3e9
    rate_thr_bps: float = 20e6
    seed: int = 0

    def __post_init__(self):
        for name in ("num_csps", "num_ecsps", "antennas_per_csp", "num_ues", "num_federations", "pilot_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not self.pilot_len < self.coherence_len:
            raise ValueError("pilot_len must be smaller than coherence_len")
        if self.num_ecsps > self.num_csps:
            raise ValueError("every ECSP needs at least one CSP")
        if self.carrier_hz <= 0 or self.rate_thr_bps < 0:
            raise ValueError("carrier must be positive and rate non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def structurally_feasible(self) -> bool:
        return self.num_ues <= self.num_federations * self.pilot_len

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Scenario:
    config: ScenarioConfig
    hall: HallGeometry
    csp_positions: np.ndarray      # S x 3
    ue_positions: np.ndarray       # K x 3
    ecsp_partition: tuple          # tuple of sorted index tuples
    csp_to_ecsp: np.ndarray = field(init=False)

    def __post_init__(self):
        owner = np.full(len(self.csp_positions), -1, dtype=int)
        for e, members in enumerate(self.ecsp_partition):
            for s in members:
                if owner[s] != -1:
                    raise ValueError(f"CSP {s} belongs to more than one ECSP")
                owner[s] = e
        if (owner < 0).any():
            raise ValueError("ECSP partition does not cover every CSP")
        for pts in (self.csp_positions, self.ue_positions):
            inside = (
                (pts[:, 0] >= 0) & (pts[:, 0] <= self.hall.width_m)
                & (pts[:, 1] >= 0) & (pts[:, 1] <= self.hall.length_m)
                & (pts[:, 2] >= 0) & (pts[:, 2] <= self.hall.height_m)
            )
            if not inside.all():
                raise ValueError("position outside the hall")
        for arr in (self.csp_positions, self.ue_positions, owner):
            arr.flags.writeable = False
        object.__setattr__(self, "csp_to_ecsp", owner)

    @property
    def S(self) -> int:
        return len(self.csp_positions)

    @property
    def K(self) -> int:
        return len(self.ue_positions)

    @property
    def num_ecsps(self) -> int:
        return len(self.ecsp_partition)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "hall": asdict(self.hall),
            "csp_positions": self.csp_positions.tolist(),
            "ue_positions": self.ue_positions.tolist(),
            "ecsp_partition": [list(p) for p in self.ecsp_partition],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        return cls(
            config=ScenarioConfig(**doc["config"]),
            hall=HallGeometry(**doc["hall"]),
            csp_positions=np.array(doc["csp_positions"], dtype=float).reshape(-1, 3),
            ue_positions=np.array(doc["ue_positions"], dtype=float).reshape(-1, 3),
            ecsp_partition=tuple(tuple(int(i) for i in p) for p in doc["ecsp_partition"]),
        )


def spawn_streams(seed: int) -> dict:
    """One independent generator per consumer, keyed by purpose."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


def grid_shape(count: int, hall: HallGeometry) -> tuple[int, int]:
    """(rows along the length, columns along the width) for ``count`` CSPs.

    Rows are the minimum needed for each column count, so surplus slots never
    exceed one row; the column count whose aspect is closest to the hall wins.
    """
    target = hall.length_m / hall.width_m
    best = None
    for cols in range(1, count + 1):
        rows = math.ceil(count / cols)
        key = (abs(rows / cols - target), rows * cols, cols)
        if best is None or key < best[0]:
            best = (key, rows, cols)
    return best[1], best[2]


def place_csps(count: int, hall: HallGeometry) -> np.ndarray:
    if count < 1:
        raise ValueError("need at least one CSP")
    rows, cols = grid_shape(count, hall)
    xs = (np.arange(cols) + 0.5) * hall.width_m / cols
    ys = (np.arange(rows) + 0.5) * hall.length_m / rows
    pts = [(x, y, hall.csp_height_m) for y in ys for x in xs]
    return np.array(pts[:count], dtype=float)


def partition_ecsps(csp_positions, num_ecsps: int) -> tuple:
    """Chunk CSPs, sorted by (y, x), into ``num_ecsps`` contiguous strips."""
    pos = np.asarray(csp_positions, dtype=float)
    if not 1 <= num_ecsps <= len(pos):
        raise ValueError("num_ecsps must be between 1 and the number of CSPs")
    order = np.lexsort((pos[:, 0], pos[:, 1]))
    return tuple(tuple(sorted(int(i) for i in chunk)) for chunk in np.array_split(order, num_ecsps))


def drop_ues(count: int, hall: HallGeometry, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise ValueError("need at least one UE")
    xy = rng.uniform(size=(count, 2)) * np.array([hall.width_m, hall.length_m])
    return np.column_stack([xy, np.full(count, hall.ue_height_m)])


def build_scenario(config: ScenarioConfig, hall: HallGeometry | None = None) -> Scenario:
    hall = hall or HallGeometry()
    if not config.structurally_feasible:
        raise StructuralInfeasibilityError(
            f"{config.num_ues} UEs exceed {config.num_federations} federations x {config.pilot_len} pilots"
        )
    streams = spawn_streams(config.seed)
    csps = place_csps(config.num_csps, hall)
    return Scenario(
        config=config,
        hall=hall,
        csp_positions=csps,
        ue_positions=drop_ues(config.num_ues, hall, streams["ue_drop"]),
        ecsp_partition=partition_ecsps(csps, config.num_ecsps),
    )
