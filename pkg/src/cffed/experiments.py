"""Monte Carlo drivers: single runs, rate and federation sweeps, CSV output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from importlib import metadata
from pathlib import Path

import numpy as np

from .channel import realize_channel
from .config import ExperimentConfig
from .model import FederationProblem
from .orchestrator import FederationSolution, solve
from .scenario import ScenarioConfig, build_scenario, spawn_streams


@dataclass
class ResultRow:
    seed: int
    num_csps: int
    num_ecsps: int
    antennas: int
    num_ues: int
    federations: int
    tau_p: int
    rate_mbps: float
    feasible: bool
    total_power_w: float | None
    active_csps: float | None
    active_ecsps: float | None
    method_tag: str
    outer_iters: int | None
    milp_nodes: int | None
    wall_time_s: float | None
    kind: str = "drop"              # "drop" or "aggregate"
    drop: int | None = None
    feasible_fraction: float | None = None


CSV_COLUMNS = tuple(f.name for f in fields(ResultRow))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def row_to_csv(row: ResultRow) -> list:
    return [_fmt(getattr(row, name)) for name in CSV_COLUMNS]


def drop_seed(master: int, drop: int) -> int:
    """Seed for one Monte Carlo drop; shared by every cell of a sweep."""
    return int(np.random.SeedSequence([master, drop]).generate_state(1, dtype=np.uint64)[0])


def build_problem(config: ExperimentConfig) -> FederationProblem:
    scenario = build_scenario(config.scenario)
    channel = realize_channel(scenario, config.channel, spawn_streams(config.scenario.seed)["channel"])
    return FederationProblem.from_rate(scenario, channel, config.scenario.rate_thr_bps, config.energy)


def run_single(config: ExperimentConfig) -> tuple[ResultRow, FederationSolution]:
    """Build the drop described by ``config.scenario``, solve it and summarise."""
    start = time.perf_counter()
    problem = build_problem(config)
    sol = solve(problem, config.solver)
    elapsed = time.perf_counter() - start
    sc = config.scenario
    feasible = sol.feasible
    row = ResultRow(
        seed=sc.seed,
        num_csps=sc.num_csps,
        num_ecsps=sc.num_ecsps,
        antennas=sc.antennas_per_csp,
        num_ues=sc.num_ues,
        federations=sc.num_federations,
        tau_p=sc.pilot_len,
        rate_mbps=sc.rate_thr_bps / 1e6,
        feasible=feasible,
        total_power_w=sol.avg_power_w if feasible else None,
        active_csps=sol.active_csps if feasible else None,
        active_ecsps=sol.active_ecsps if feasible else None,
        method_tag=sol.method_tag if feasible else "",
        outer_iters=sol.outer_iters,
        milp_nodes=sol.milp_nodes,
        wall_time_s=elapsed if config.record_wall_time else None,
    )
    return row, sol


# -- sweeps ---------------------------------------------------------------------------

def _cells(config: ExperimentConfig, federation_mode: bool) -> list:
    """Scenario configs of every sweep cell, in canonical (sorted) order."""
    base = config.scenario
    K = base.num_ues
    out = []
    if federation_mode:
        pairs = [(base.num_csps, base.antennas_per_csp)]
        feds = sorted(int(f) for f in config.sweep.federation_counts)
        for F in feds:
            if K % F:
                raise ValueError(f"sweep.federation_counts: {K} UEs do not split evenly into {F} federations")
    else:
        pairs = config.sweep.pairs()
        feds = [base.num_federations]
    for S, M in pairs:
        for F in feds:
            tau_p = K // F if federation_mode else base.pilot_len
            for rate in sorted(float(r) for r in config.sweep.rates_mbps):
                out.append(dataclasses.replace(
                    base, num_csps=S, antennas_per_csp=M, num_federations=F, pilot_len=tau_p,
                    rate_thr_bps=rate * 1e6,
                ))
    return out


def _run_drop(args):
    config, cell, drop, master = args
    sc = dataclasses.replace(cell, seed=drop_seed(master, drop))
    row, _ = run_single(dataclasses.replace(config, scenario=sc))
    row.drop = drop
    return row


def aggregate(rows: list, cell: ScenarioConfig, master: int) -> ResultRow:
    """Means over the feasible drops of one cell."""
    ok = [r for r in rows if r.feasible]
    mean = (lambda vals: float(np.mean(vals))) if ok else (lambda vals: None)
    return ResultRow(
        seed=master,
        num_csps=cell.num_csps,
        num_ecsps=cell.num_ecsps,
        antennas=cell.antennas_per_csp,
        num_ues=cell.num_ues,
        federations=cell.num_federations,
        tau_p=cell.pilot_len,
        rate_mbps=cell.rate_thr_bps / 1e6,
        feasible=bool(ok),
        total_power_w=mean([r.total_power_w for r in ok]),
        active_csps=mean([r.active_csps for r in ok]),
        active_ecsps=mean([r.active_ecsps for r in ok]),
        method_tag="",
        outer_iters=None,
        milp_nodes=None,
        wall_time_s=None,
        kind="aggregate",
        drop=None,
        feasible_fraction=len(ok) / len(rows),
    )


def iter_sweep(config: ExperimentConfig, federation_mode: bool = False):
    """Yield rows in canonical order: each cell's drops, then its aggregate."""
    master = config.scenario.seed
    cells = _cells(config, federation_mode)
    jobs = [(config, cell, d, master) for cell in cells for d in range(config.drops)]
    if config.workers > 1:
        pool = ProcessPoolExecutor(max_workers=config.workers)
        results = pool.map(_run_drop, jobs)   # map preserves submission order
    else:
        pool = None
        results = map(_run_drop, jobs)
    try:
        for cell in cells:
            rows = []
            for _ in range(config.drops):
                row = next(results)
                rows.append(row)
                yield row
            yield aggregate(rows, cell, master)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)


def write_sweep(config: ExperimentConfig, out_path=None, federation_mode: bool = False) -> list:
    """Run a sweep, flushing each CSV row as soon as it is known."""
    path = Path(out_path or config.out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        fh.flush()
        for row in iter_sweep(config, federation_mode):
            writer.writerow(row_to_csv(row))
            fh.flush()
            rows.append(row)
    write_manifest(config, path, federation_mode)
    return rows


def run_sweep(config: ExperimentConfig, out_path=None) -> list:
    """Rate sweep over the (S, M) grid (power against data rate)."""
    return write_sweep(config, out_path, federation_mode=False)


def run_federation_sweep(config: ExperimentConfig, out_path=None) -> list:
    """Federation-count sweep with tau_p = K/F (power against |F|)."""
    return write_sweep(config, out_path, federation_mode=True)


def rows_to_csv_text(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(row_to_csv(r))
    return buf.getvalue()


def read_rows(path) -> list:
    """Parse a sweep CSV back into dictionaries with typed values."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            typed = {}
            for k, v in rec.items():
                if v == "":
                    typed[k] = None
                elif v in ("true", "false"):
                    typed[k] = v == "true"
                elif k in ("method_tag", "kind"):
                    typed[k] = v
                else:
                    num = float(v)
                    typed[k] = int(num) if num.is_integer() and k not in (
                        "rate_mbps", "total_power_w", "active_csps", "active_ecsps",
                        "feasible_fraction", "wall_time_s") else num
            out.append(typed)
    return out


def _versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for dist in ("scipy", "artifact"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = None
    return out


def write_manifest(config: ExperimentConfig, csv_path: Path, federation_mode: bool) -> Path:
    manifest = {
        "csv": Path(csv_path).name,
        "mode": "federations" if federation_mode else "rates",
        "master_seed": config.scenario.seed,
        "config_sha256": config.digest(),
        "config": config.to_dict(),
        "versions": _versions(),
    }
    path = Path(csv_path).with_suffix(".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def mean_power(rows: list, **match) -> float:
    """Mean total power over feasible drop rows matching ``match``."""
    vals = [r.total_power_w for r in rows
            if r.kind == "drop" and r.feasible and all(getattr(r, k) == v for k, v in match.items())]
    return float(np.mean(vals)) if vals else math.nan
