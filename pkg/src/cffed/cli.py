"""Command-line entry point: ``cffed {run,sweep,federations,oracle,dump-milp}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .scenario import StructuralInfeasibilityError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config merged over the built-in defaults")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--csps", type=int, help="number of CSPs (narrows the sweep axis)")
    common.add_argument("--antennas", type=int, help="antennas per CSP (narrows the sweep axis)")
    common.add_argument("--rate-mbps", type=float, help="per-UE rate requirement (narrows the sweep axis)")
    common.add_argument("--federations", type=int, help="number of federations (narrows the sweep axis)")
    common.add_argument("--drops", type=int, help="Monte Carlo drops per sweep cell")
    common.add_argument("--out", help="output path")
    common.add_argument("--workers", type=int, help="worker processes for sweeps")
    common.add_argument("--record-wall-time", action="store_true", default=None,
                        help="fill the wall_time_s column (output is then no longer byte-reproducible)")
    common.add_argument("--show-params", action="store_true", help="print the effective config and exit")

    p = argparse.ArgumentParser(prog="cffed", description="Energy-aware CSP federation in cell-free massive MIMO.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="solve one drop and print the outcome as JSON")
    run.add_argument("--dump-milp", metavar="PATH", help="also write the first assignment MILP")
    sub.add_parser("sweep", parents=[common], help="rate sweep over (CSPs, antennas); writes CSV + manifest")
    sub.add_parser("federations", parents=[common], help="federation-count sweep with tau_p = K/F")
    orc = sub.add_parser("oracle", parents=[common], help="run the reference-solver checks")
    orc.add_argument("--size-limit", type=int, default=14, help="largest binary count to enumerate (<= 16)")
    orc.add_argument("--joint-seeds", type=int, default=3, help="tiny instances for the joint oracle")
    dump = sub.add_parser("dump-milp", parents=[common], help="write the first assignment MILP of a drop")
    dump.add_argument("path", nargs="?", help="output file (defaults to --out or milp.txt)")
    return p


def effective_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    sc, sweep = {}, {}
    if args.seed is not None:
        sc["seed"] = args.seed
    if args.csps is not None:
        sc["num_csps"] = args.csps
        sweep["csp_counts"] = (args.csps,)
        sweep["configurations"] = ()
    if args.antennas is not None:
        sc["antennas_per_csp"] = args.antennas
        sweep["antenna_counts"] = (args.antennas,)
        sweep["configurations"] = ()
    if args.rate_mbps is not None:
        sc["rate_thr_bps"] = args.rate_mbps * 1e6
        sweep["rates_mbps"] = (args.rate_mbps,)
    if args.federations is not None:
        sc["num_federations"] = args.federations
        sweep["federation_counts"] = (args.federations,)
    top = {}
    if args.drops is not None:
        top["drops"] = args.drops
    if args.out is not None:
        top["out_path"] = args.out
    if args.workers is not None:
        top["workers"] = args.workers
    if args.record_wall_time:
        top["record_wall_time"] = True
    try:
        return dataclasses.replace(
            cfg,
            scenario=dataclasses.replace(cfg.scenario, **sc),
            sweep=dataclasses.replace(cfg.sweep, **sweep),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(f"<flags>: {exc}") from None


def _cmd_run(cfg: ExperimentConfig, args) -> int:
    from .experiments import build_problem, run_single

    if args.dump_milp:
        _dump_first_milp(cfg, args.dump_milp)
    row, sol = run_single(cfg)
    doc = {"row": dataclasses.asdict(row), "solution": sol.to_dict()}
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _dump_first_milp(cfg: ExperimentConfig, path) -> None:
    """Assignment MILP built from the power step at the initial assignment."""
    from .conesolve import build_power_socp, solve_power
    from .experiments import build_problem
    from .mipsolve import build_assignment_milp, dump_milp
    from .orchestrator import default_lambda, eps_weights, initial_assignment

    problem = build_problem(cfg)
    lam = cfg.solver.lam if cfg.solver.lam is not None else default_lambda(problem)
    a = initial_assignment(problem.scenario)
    sub = build_power_socp(a, problem, lam)
    sol = solve_power(sub, cfg.solver.socp)
    rho = sub.rho_matrix(sol.values).clip(0.0, problem.p_max ** 0.5)
    milp = build_assignment_milp(rho, problem, lam, eps_weights(problem, lam))
    dump_milp(milp.instance, path)
    print(f"wrote {path}", file=sys.stderr)


def _cmd_sweep(cfg: ExperimentConfig, federation_mode: bool) -> int:
    from .experiments import write_sweep

    rows = write_sweep(cfg, federation_mode=federation_mode)
    agg = [r for r in rows if r.kind == "aggregate"]
    print(f"wrote {cfg.out_path}: {len(rows) - len(agg)} drop rows, {len(agg)} aggregate rows")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from .oracles import run_oracle_suite

    if args.size_limit > 16:
        raise ConfigError("--size-limit: enumeration is capped at 16 binaries")
    report = run_oracle_suite(size_limit=args.size_limit, joint_seeds=tuple(range(args.joint_seeds)), echo=print)
    print("oracle suite:", "PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_ORACLE


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = effective_config(args)
        if args.show_params:
            print(cfg.to_json())
            return EXIT_OK
        if args.command == "run":
            return _cmd_run(cfg, args)
        if args.command == "sweep":
            return _cmd_sweep(cfg, federation_mode=False)
        if args.command == "federations":
            return _cmd_sweep(cfg, federation_mode=True)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "dump-milp":
            _dump_first_milp(cfg, args.path or args.out or "milp.txt")
            return EXIT_OK
    except (ConfigError, StructuralInfeasibilityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # remaining validation failures come from dataclass invariants
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
