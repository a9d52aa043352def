"""
WLAN Fairness Workbench — main entry point.

Usage
-----
    # Solve the analytic model at one point (all three variants)
    python main.py model --up 1 --down 1 --wnd 42 --buffer 84 --variant all

    # Simulate one point
    python main.py simulate --up 1 --down 1 --wnd 42 --buffer 20 --seed 3

    # Sweep a built-in scenario or a TOML config, with plot tables
    python main.py sweep --scenario s1 --out results/s1.csv --plot results/plots
    python main.py sweep --config configs/s3.toml --out results/s3.csv --workers 4

    # Compare analytic rows against simulation rows
    python main.py compare --a results/s1.csv --b results/s1.csv --out results/s1_cmp.csv

    # List the built-in scenarios
    python main.py scenarios

Exit codes: 0 success, 1 usage error, 2 config / file error, 3 no physical
root (or numeric overflow) in a single-point ``model`` call.
"""

from __future__ import annotations

import argparse
import logging
import sys

from src.config import DEFAULT_RTT, DEFAULT_WINDOW, LOG_LEVEL, SIM_DURATION, SIM_WARMUP
from src.errors import (
    ConfigError,
    GridMismatchError,
    NoPhysicalRootError,
    NumericRangeError,
    OutputPathError,
    ScenarioError,
    SimulationError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

logger = logging.getLogger("main")


class UsageError(Exception):
    """Raised instead of argparse's own exit so ``main`` can return a code."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: error: {message}")


def _setup_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL, logging.INFO),
        format="%(asctime)s  %(levelname)-8s  %(name)s  %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _scenario_from_args(args: argparse.Namespace):
    from src.analytic_model import ScenarioParams
    return ScenarioParams(
        up_stations=args.up,
        down_stations=args.down,
        buffer_size=args.buffer,
        max_window=args.wnd,
        rtt=args.rtt,
    )


def cmd_model(args: argparse.Namespace) -> int:
    """Solve the analytic model at one (U, D, w, B) point."""
    from src.analytic_model import ModelSolution, compare_variants, solve_model
    from src.reporting import report_model_failure, report_model_solution

    params = _scenario_from_args(args)
    if args.variant != "all":
        try:
            solution = solve_model(params, args.variant)
        except (NoPhysicalRootError, NumericRangeError) as exc:
            report_model_failure(params, args.variant, exc)
            return EXIT_NUMERIC
        report_model_solution(solution)
        return EXIT_OK

    solved = 0
    for variant, outcome in compare_variants(params).items():
        if isinstance(outcome, ModelSolution):
            report_model_solution(outcome)
            solved += 1
        else:
            report_model_failure(params, variant.value, outcome)
    return EXIT_OK if solved else EXIT_NUMERIC


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run the simulator at one point."""
    from src.reporting import report_simulation
    from src.wlan_sim import SimConfig, run_simulation

    cfg = SimConfig(
        scenario=_scenario_from_args(args),
        seed=args.seed,
        duration=args.duration,
        warmup=args.warmup,
    )
    report_simulation(cfg, run_simulation(cfg))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Sweep buffer sizes for a config file or a built-in scenario."""
    from src.harness import builtin_spec, load_config, run_sweep
    from src.reporting import report_sweep
    from src.results_io import emit_plot_data, write_csv

    spec = load_config(args.config) if args.config else builtin_spec(args.scenario)
    rows = run_sweep(spec, workers=args.workers)
    out = write_csv(rows, args.out)
    if args.plot:
        emit_plot_data(rows, args.plot)
    report_sweep(rows, out)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    """Compare the analytic rows of --a against the simulation rows of --b."""
    from src.harness import SIMULATION, compare, summarize_comparison
    from src.reporting import report_comparison
    from src.results_io import load_csv, write_comparison

    side_a = load_csv(args.a)
    side_b = load_csv(args.b)
    if any(r.variant != SIMULATION for r in side_a):
        side_a = [r for r in side_a if r.variant != SIMULATION]
    if any(r.variant == SIMULATION for r in side_b):
        side_b = [r for r in side_b if r.variant == SIMULATION]

    table = compare(side_a, side_b)
    out = write_comparison(table, args.out)
    report_comparison(summarize_comparison(table), int(table["flagged"].sum()), out)
    return EXIT_OK


def cmd_scenarios(_args: argparse.Namespace) -> int:
    """List the built-in scenarios."""
    from src.harness import BUILTIN_DESCRIPTIONS, BUILTIN_SCENARIOS
    from src.reporting import report_scenarios

    report_scenarios(BUILTIN_SCENARIOS, BUILTIN_DESCRIPTIONS)
    return EXIT_OK


# ---------------------------------------------------------------------------
# CLI parser
# ---------------------------------------------------------------------------

def _add_point_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--up", type=int, required=True, help="Number of UP stations (U)")
    parser.add_argument("--down", type=int, required=True, help="Number of DOWN stations (D)")
    parser.add_argument("--wnd", type=int, default=DEFAULT_WINDOW,
                        help=f"Maximum TCP window w in packets (default {DEFAULT_WINDOW})")
    parser.add_argument("--buffer", type=int, required=True, help="AP buffer size B in packets")
    parser.add_argument("--rtt", type=float, default=DEFAULT_RTT,
                        help=f"Round-trip time in seconds (default {DEFAULT_RTT})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="main.py",
        description="WLAN Fairness Workbench — uplink/downlink TCP throughput ratio vs AP buffer size",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    model_parser = sub.add_parser("model", help="Solve the analytic model at one point")
    _add_point_args(model_parser)
    model_parser.add_argument("--variant", default="new",
                              choices=["new", "old", "exact", "all"],
                              help="Model variant (default new)")

    sim_parser = sub.add_parser("simulate", help="Simulate one point")
    _add_point_args(sim_parser)
    sim_parser.add_argument("--seed", type=int, default=1, help="PRNG seed (default 1)")
    sim_parser.add_argument("--duration", type=float, default=SIM_DURATION,
                            help=f"Simulated seconds (default {SIM_DURATION:g})")
    sim_parser.add_argument("--warmup", type=float, default=SIM_WARMUP,
                            help=f"Seconds excluded from throughput (default {SIM_WARMUP:g})")

    sweep_parser = sub.add_parser("sweep", help="Sweep AP buffer sizes")
    source = sweep_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="TOML sweep configuration")
    source.add_argument("--scenario", choices=["s1", "s2", "s3", "s4"],
                        help="Built-in scenario with default buffers, variants and seeds")
    sweep_parser.add_argument("--out", required=True, help="Results CSV path")
    sweep_parser.add_argument("--plot", help="Directory for plot-data tables")
    sweep_parser.add_argument("--workers", type=int, default=None,
                              help="Processes for simulation points (default SWEEP_WORKERS)")

    cmp_parser = sub.add_parser("compare", help="Compare model rows against simulation rows")
    cmp_parser.add_argument("--a", required=True, help="CSV with analytic rows")
    cmp_parser.add_argument("--b", required=True, help="CSV with simulation rows")
    cmp_parser.add_argument("--out", required=True, help="Comparison CSV path")

    sub.add_parser("scenarios", help="List built-in scenarios")
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    commands = {
        "model": cmd_model,
        "simulate": cmd_simulate,
        "sweep": cmd_sweep,
        "compare": cmd_compare,
        "scenarios": cmd_scenarios,
    }
    handler = commands.get(args.command)
    if handler is None:
        parser.print_help()
        return EXIT_USAGE

    try:
        return handler(args)
    except (ScenarioError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, OutputPathError, GridMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoPhysicalRootError, NumericRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
