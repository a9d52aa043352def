"""
Console reporting for the WLAN fairness workbench.

Model solutions, simulation runs, sweeps and comparisons are rendered as
short titled reports.  Reports go through a pluggable backend so tests (or a
future file/notebook sink) can capture them instead of printing.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Protocol, Sequence

import pandas as pd

from src.analytic_model import ModelSolution, ScenarioParams, predicted_jain_index
from src.results_io import STATUS_OK, SweepRow
from src.wlan_sim import SimConfig, SimResult

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Report backend protocol
# ---------------------------------------------------------------------------


class ReportBackend(Protocol):
    """Interface for pluggable report destinations."""

    def send(self, title: str, body: str, level: str) -> None: ...


class ConsoleReportBackend:
    """Default backend that prints to stdout and logs."""

    def send(self, title: str, body: str, level: str = "INFO") -> None:
        prefix = {"WARNING": "! ", "SUCCESS": "+ "}.get(level, "")
        print(f"{prefix}[{title}]\n{body}")
        logger.debug("[%s] %s", title, body)


_backend: ReportBackend = ConsoleReportBackend()


def set_report_backend(backend: ReportBackend) -> None:
    """Replace the default console backend with a custom one."""
    global _backend
    _backend = backend


def get_report_backend() -> ReportBackend:
    return _backend


def _fmt(value: float | None, spec: str = ".6g") -> str:
    if value is None:
        return "-"
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return format(value, spec)


# ---------------------------------------------------------------------------
# Report generators
# ---------------------------------------------------------------------------


def report_model_solution(solution: ModelSolution) -> None:
    """Report one solved model point with its root-selection audit trail."""
    p = solution.params
    title = f"Model {solution.variant.value}"
    clamp_note = f"  (raw {_fmt(solution.pr_raw)}, clamped)" if solution.pr_clamped else ""
    lines = [
        f"U={p.up_stations} D={p.down_stations} w={p.max_window} B={p.buffer_size}",
        f"ratio up/down   {_fmt(solution.ratio_up_down)}",
        f"R (down/up)     {_fmt(solution.ratio_down_up)}",
        f"Pr              {_fmt(solution.loss_prob)}{clamp_note}",
        f"rho             {_fmt(solution.rho)}",
        f"E               {_fmt(solution.extra_service)}",
        f"residual        {_fmt(solution.residual_eq13, '.3e')}",
        f"jain (model)    {_fmt(predicted_jain_index(p, solution), '.4f')}",
        f"rates pkt/s     up {_fmt(solution.uplink_rate, '.2f')}  down {_fmt(solution.downlink_rate, '.2f')}",
    ]
    for candidate in solution.candidates:
        verdict = "accepted" if candidate.accepted else candidate.rejection
        lines.append(f"  root {candidate.value: .10g} x{candidate.multiplicity}  {verdict}")
    _backend.send(title, "\n".join(lines), "SUCCESS")


def report_model_failure(params: ScenarioParams, variant: str, error: Exception) -> None:
    title = f"Model {variant}"
    body = (
        f"U={params.up_stations} D={params.down_stations} w={params.max_window} "
        f"B={params.buffer_size}: {error}"
    )
    candidates = getattr(error, "candidates", None) or []
    for candidate in candidates:
        body += f"\n  root {candidate.value: .10g}  {candidate.rejection}"
    _backend.send(title, body, "WARNING")


def report_simulation(cfg: SimConfig, result: SimResult) -> None:
    """Report one simulation run, per flow and in aggregate."""
    p = cfg.scenario
    title = "Simulation"
    lines = [
        f"U={p.up_stations} D={p.down_stations} w={p.max_window} B={p.buffer_size} "
        f"seed={cfg.seed} duration={cfg.duration:g}s",
        f"up {result.up_total:.2f} pkt/s  down {result.down_total:.2f} pkt/s",
        f"ratio up/down   {_fmt(result.ratio_up_down)}",
        f"jain            {_fmt(result.jain_index, '.4f')}",
        f"AP drops        data {result.ap_drops['data']}  ack {result.ap_drops['ack']}"
        f"  (max occupancy {result.max_ap_occupancy})",
    ]
    for flow in result.per_flow:
        lines.append(
            f"  flow {flow.flow_id} {flow.direction:4s} {flow.throughput:9.2f} pkt/s  "
            f"retx {flow.retransmissions}  rto {flow.timeouts}"
        )
    _backend.send(title, "\n".join(lines), "INFO")


def report_sweep(rows: Sequence[SweepRow], out_path: Path | str | None = None) -> None:
    """One line per (B, variant): mean up/down ratio over seeds."""
    title = "Sweep"
    if not rows:
        _backend.send(title, "no rows", "WARNING")
        return
    df = pd.DataFrame({
        "B": [r.buffer for r in rows],
        "variant": [r.variant for r in rows],
        "ratio": [r.ratio_up_down if r.ratio_up_down is not None else math.nan for r in rows],
        "ok": [r.status == STATUS_OK for r in rows],
    })
    summary = df.groupby(["B", "variant"], sort=False).agg(ratio=("ratio", "mean"), ok=("ok", "all"))
    lines = [f"{rows[0].scenario}: {len(rows)} rows" + (f" -> {out_path}" if out_path else "")]
    for (buffer_size, variant), item in summary.iterrows():
        status = "" if item["ok"] else "  (no solution)"
        lines.append(f"  B={buffer_size:<5d} {variant:22s} {_fmt(item['ratio'])}{status}")
    level = "SUCCESS" if df["ok"].all() else "WARNING"
    _backend.send(title, "\n".join(lines), level)


def report_comparison(summary: pd.DataFrame, flagged: int, out_path: Path | str | None = None) -> None:
    """Per-variant error summary of a model-versus-simulation comparison."""
    title = "Comparison"
    lines = [f"{flagged} flagged point(s) excluded" + (f" -> {out_path}" if out_path else "")]
    for _, item in summary.iterrows():
        lines.append(
            f"  {item['variant']:22s} n={int(item['points'])}  "
            f"mean |err| {_fmt(item['mean_abs_error'])}  max {_fmt(item['max_abs_error'])}  "
            f"mean rel {_fmt(item['mean_rel_error'])}"
        )
    _backend.send(title, "\n".join(lines), "INFO")


def report_scenarios(scenarios: dict[str, tuple[int, int]], descriptions: dict[str, str]) -> None:
    lines = [f"  {name}  U={up} D={down}  {descriptions.get(name, '')}" for name, (up, down) in scenarios.items()]
    _backend.send("Scenarios", "\n".join(lines), "INFO")
