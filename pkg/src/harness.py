"""
Sweep harness: scenario configs, buffer-size sweeps over the analytic model
variants and the simulator, and model-versus-simulation comparison tables.
"""

from __future__ import annotations

import logging
import math
import re
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import pandas as pd

from src.analytic_model import (
    ModelVariant,
    ScenarioParams,
    extra_service,
    predicted_jain_index,
    solve_model,
)
from src.config import (
    DEFAULT_BUFFERS,
    DEFAULT_RTT,
    DEFAULT_SEEDS,
    DEFAULT_VARIANTS,
    DEFAULT_WINDOW,
    SWEEP_WORKERS,
    parse_int_list,
)
from src.errors import (
    ConfigError,
    GridMismatchError,
    MalformedValueError,
    MissingKeyError,
    NoPhysicalRootError,
    NumericRangeError,
    ScenarioError,
    SimulationError,
    SweepSpecError,
)
from src.results_io import (
    STATUS_NO_ROOT,
    STATUS_NUMERIC,
    STATUS_OK,
    SweepRow,
    rows_to_frame,
)
from src.wlan_sim import SimConfig, SimResult, simulate_many

logger = logging.getLogger(__name__)

SIMULATION = "simulation"
ANALYTIC_VARIANTS = tuple(v.value for v in ModelVariant)
KNOWN_VARIANTS = ANALYTIC_VARIANTS + (SIMULATION,)
SIM_OVERRIDE_KEYS = (
    "duration", "warmup", "wireless_rate", "data_frame", "ack_frame",
    "wired_delay", "min_rto",
)

# Built-in (U, D) pairs for the four validation scenarios, all with w = 42.
BUILTIN_SCENARIOS: dict[str, tuple[int, int]] = {
    "s1": (1, 1),
    "s2": (2, 2),
    "s3": (1, 2),
    "s4": (2, 1),
}
BUILTIN_DESCRIPTIONS: dict[str, str] = {
    "s1": "one UP and one DOWN station",
    "s2": "two UP and two DOWN stations",
    "s3": "one UP and two DOWN stations",
    "s4": "two UP and one DOWN station",
}

COMPARISON_COLUMNS = [
    "scenario", "B", "variant", "model_ratio", "sim_ratio",
    "abs_error", "rel_error", "flagged", "flag_reason",
]


def canonical_variant(name: str) -> str:
    """Map short or canonical variant names onto the canonical spelling."""
    key = str(name).strip().lower()
    if key in (SIMULATION, "sim"):
        return SIMULATION
    return ModelVariant.parse(key).value


# ---------------------------------------------------------------------------
# Sweep definition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """
    What to sweep: one scenario (its buffer size is ignored), the buffer
    values, the variants and, for simulation, the seeds and SimConfig
    overrides.
    """

    scenario_name: str
    base: ScenarioParams
    buffer_values: tuple[int, ...]
    variants: tuple[str, ...]
    seeds: tuple[int, ...] = tuple(DEFAULT_SEEDS)
    sim_overrides: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "buffer_values", tuple(self.buffer_values))
        object.__setattr__(self, "variants", tuple(self.variants))
        object.__setattr__(self, "seeds", tuple(self.seeds))

        if not self.scenario_name:
            raise SweepSpecError("scenario name must not be empty")
        if not self.buffer_values:
            raise SweepSpecError("buffer_values must not be empty")
        for b in self.buffer_values:
            if isinstance(b, bool) or not isinstance(b, int) or b < 1:
                raise SweepSpecError(f"buffer sizes must be integers >= 1, got {b!r}")
        if any(b >= a for b, a in zip(self.buffer_values, self.buffer_values[1:])):
            raise SweepSpecError(f"buffer_values must be strictly ascending: {list(self.buffer_values)}")
        if not self.variants:
            raise SweepSpecError("at least one variant is required")
        unknown = [v for v in self.variants if v not in KNOWN_VARIANTS]
        if unknown:
            raise SweepSpecError(f"unknown variants {unknown}; known: {list(KNOWN_VARIANTS)}")
        if len(set(self.variants)) != len(self.variants):
            raise SweepSpecError(f"duplicate variants in {list(self.variants)}")
        if self.has_analytic and (self.base.up_stations < 1 or self.base.down_stations < 1):
            raise SweepSpecError("analytic variants need at least one UP and one DOWN station")
        unknown_keys = set(self.sim_overrides) - set(SIM_OVERRIDE_KEYS)
        if unknown_keys:
            raise SweepSpecError(f"unknown simulation overrides {sorted(unknown_keys)}")
        if SIMULATION in self.variants:
            if not self.seeds:
                raise SweepSpecError("simulation sweeps need at least one seed")
            for seed in self.seeds:
                if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
                    raise SweepSpecError(f"seeds must be 64-bit unsigned integers, got {seed!r}")
            try:
                self.sim_config(self.buffer_values[0], self.seeds[0]).validate()
            except (SimulationError, TypeError) as exc:
                raise SweepSpecError(f"invalid simulation settings: {exc}") from exc

    @property
    def has_analytic(self) -> bool:
        return any(v != SIMULATION for v in self.variants)

    def sim_config(self, buffer_size: int, seed: int) -> SimConfig:
        return SimConfig(scenario=self.base.with_buffer(buffer_size), seed=seed, **self.sim_overrides)


def builtin_spec(
    name: str,
    buffers: Sequence[int] | None = None,
    variants: Sequence[str] | None = None,
    seeds: Sequence[int] | None = None,
    window: int = DEFAULT_WINDOW,
    sim_overrides: dict[str, float] | None = None,
) -> SweepSpec:
    """SweepSpec for one of the named scenarios s1..s4."""
    if name not in BUILTIN_SCENARIOS:
        raise SweepSpecError(f"unknown scenario {name!r}; choose from {sorted(BUILTIN_SCENARIOS)}")
    up, down = BUILTIN_SCENARIOS[name]
    buffers = list(DEFAULT_BUFFERS if buffers is None else buffers)
    return SweepSpec(
        scenario_name=name,
        base=ScenarioParams(up, down, buffers[0] if buffers else 1, window),
        buffer_values=tuple(buffers),
        variants=tuple(canonical_variant(v) for v in (variants or DEFAULT_VARIANTS)),
        seeds=tuple(DEFAULT_SEEDS if seeds is None else seeds),
        sim_overrides=dict(sim_overrides or {}),
    )


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------


class _ConfigReader:
    """Typed access to a parsed TOML document with file:line error context."""

    def __init__(self, path: Path, text: str, data: dict[str, Any]) -> None:
        self.path = path
        self.lines = text.splitlines()
        self.data = data

    def line_of(self, table: str, key: str | None = None) -> int | None:
        current = None
        for number, raw in enumerate(self.lines, start=1):
            stripped = raw.split("#", 1)[0].strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                current = stripped.strip("[]").strip()
                if key is None and current == table:
                    return number
            elif current == table and key is not None and re.match(rf"{re.escape(key)}\s*=", stripped):
                return number
        return None

    def fail(self, error: type[ConfigError], message: str, table: str, key: str | None = None):
        line = self.line_of(table, key)
        if line is None and key is not None:
            line = self.line_of(table)
        return error(message, self.path, line)

    def table(self, name: str, required: bool = True) -> dict[str, Any]:
        value = self.data.get(name)
        if value is None:
            if required:
                raise MissingKeyError(f"missing [{name}] table", self.path)
            return {}
        if not isinstance(value, dict):
            raise self.fail(MalformedValueError, f"[{name}] must be a table", name)
        return value

    def integer(self, table: str, key: str, default: int | None = None) -> int:
        values = self.table(table)
        if key not in values:
            if default is None:
                raise self.fail(MissingKeyError, f"missing key '{key}' in [{table}]", table)
            return default
        value = values[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(MalformedValueError, f"'{key}' must be an integer, got {value!r}", table, key)
        return value

    def number(self, table: str, key: str, default: float) -> float:
        value = self.table(table).get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(MalformedValueError, f"'{key}' must be a number, got {value!r}", table, key)
        return value

    def int_list(self, table: str, key: str, default: list[int] | None = None) -> list[int]:
        values = self.table(table)
        if key not in values:
            if default is None:
                raise self.fail(MissingKeyError, f"missing key '{key}' in [{table}]", table)
            return list(default)
        value = values[key]
        if isinstance(value, str):
            try:
                return parse_int_list(value)
            except ValueError:
                raise self.fail(MalformedValueError, f"'{key}' is not a list or start:stop:step range", table, key) from None
        if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
            raise self.fail(MalformedValueError, f"'{key}' must be a list of integers, got {value!r}", table, key)
        return value

    def str_list(self, table: str, key: str, default: list[str]) -> list[str]:
        value = self.table(table).get(key, default)
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise self.fail(MalformedValueError, f"'{key}' must be a list of strings, got {value!r}", table, key)
        return value


def load_config(path: str | Path) -> SweepSpec:
    """
    Read a TOML sweep configuration.

    Example
    -------
    ::

        [scenario]
        name = "s1"
        up = 1
        down = 1
        window = 42          # optional, default 42

        [sweep]
        buffers = [20, 40, 84]
        variants = ["new_cubic", "simulation"]   # optional
        seeds = [1, 2, 3]                        # optional

        [sim]                # optional SimConfig overrides
        duration = 50.0

    Raises
    ------
    MissingKeyError, MalformedValueError, SweepSpecError
        All ``ConfigError`` subclasses carrying ``path:line``.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", path) from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise MalformedValueError(f"invalid TOML: {exc}", path, int(match.group(1)) if match else None) from None

    reader = _ConfigReader(path, text, data)
    scenario = reader.table("scenario")
    name = scenario.get("name", "custom")
    if not isinstance(name, str) or not name:
        raise reader.fail(MalformedValueError, "'name' must be a non-empty string", "scenario", "name")
    try:
        base = ScenarioParams(
            up_stations=reader.integer("scenario", "up"),
            down_stations=reader.integer("scenario", "down"),
            buffer_size=1,
            max_window=reader.integer("scenario", "window", DEFAULT_WINDOW),
            rtt=reader.number("scenario", "rtt", DEFAULT_RTT),
        )
    except ScenarioError as exc:
        raise reader.fail(MalformedValueError, str(exc), "scenario") from exc

    reader.table("sweep")
    buffers = reader.int_list("sweep", "buffers")
    try:
        variants = [canonical_variant(v) for v in reader.str_list("sweep", "variants", DEFAULT_VARIANTS)]
    except ScenarioError as exc:
        raise reader.fail(MalformedValueError, str(exc), "sweep", "variants") from exc
    seeds = reader.int_list("sweep", "seeds", DEFAULT_SEEDS)

    overrides: dict[str, float] = {}
    for key, value in reader.table("sim", required=False).items():
        if key not in SIM_OVERRIDE_KEYS:
            raise reader.fail(MalformedValueError, f"unknown [sim] key '{key}'", "sim", key)
        overrides[key] = reader.number("sim", key, 0.0)

    try:
        spec = SweepSpec(name, base, tuple(buffers), tuple(variants), tuple(seeds), overrides)
    except SweepSpecError as exc:
        raise SweepSpecError(str(exc), path, reader.line_of("sweep")) from exc
    logger.info("Loaded sweep config %s (%s, %d buffer sizes)", path, name, len(buffers))
    return spec


# ---------------------------------------------------------------------------
# Running sweeps
# ---------------------------------------------------------------------------


def _model_row(name: str, params: ScenarioParams, variant: str) -> SweepRow:
    common = dict(
        scenario=name,
        up=params.up_stations,
        down=params.down_stations,
        window=params.max_window,
        buffer=params.buffer_size,
        variant=variant,
        extra_service=extra_service(params),
    )
    try:
        solution = solve_model(params, variant)
    except NoPhysicalRootError as exc:
        logger.warning("No physical root for %s B=%d %s: %s", name, params.buffer_size, variant, exc)
        return SweepRow(**common, status=STATUS_NO_ROOT)
    except NumericRangeError as exc:
        logger.warning("Numeric range exceeded for %s B=%d %s: %s", name, params.buffer_size, variant, exc)
        return SweepRow(**common, status=STATUS_NUMERIC)
    return SweepRow(
        **common,
        r_model=solution.ratio_down_up,
        ratio_up_down=solution.ratio_up_down,
        pr=solution.loss_prob,
        pr_raw_flag=solution.pr_clamped,
        jain_index=predicted_jain_index(params, solution),
        residual_eq13=solution.residual_eq13,
    )


def _simulation_row(name: str, cfg: SimConfig, result: SimResult) -> SweepRow:
    p = cfg.scenario
    return SweepRow(
        scenario=name,
        up=p.up_stations,
        down=p.down_stations,
        window=p.max_window,
        buffer=p.buffer_size,
        variant=SIMULATION,
        seed=cfg.seed,
        ratio_up_down=result.ratio_up_down,
        up_pps=result.up_total,
        down_pps=result.down_total,
        jain_index=result.jain_index,
    )


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    """
    Evaluate every (B, variant, seed) combination of ``spec``.

    Rows come out B-major, then in the variant order of ``spec``, then by seed.
    An analytic point without a physical root (or out of numeric range)
    becomes a status row; the sweep itself never aborts on one.  Simulation
    points may run in ``workers`` processes; their rows are slotted back
    into the same deterministic order.
    """
    workers = SWEEP_WORKERS if workers is None else workers
    logger.info(
        "Sweep %s: %d buffer sizes x %s (%d seeds)",
        spec.scenario_name, len(spec.buffer_values), ",".join(spec.variants), len(spec.seeds),
    )
    rows: list[SweepRow | None] = []
    sim_slots: list[tuple[int, SimConfig]] = []
    for buffer_size in spec.buffer_values:
        params = spec.base.with_buffer(buffer_size)
        for variant in spec.variants:
            if variant == SIMULATION:
                for seed in spec.seeds:
                    sim_slots.append((len(rows), spec.sim_config(buffer_size, seed)))
                    rows.append(None)
            else:
                rows.append(_model_row(spec.scenario_name, params, variant))

    results = simulate_many([cfg for _, cfg in sim_slots], workers=workers)
    for (index, cfg), result in zip(sim_slots, results):
        rows[index] = _simulation_row(spec.scenario_name, cfg, result)

    failed = sum(1 for r in rows if r.status != STATUS_OK)
    logger.info("Sweep %s finished: %d rows, %d without a solution", spec.scenario_name, len(rows), failed)
    return rows


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


def _finite_mean(values: pd.Series) -> float:
    """Mean of the group, or NaN when any member is missing or non-finite."""
    arr = values.to_numpy(dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        return math.nan
    return float(arr.mean())


def compare(model_rows: Iterable[SweepRow], sim_rows: Iterable[SweepRow]) -> pd.DataFrame:
    """
    Per-B error of each candidate variant against the reference side.

    The reference ratio at each B is the mean of all ``sim_rows`` at that B
    (normally the simulation seeds); candidates are the ``model_rows``
    grouped by (B, variant).  A point where either side is infinite,
    undefined or missing is flagged and gets no error values.

    Raises
    ------
    GridMismatchError
        The two sides share no buffer size.
    """
    model_df = rows_to_frame(model_rows)
    sim_df = rows_to_frame(sim_rows)
    if model_df.empty or sim_df.empty:
        raise GridMismatchError("both sides of a comparison need at least one row")
    shared = sorted(set(model_df["buffer"]) & set(sim_df["buffer"]))
    if not shared:
        raise GridMismatchError(
            f"no common buffer sizes: {sorted(set(model_df['buffer']))} vs {sorted(set(sim_df['buffer']))}"
        )

    reference = sim_df[sim_df["buffer"].isin(shared)].groupby("buffer")["ratio_up_down"].agg(_finite_mean)
    candidates = model_df[model_df["buffer"].isin(shared)]

    records = []
    for (buffer_size, variant), group in candidates.groupby(["buffer", "variant"], sort=False):
        model_ratio = _finite_mean(group["ratio_up_down"])
        sim_ratio = float(reference.loc[buffer_size])
        reasons = []
        if not math.isfinite(model_ratio):
            reasons.append("model_non_finite")
        if not math.isfinite(sim_ratio):
            reasons.append("sim_non_finite")
        abs_error = rel_error = math.nan
        if not reasons:
            abs_error = abs(model_ratio - sim_ratio)
            if sim_ratio != 0:
                rel_error = abs_error / abs(sim_ratio)
            else:
                rel_error = 0.0 if abs_error == 0 else math.inf
        records.append({
            "scenario": group["scenario"].iloc[0],
            "B": int(buffer_size),
            "variant": variant,
            "model_ratio": model_ratio,
            "sim_ratio": sim_ratio,
            "abs_error": abs_error,
            "rel_error": rel_error,
            "flagged": bool(reasons),
            "flag_reason": ",".join(reasons),
        })
    table = pd.DataFrame.from_records(records, columns=COMPARISON_COLUMNS)
    return table.sort_values("B", kind="stable").reset_index(drop=True)


def summarize_comparison(table: pd.DataFrame) -> pd.DataFrame:
    """Per-variant error aggregates over the unflagged comparison points."""
    valid = table[~table["flagged"].astype(bool)]
    if valid.empty:
        return pd.DataFrame(columns=["variant", "points", "mean_abs_error", "max_abs_error", "mean_rel_error"])
    return valid.groupby("variant", sort=False).agg(
        points=("abs_error", "count"),
        mean_abs_error=("abs_error", "mean"),
        max_abs_error=("abs_error", "max"),
        mean_rel_error=("rel_error", "mean"),
    ).reset_index()
