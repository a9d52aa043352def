"""
Sweep result files: the fixed-header CSV contract, plot-data tables and the
comparison table.

Cells a variant does not produce are empty.  Floats are written with
``repr`` so that every value, ``inf`` and ``nan`` included, re-parses to the
identical double; booleans are written as 1/0.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Callable, Iterable

import pandas as pd

from src.errors import OutputPathError, ResultsFormatError

logger = logging.getLogger(__name__)

CSV_HEADER: tuple[str, ...] = (
    "scenario", "U", "D", "w", "B", "variant", "seed", "R_model",
    "ratio_up_down", "Pr", "pr_raw_flag", "E", "up_pps", "down_pps",
    "jain_index", "residual_eq13", "status",
)

STATUS_OK = "ok"
STATUS_NO_ROOT = "no_physical_root"
STATUS_NUMERIC = "numeric_range"
ROW_STATUSES = (STATUS_OK, STATUS_NO_ROOT, STATUS_NUMERIC)


@dataclass(frozen=True)
class SweepRow:
    """One (scenario, B, variant, seed) record; fields follow CSV_HEADER order."""

    scenario: str
    up: int
    down: int
    window: int
    buffer: int
    variant: str
    seed: int | None = None
    r_model: float | None = None
    ratio_up_down: float | None = None
    pr: float | None = None
    pr_raw_flag: bool | None = None
    extra_service: float | None = None
    up_pps: float | None = None
    down_pps: float | None = None
    jain_index: float | None = None
    residual_eq13: float | None = None
    status: str = STATUS_OK


# ---------------------------------------------------------------------------
# Cell codecs
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_optional_int(text: str) -> int | None:
    return None if text == "" else int(text)


def _parse_optional_float(text: str) -> float | None:
    return None if text == "" else float(text)


def _parse_optional_bool(text: str) -> bool | None:
    if text == "":
        return None
    lowered = text.lower()
    if lowered in ("1", "true"):
        return True
    if lowered in ("0", "false"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_status(text: str) -> str:
    if text not in ROW_STATUSES:
        raise ValueError(f"unknown status {text!r}")
    return text


_PARSERS: tuple[Callable[[str], object], ...] = (
    str,                      # scenario
    _parse_int,               # U
    _parse_int,               # D
    _parse_int,               # w
    _parse_int,               # B
    str,                      # variant
    _parse_optional_int,      # seed
    _parse_optional_float,    # R_model
    _parse_optional_float,    # ratio_up_down
    _parse_optional_float,    # Pr
    _parse_optional_bool,     # pr_raw_flag
    _parse_optional_float,    # E
    _parse_optional_float,    # up_pps
    _parse_optional_float,    # down_pps
    _parse_optional_float,    # jain_index
    _parse_optional_float,    # residual_eq13
    _parse_status,            # status
)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_csv(rows: Iterable[SweepRow], path: str | Path) -> Path:
    """
    Write sweep rows under the fixed header.

    Raises
    ------
    OutputPathError
        The file or its directory cannot be created.
    """
    path = Path(path)
    rows = list(rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow([_format_cell(v) for v in astuple(row)])
    except OSError as exc:
        raise OutputPathError(f"cannot write {path}: {exc.strerror or exc}") from exc
    logger.info("Wrote %d rows to %s", len(rows), path)
    return path


def load_csv(path: str | Path) -> list[SweepRow]:
    """
    Parse a results CSV written by ``write_csv``.

    Raises
    ------
    ResultsFormatError
        Unreadable file, wrong header, wrong column count or an unparsable
        cell; the message carries ``path:line``.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ResultsFormatError(f"cannot read results: {exc.strerror or exc}", path) from exc

    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ResultsFormatError(
            f"unexpected header {header!r}; expected {','.join(CSV_HEADER)}", path, 1
        )
    names = [f.name for f in fields(SweepRow)]
    rows: list[SweepRow] = []
    for line_no, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(CSV_HEADER):
            raise ResultsFormatError(
                f"expected {len(CSV_HEADER)} cells, found {len(cells)}", path, line_no
            )
        values = {}
        for name, column, parse, cell in zip(names, CSV_HEADER, _PARSERS, cells):
            try:
                values[name] = parse(cell)
            except ValueError as exc:
                raise ResultsFormatError(f"column {column}: {exc}", path, line_no) from None
        rows.append(SweepRow(**values))
    return rows


# ---------------------------------------------------------------------------
# Plot data and comparison tables
# ---------------------------------------------------------------------------


def rows_to_frame(rows: Iterable[SweepRow]) -> pd.DataFrame:
    """DataFrame with one column per SweepRow field; missing numbers become NaN."""
    names = [f.name for f in fields(SweepRow)]
    df = pd.DataFrame([astuple(r) for r in rows], columns=names)
    for column in ("r_model", "ratio_up_down", "pr", "extra_service", "up_pps",
                   "down_pps", "jain_index", "residual_eq13"):
        df[column] = pd.to_numeric(df[column], errors="coerce").astype(float)
    return df


def _write_table(path: Path, header: str, series: pd.Series) -> None:
    lines = [header]
    lines += [f"{int(b)} {float(v)!r}" for b, v in series.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_plot_data(rows: Iterable[SweepRow], directory: str | Path) -> list[Path]:
    """
    Write whitespace-separated plot tables, two per (scenario, variant):

    * ``<scenario>_<variant>.dat``       columns ``B ratio_up_down``
    * ``<scenario>_<variant>_jain.dat``  columns ``B jain_index``

    Simulation rows are averaged across seeds; rows without a value
    (failed analytic points) are left out.
    """
    directory = Path(directory)
    df = rows_to_frame(rows)
    written: list[Path] = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for (scenario, variant), group in df.groupby(["scenario", "variant"], sort=False):
            per_buffer = group.groupby("buffer", sort=True).agg(
                ratio=("ratio_up_down", "mean"),
                jain=("jain_index", "mean"),
            )
            ratio_path = directory / f"{scenario}_{variant}.dat"
            jain_path = directory / f"{scenario}_{variant}_jain.dat"
            _write_table(ratio_path, "# B ratio_up_down", per_buffer["ratio"].dropna())
            _write_table(jain_path, "# B jain_index", per_buffer["jain"].dropna())
            written += [ratio_path, jain_path]
    except OSError as exc:
        raise OutputPathError(f"cannot write plot data to {directory}: {exc.strerror or exc}") from exc
    logger.info("Wrote %d plot tables to %s", len(written), directory)
    return written


def write_comparison(table: pd.DataFrame, path: str | Path) -> Path:
    """Write a comparison table as CSV (non-finite values as inf / nan)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False, na_rep="nan", lineterminator="\n")
    except OSError as exc:
        raise OutputPathError(f"cannot write {path}: {exc.strerror or exc}") from exc
    logger.info("Wrote comparison (%d rows) to %s", len(table), path)
    return path
