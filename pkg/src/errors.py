"""
Exception hierarchy for the WLAN fairness workbench.

Every error raised on purpose by ``src.*`` derives from ``WorkbenchError`` so
the CLI can map whole families onto exit codes.
"""

from __future__ import annotations

from pathlib import Path


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


# ---------------------------------------------------------------------------
# Scenario / model
# ---------------------------------------------------------------------------


class ScenarioError(WorkbenchError, ValueError):
    """Invalid scenario parameters or a violated operation precondition."""


class DegenerateScenarioError(ScenarioError):
    """Analytic operations need at least one UP and one DOWN station."""


class ModelError(WorkbenchError):
    """The analytic model could not produce a solution."""


class NonPhysicalRatioError(ModelError, ValueError):
    """U·w·R − D·E ≤ 0, i.e. a zero or negative downlink rate."""


class NoPhysicalRootError(ModelError):
    """No root candidate survived the acceptance policy."""

    def __init__(self, message: str, candidates: list | None = None) -> None:
        super().__init__(message)
        self.candidates = candidates or []


class NumericRangeError(ModelError, ArithmeticError):
    """A power term overflowed 64-bit floating point."""


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


class SolverError(WorkbenchError):
    """Base class for polynomial / bracketing failures."""


class ZeroPolynomialError(SolverError, ValueError):
    """The polynomial is identically zero (every real number is a root)."""


class NoSignChangeError(SolverError, ValueError):
    """The bracket endpoints do not straddle a sign change."""


# ---------------------------------------------------------------------------
# Metrics / simulation
# ---------------------------------------------------------------------------


class MetricError(WorkbenchError, ValueError):
    """Invalid input to a fairness or ratio metric."""


class SimulationError(WorkbenchError):
    """Invalid simulator configuration or an internal consistency failure."""


# ---------------------------------------------------------------------------
# Files and harness
# ---------------------------------------------------------------------------


class ConfigError(WorkbenchError):
    """A sweep configuration file could not be turned into a SweepSpec."""

    def __init__(
        self,
        message: str,
        path: str | Path | None = None,
        line: int | None = None,
    ) -> None:
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path if line is None else f"{self.path}:{line}"
            where += ": "
        super().__init__(where + message)


class MissingKeyError(ConfigError):
    """A required config key is absent."""


class MalformedValueError(ConfigError):
    """A config value has the wrong type or an out-of-range value."""


class SweepSpecError(ConfigError):
    """The assembled SweepSpec violates its invariants."""


class ResultsFormatError(ConfigError):
    """A results CSV has the wrong header or an unparsable cell."""


class OutputPathError(WorkbenchError):
    """An output file or directory cannot be written."""


class GridMismatchError(WorkbenchError):
    """Model and simulation rows share no buffer size."""
