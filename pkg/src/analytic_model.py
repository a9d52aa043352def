"""
Analytic model of the uplink/downlink TCP throughput ratio in an
infrastructure WLAN as a function of access-point buffer size.

The AP buffer is treated as an M/M/1/B queue whose full-buffer probability
is the loss rate seen by downlink TCP senders, whose rate follows the
square-root (Padhye) law.  Uplink stations are never loss-limited and send at
w/RTT.  Eliminating the loss rate leaves one equation in the down/up ratio

    (1 + R)^B · P(R) = 3D² / U^B,     P(R) = c3 R³ + c2 R² + c1 R + c0

which is solved three ways:

* ``new_cubic``            derivative of the log form, a cubic in R
* ``old_quartic``          the algebraic extension of the earlier model, a quartic
* ``exact_transcendental`` the equation itself, by bracketed bisection

``R`` is total downlink over total uplink throughput; every report also
carries its reciprocal, the up/down ratio used for plotting.
"""

from __future__ import annotations

import logging
import math
import numbers
from dataclasses import dataclass, replace
from enum import Enum

from src.config import DEFAULT_RTT, DEFAULT_WINDOW
from src.errors import (
    DegenerateScenarioError,
    ModelError,
    NonPhysicalRatioError,
    NoPhysicalRootError,
    NumericRangeError,
    ScenarioError,
)
from src.metrics import jain_index
from src.poly_solver import (
    RootSet,
    derivative,
    polyval,
    scan_real_roots,
    solve_cubic,
    solve_quartic,
)

logger = logging.getLogger(__name__)

ROOT_EPSILON = 1e-9          # candidate roots at or below this are rejected
RHO_SINGULAR_BAND = 1e-9     # |rho - 1| below this uses the 1/(B+1) limit
LOG_SPACE_MIN_BUFFER = 200   # power terms switch to log space above this B
EXACT_SCAN_CELLS = 10_000
EXACT_BISECT_TOL = 1e-10
_EXP_LIMIT = 709.78          # log of the largest finite double

# Machine-readable rejection reasons carried by RootCandidate.
REJECT_NON_POSITIVE = "non_positive"
REJECT_NONPHYSICAL_RATE = "nonphysical_rate"
REJECT_NOT_MINIMAL = "residual_not_minimal"
REJECT_NUMERIC_RANGE = "numeric_range"


class ModelVariant(str, Enum):
    NEW_CUBIC = "new_cubic"
    OLD_QUARTIC = "old_quartic"
    EXACT_TRANSCENDENTAL = "exact_transcendental"

    @classmethod
    def parse(cls, name: str | ModelVariant) -> ModelVariant:
        """Accept canonical names and the CLI short forms new/old/exact."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"new": cls.NEW_CUBIC, "old": cls.OLD_QUARTIC, "exact": cls.EXACT_TRANSCENDENTAL}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ScenarioError(f"unknown model variant {name!r}") from None


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioParams:
    """
    Inputs shared by the analytic and the simulated path.

    ``rtt`` cancels out of the ratio equations; it only scales the absolute
    per-station rates.
    """

    up_stations: int
    down_stations: int
    buffer_size: int
    max_window: int = DEFAULT_WINDOW
    rtt: float = DEFAULT_RTT

    def __post_init__(self) -> None:
        for name, minimum in (
            ("up_stations", 0),
            ("down_stations", 0),
            ("buffer_size", 1),
            ("max_window", 1),
        ):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Integral):
                raise ScenarioError(f"{name} must be an integer, got {value!r}")
            if value < minimum:
                raise ScenarioError(f"{name} must be >= {minimum}, got {value}")
            object.__setattr__(self, name, int(value))
        if self.up_stations + self.down_stations < 1:
            raise ScenarioError("scenario needs at least one station")
        if not (isinstance(self.rtt, numbers.Real) and math.isfinite(self.rtt) and self.rtt > 0):
            raise ScenarioError(f"rtt must be a positive number of seconds, got {self.rtt!r}")
        object.__setattr__(self, "rtt", float(self.rtt))

    def with_buffer(self, buffer_size: int) -> ScenarioParams:
        return replace(self, buffer_size=buffer_size)


@dataclass(frozen=True)
class RealPolynomial:
    """Real polynomial in R, ascending coefficients, trailing zeros trimmed."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        c = [float(x) for x in self.coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c or [0.0]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return polyval(self.coeffs, x)

    def derivative(self) -> RealPolynomial:
        return RealPolynomial(tuple(derivative(self.coeffs)) or (0.0,))


@dataclass(frozen=True)
class RootCandidate:
    value: float
    multiplicity: int = 1
    residual_eq13: float | None = None
    rejection: str | None = None

    @property
    def accepted(self) -> bool:
        return self.rejection is None


@dataclass(frozen=True)
class ModelSolution:
    """A solved ratio plus everything needed to audit how it was chosen."""

    variant: ModelVariant
    params: ScenarioParams
    ratio_down_up: float
    ratio_up_down: float
    loss_prob: float
    pr_raw: float
    pr_clamped: bool
    rho: float
    extra_service: float
    residual_eq13: float
    candidates: tuple[RootCandidate, ...]
    uplink_rate: float
    downlink_rate: float


# ---------------------------------------------------------------------------
# Queueing and rate equations
# ---------------------------------------------------------------------------


def _require_analytic(p: ScenarioParams) -> None:
    if p.up_stations < 1 or p.down_stations < 1:
        raise DegenerateScenarioError(
            f"analytic model needs U >= 1 and D >= 1, got U={p.up_stations} D={p.down_stations}"
        )


def extra_service(p: ScenarioParams) -> float:
    """
    Share of the AP buffer beyond the uplink demand credited to downlink.

    Parameters
    ----------
    p : ScenarioParams
        Scenario with U >= 1 and D >= 1.

    Returns
    -------
    float
        ``3(B - Uw) / (4D)`` when B > Uw, otherwise 0.

    Example
    -------
    >>> extra_service(ScenarioParams(1, 2, 84))
    15.75
    """
    _require_analytic(p)
    surplus = p.buffer_size - p.up_stations * p.max_window
    if surplus <= 0:
        return 0.0
    return 3.0 * surplus / (4.0 * p.down_stations)


def utilization(up_stations: int, ratio_down_up: float) -> float:
    """AP utilization rho = U(1 + R); the AP contends like one more UP station."""
    if up_stations < 1:
        raise DegenerateScenarioError("utilization needs at least one UP station")
    if not ratio_down_up > 0:
        raise ScenarioError(f"ratio must be positive, got {ratio_down_up}")
    return up_stations * (1.0 + ratio_down_up)


def blocking_probability(rho: float, buffer_size: int) -> float:
    """
    Probability that an M/M/1/B queue is full, ``(1-ρ)ρ^B / (1-ρ^(B+1))``.

    Evaluated in a form that stays finite for large B on both sides of
    ρ = 1; within 1e-9 of ρ = 1 the limit ``1/(B+1)`` is returned.

    Example
    -------
    >>> round(blocking_probability(2.0, 1), 4)
    0.6667
    """
    if not (math.isfinite(rho) and rho > 0):
        raise ScenarioError(f"rho must be positive, got {rho}")
    if buffer_size < 1:
        raise ScenarioError(f"buffer size must be >= 1, got {buffer_size}")
    if abs(rho - 1.0) < RHO_SINGULAR_BAND:
        return 1.0 / (buffer_size + 1)
    log_rho = math.log(rho)
    if rho < 1.0:
        return (1.0 - rho) * math.exp(buffer_size * log_rho) / -math.expm1((buffer_size + 1) * log_rho)
    # Divided through by rho^(B+1).
    return (rho - 1.0) / (rho - math.exp(-buffer_size * log_rho))


def _check_rate_inputs(loss_prob: float, rtt: float) -> None:
    if not 0.0 < loss_prob <= 1.0:
        raise ScenarioError(f"loss probability must lie in (0, 1], got {loss_prob}")
    if not rtt > 0:
        raise ScenarioError(f"rtt must be positive, got {rtt}")


def padhye_rate(loss_prob: float, rtt: float) -> float:
    """Square-root TCP rate in packets/second: sqrt(3 / (2 Pr)) / rtt."""
    _check_rate_inputs(loss_prob, rtt)
    return math.sqrt(3.0 / (2.0 * loss_prob)) / rtt


def downlink_rate(loss_prob: float, extra: float, rtt: float) -> float:
    """Downlink station rate: the square-root law plus the extra-service share."""
    _check_rate_inputs(loss_prob, rtt)
    if extra < 0:
        raise ScenarioError(f"extra service must be >= 0, got {extra}")
    return (math.sqrt(3.0 / (2.0 * loss_prob)) + extra) / rtt


def loss_from_ratio(p: ScenarioParams, extra: float, ratio_down_up: float) -> float:
    """
    Loss probability implied by a down/up ratio, before clamping to 1.

    Raises NonPhysicalRatioError when ``UwR - DE <= 0`` (zero or negative
    downlink rate).
    """
    surplus = p.up_stations * p.max_window * ratio_down_up - p.down_stations * extra
    if surplus <= 0:
        raise NonPhysicalRatioError(
            f"U*w*R - D*E = {surplus:.6g} <= 0 at R={ratio_down_up:.6g}"
        )
    return 3.0 * p.down_stations ** 2 / (2.0 * surplus * surplus)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


def base_cubic_coeffs(p: ScenarioParams, extra: float) -> tuple[float, float, float, float]:
    """
    Coefficients (c0, c1, c2, c3) of P(R) = c3 R³ + c2 R² + c1 R + c0.

    ``c0`` is kept in the factored form ``3UD² + 2D²E²(1 - U)`` so that it is
    exactly ``3D²`` when U = 1.
    """
    _require_analytic(p)
    U = float(p.up_stations)
    D = float(p.down_stations)
    w = float(p.max_window)
    E = float(extra)
    c3 = -2.0 * U ** 3 * w ** 2
    c2 = 4.0 * D * E * U ** 2 * w - 2.0 * U ** 3 * w ** 2 + 2.0 * U ** 2 * w ** 2
    c1 = 3.0 * U * D ** 2 - 2.0 * U * D ** 2 * E ** 2 + 4.0 * D * E * U ** 2 * w - 4.0 * D * E * U * w
    c0 = 3.0 * U * D ** 2 + 2.0 * D ** 2 * E ** 2 * (1.0 - U)
    return c0, c1, c2, c3


def new_model_polynomial(p: ScenarioParams) -> RealPolynomial:
    """The cubic B·P(R) + (1 + R)·P'(R)."""
    c0, c1, c2, c3 = base_cubic_coeffs(p, extra_service(p))
    B = float(p.buffer_size)
    return RealPolynomial((
        c1 + B * c0,
        2.0 * c2 + c1 + B * c1,
        3.0 * c3 + 2.0 * c2 + B * c2,
        B * c3 + 3.0 * c3,
    ))


def _inverse_power_term(p: ScenarioParams) -> float:
    """3D² / U^B, in log space when B is large."""
    numerator = 3.0 * p.down_stations ** 2
    if p.up_stations == 1:
        return numerator
    B = p.buffer_size
    if B > LOG_SPACE_MIN_BUFFER:
        return math.exp(math.log(numerator) - B * math.log(p.up_stations))
    try:
        return numerator / float(p.up_stations) ** B
    except OverflowError:
        raise NumericRangeError(f"U^B overflows for U={p.up_stations}, B={B}") from None


def old_model_polynomial(p: ScenarioParams) -> RealPolynomial:
    """
    The quartic (1 + B R)·P(R) - 3D²/U^B obtained by extending the earlier
    base model algebraically.
    """
    c0, c1, c2, c3 = base_cubic_coeffs(p, extra_service(p))
    B = float(p.buffer_size)
    return RealPolynomial((
        c0 - _inverse_power_term(p),
        c1 + B * c0,
        c2 + B * c1,
        c3 + B * c2,
        B * c3,
    ))


def eq13_residual(p: ScenarioParams, ratio_down_up: float) -> float:
    """
    Signed residual ``(1 + R)^B · P(R) - 3D²/U^B`` of the untransformed ratio
    equation.  R = 0 is allowed.

    Raises
    ------
    NumericRangeError
        ``(1 + R)^B · P(R)`` exceeds the double range.
    """
    _require_analytic(p)
    if ratio_down_up < 0:
        raise ScenarioError(f"ratio must be >= 0, got {ratio_down_up}")
    base = base_cubic_coeffs(p, extra_service(p))
    value = polyval(base, ratio_down_up)
    rhs = _inverse_power_term(p)
    B = p.buffer_size
    if B > LOG_SPACE_MIN_BUFFER:
        if value == 0.0:
            return -rhs
        log_mag = B * math.log1p(ratio_down_up) + math.log(abs(value))
        if log_mag > _EXP_LIMIT:
            raise NumericRangeError(f"(1+R)^B * P(R) overflows at R={ratio_down_up:.6g}, B={B}")
        return math.copysign(math.exp(log_mag), value) - rhs
    try:
        lhs = (1.0 + ratio_down_up) ** B * value
    except OverflowError:
        raise NumericRangeError(f"(1+R)^B overflows at R={ratio_down_up:.6g}, B={B}") from None
    if not math.isfinite(lhs):
        raise NumericRangeError(f"(1+R)^B * P(R) overflows at R={ratio_down_up:.6g}, B={B}")
    return lhs - rhs


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


def exact_search_limit(p: ScenarioParams) -> float:
    """Upper end of the bracket scan: max(2, 2DE/(Uw) + 2)."""
    extra = extra_service(p)
    return max(2.0, 2.0 * p.down_stations * extra / (p.up_stations * p.max_window) + 2.0)


def _exact_roots(p: ScenarioParams) -> RootSet:
    base = base_cubic_coeffs(p, extra_service(p))

    def residual_sign_safe(r: float) -> float:
        # Overflow keeps the sign of P(R), which is all bracketing needs.
        try:
            return eq13_residual(p, r)
        except NumericRangeError:
            return math.copysign(math.inf, polyval(base, r))

    return scan_real_roots(
        residual_sign_safe,
        ROOT_EPSILON,
        exact_search_limit(p),
        grid=EXACT_SCAN_CELLS + 1,
        tol=EXACT_BISECT_TOL,
    )


def _find_roots(p: ScenarioParams, variant: ModelVariant) -> RootSet:
    if variant is ModelVariant.NEW_CUBIC:
        return solve_cubic(new_model_polynomial(p).coeffs)
    if variant is ModelVariant.OLD_QUARTIC:
        return solve_quartic(old_model_polynomial(p).coeffs)
    return _exact_roots(p)


def _assess_candidates(
    p: ScenarioParams, extra: float, roots: RootSet
) -> tuple[RootCandidate, list[RootCandidate]]:
    """Apply the acceptance policy; returns (accepted, all candidates)."""
    assessed: list[RootCandidate] = []
    for value, mult in zip(roots.roots, roots.multiplicities):
        if value <= ROOT_EPSILON:
            assessed.append(RootCandidate(value, mult, None, REJECT_NON_POSITIVE))
        elif p.up_stations * p.max_window * value - p.down_stations * extra <= 0:
            assessed.append(RootCandidate(value, mult, None, REJECT_NONPHYSICAL_RATE))
        else:
            try:
                residual = eq13_residual(p, value)
            except NumericRangeError:
                assessed.append(RootCandidate(value, mult, None, REJECT_NUMERIC_RANGE))
            else:
                assessed.append(RootCandidate(value, mult, residual, None))

    survivors = [c for c in assessed if c.accepted]
    if not survivors:
        if any(c.rejection == REJECT_NUMERIC_RANGE for c in assessed):
            raise NumericRangeError(
                f"every physical root overflows the residual for B={p.buffer_size}"
            )
        raise NoPhysicalRootError(
            f"no root with R > {ROOT_EPSILON} and U*w*R > D*E "
            f"(U={p.up_stations} D={p.down_stations} w={p.max_window} B={p.buffer_size})",
            candidates=assessed,
        )
    best = min(survivors, key=lambda c: (abs(c.residual_eq13), c.value))
    final = [
        c if c is best or not c.accepted else replace(c, rejection=REJECT_NOT_MINIMAL)
        for c in assessed
    ]
    for c in final:
        if c.rejection is not None:
            logger.debug("Rejected root R=%.12g (%s)", c.value, c.rejection)
    return best, final


def solve_model(
    p: ScenarioParams,
    variant: ModelVariant | str = ModelVariant.NEW_CUBIC,
) -> ModelSolution:
    """
    Solve for the down/up throughput ratio with one model variant.

    Every real root is a candidate.  Roots at or below 1e-9 and roots that
    give a non-positive downlink rate are rejected; among the rest the one
    with the smallest |eq13_residual| wins, ties going to the smaller R.

    Parameters
    ----------
    p : ScenarioParams
        Scenario with U >= 1 and D >= 1.
    variant : ModelVariant | str
        ``new_cubic``, ``old_quartic`` or ``exact_transcendental``
        (short forms ``new``/``old``/``exact`` accepted).

    Returns
    -------
    ModelSolution

    Raises
    ------
    NoPhysicalRootError
        No candidate survives; the exception carries the rejected candidates.
    NumericRangeError
        A power term overflows double precision.

    Example
    -------
    >>> 15.0 < solve_model(ScenarioParams(1, 1, 20)).ratio_up_down < 16.0
    True
    """
    _require_analytic(p)
    variant = ModelVariant.parse(variant)
    extra = extra_service(p)
    best, candidates = _assess_candidates(p, extra, _find_roots(p, variant))

    ratio = best.value
    pr_raw = loss_from_ratio(p, extra, ratio)
    clamped = pr_raw > 1.0
    if clamped:
        logger.warning(
            "Pr clamped to 1 (raw %.4g) for U=%d D=%d B=%d %s",
            pr_raw, p.up_stations, p.down_stations, p.buffer_size, variant.value,
        )
    return ModelSolution(
        variant=variant,
        params=p,
        ratio_down_up=ratio,
        ratio_up_down=1.0 / ratio,
        loss_prob=min(pr_raw, 1.0),
        pr_raw=pr_raw,
        pr_clamped=clamped,
        rho=utilization(p.up_stations, ratio),
        extra_service=extra,
        residual_eq13=best.residual_eq13,
        candidates=tuple(candidates),
        uplink_rate=p.max_window / p.rtt,
        downlink_rate=ratio * p.up_stations * p.max_window / (p.down_stations * p.rtt),
    )


def compare_variants(p: ScenarioParams) -> dict[ModelVariant, ModelSolution | ModelError]:
    """Solve every variant; failures are returned in place of a solution."""
    results: dict[ModelVariant, ModelSolution | ModelError] = {}
    for variant in ModelVariant:
        try:
            results[variant] = solve_model(p, variant)
        except (NoPhysicalRootError, NumericRangeError) as exc:
            results[variant] = exc
    return results


# ---------------------------------------------------------------------------
# Derived predictions
# ---------------------------------------------------------------------------


def predicted_station_rates(
    p: ScenarioParams,
    solution: ModelSolution,
    rtt: float | None = None,
) -> tuple[float, float]:
    """Per-station (uplink, downlink) rates in packets/second."""
    rtt = p.rtt if rtt is None else rtt
    if not rtt > 0:
        raise ScenarioError(f"rtt must be positive, got {rtt}")
    up = p.max_window / rtt
    down = solution.ratio_down_up * p.up_stations * up / p.down_stations
    return up, down


def predicted_jain_index(p: ScenarioParams, solution: ModelSolution) -> float:
    """Fairness index over U uplink and D downlink stations at the model's rates."""
    up, down = predicted_station_rates(p, solution)
    return jain_index([up] * p.up_stations + [down] * p.down_stations)


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    scenario = ScenarioParams(up_stations=1, down_stations=1, buffer_size=84)
    for name, outcome in compare_variants(scenario).items():
        if isinstance(outcome, ModelSolution):
            print(f"{name.value:22s} up/down = {outcome.ratio_up_down:.4f}")
        else:
            print(f"{name.value:22s} failed: {outcome}")
