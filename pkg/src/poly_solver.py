"""
Real-root extraction for polynomials of degree ≤ 4.

Closed forms (quadratic formula, Cardano / trigonometric cubic, Ferrari
quartic) produce the roots the analytic model works with.  A uniform grid
scan followed by bisection of every sign-change cell is kept alongside as an
independent oracle for checking them.

Coefficients are always given in ascending order: ``coeffs[k]`` multiplies
``x**k``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from src.errors import NoSignChangeError, SolverError, ZeroPolynomialError

logger = logging.getLogger(__name__)

RESIDUAL_ATOL = 1e-9
RESIDUAL_RTOL = 1e-12
MERGE_RTOL = 1e-8            # roots closer than MERGE_RTOL * (1 + |r|) merge
_LEADING_CUTOFF = 1e-300     # leading coefficient below this * scale is dropped
_DISC_RTOL = 1e-12           # discriminant band treated as exactly zero
_NEWTON_STEPS = 4

CLOSED_FORM = "closed_form"
BISECTION = "bisection"


@dataclass(frozen=True)
class RootSet:
    """Distinct real roots in ascending order with their multiplicities."""

    roots: tuple[float, ...] = ()
    multiplicities: tuple[int, ...] = ()
    method: str = CLOSED_FORM

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


# ---------------------------------------------------------------------------
# Evaluation helpers
# ---------------------------------------------------------------------------


def polyval(coeffs: Sequence[float], x):
    """
    Evaluate an ascending-order polynomial in nested (Horner) form.

    Works for Python floats and for numpy arrays alike.

    >>> polyval([-6.0, 11.0, -6.0, 1.0], 2.0)
    0.0
    """
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def derivative(coeffs: Sequence[float]) -> list[float]:
    """Coefficients of the first derivative, ascending order."""
    return [k * c for k, c in enumerate(coeffs)][1:]


def residual_bound(coeffs: Sequence[float]) -> float:
    """|p(r)| allowed at a reported root: atol + rtol · max|coeff|."""
    return RESIDUAL_ATOL + RESIDUAL_RTOL * max(abs(c) for c in coeffs)


def _trim(coeffs: Sequence[float]) -> list[float]:
    """Float copy with negligible leading (highest-order) terms removed."""
    c = [float(x) for x in coeffs]
    if not c or not all(math.isfinite(x) for x in c):
        raise SolverError(f"coefficients must be finite reals, got {list(coeffs)!r}")
    scale = max(abs(x) for x in c)
    if scale == 0.0:
        raise ZeroPolynomialError("polynomial is identically zero")
    while abs(c[-1]) <= _LEADING_CUTOFF * scale:
        c.pop()
    return c


def _strip_zero_roots(c: list[float]) -> tuple[int, list[float]]:
    """Factor x**k out of the polynomial; returns (k, reduced coefficients)."""
    k = 0
    while k < len(c) - 1 and c[k] == 0.0:
        k += 1
    return k, c[k:]


def _polish(coeffs: Sequence[float], root: float) -> float:
    """Guarded Newton steps; a step is kept only if it shrinks |p(x)|."""
    deriv = derivative(coeffs)
    best = root
    best_val = abs(polyval(coeffs, root))
    x = root
    for _ in range(_NEWTON_STEPS):
        if best_val == 0.0:
            break
        slope = polyval(deriv, x)
        if slope == 0.0 or not math.isfinite(slope):
            break
        x = x - polyval(coeffs, x) / slope
        val = abs(polyval(coeffs, x))
        if not math.isfinite(x) or val >= best_val:
            break
        best, best_val = x, val
    return best


def _merge(found: list[tuple[float, int]], method: str) -> RootSet:
    """Sort, merge near-coincident roots and sum their multiplicities."""
    if not found:
        return RootSet((), (), method)
    found = sorted(found)
    groups: list[list[tuple[float, int]]] = [[found[0]]]
    for value, mult in found[1:]:
        anchor = groups[-1][0][0]
        if abs(value - anchor) <= MERGE_RTOL * (1.0 + abs(anchor)):
            groups[-1].append((value, mult))
        else:
            groups.append([(value, mult)])
    roots = []
    mults = []
    for group in groups:
        total = sum(m for _, m in group)
        roots.append(sum(v * m for v, m in group) / total)
        mults.append(total)
    return RootSet(tuple(roots), tuple(mults), method)


# ---------------------------------------------------------------------------
# Raw closed forms (exact degree, nonzero constant term)
# ---------------------------------------------------------------------------


def _roots_linear(c: Sequence[float]) -> list[tuple[float, int]]:
    return [(-c[0] / c[1], 1)]


def _roots_quadratic(c: Sequence[float]) -> list[tuple[float, int]]:
    c0, b, a = c
    disc = b * b - 4.0 * a * c0
    tol = _DISC_RTOL * max(b * b, abs(4.0 * a * c0))
    if disc < -tol:
        return []
    if disc <= tol:
        return [(-b / (2.0 * a), 2)]
    # Stable form: never subtract nearly equal quantities.
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    return [(q / a, 1), (c0 / q, 1)]


def _roots_cubic(c: Sequence[float]) -> list[tuple[float, int]]:
    a0, a1, a2, a3 = c
    b, cc, d = a2 / a3, a1 / a3, a0 / a3
    shift = b / 3.0
    # Depressed form t^3 + p t + q = 0 with x = t - b/3.
    p = cc - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * cc / 3.0 + d
    p_scale = max(b * b / 3.0, abs(cc))
    q_scale = max(abs(2.0 * b ** 3 / 27.0), abs(b * cc / 3.0), abs(d))
    if abs(p) <= _DISC_RTOL * p_scale and abs(q) <= _DISC_RTOL * q_scale:
        return [(-shift, 3)]

    half_q = 0.5 * q
    third_p = p / 3.0
    disc = half_q * half_q + third_p ** 3
    tol = _DISC_RTOL * max(half_q * half_q, abs(third_p) ** 3)

    if abs(disc) <= tol and p != 0.0:
        # One simple root and one double root.
        return [(3.0 * q / p - shift, 1), (-1.5 * q / p - shift, 2)]
    if disc > 0.0:
        # One real root (Cardano), larger cube-root branch to avoid cancellation.
        u = -math.copysign(math.cbrt(abs(half_q) + math.sqrt(disc)), q)
        t = u - p / (3.0 * u)
        return [(t - shift, 1)]
    # Three distinct real roots (trigonometric form, p < 0 here).
    m = 2.0 * math.sqrt(-third_p)
    arg = (3.0 * q / (2.0 * p)) * math.sqrt(-3.0 / p)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
    return [
        (m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift, 1)
        for k in range(3)
    ]


def _roots_quartic(c: Sequence[float]) -> list[tuple[float, int]]:
    a0, a1, a2, a3, a4 = c
    b, cc, d, e = a3 / a4, a2 / a4, a1 / a4, a0 / a4
    shift = b / 4.0
    # Depressed form y^4 + p y^2 + q y + r = 0 with x = y - b/4.
    p = cc - 3.0 * b * b / 8.0
    q = b ** 3 / 8.0 - b * cc / 2.0 + d
    r = -3.0 * b ** 4 / 256.0 + b * b * cc / 16.0 - b * d / 4.0 + e
    q_scale = max(abs(b ** 3 / 8.0), abs(b * cc / 2.0), abs(d))

    m = 0.0
    if abs(q) > _DISC_RTOL * q_scale:
        # Resolvent cubic 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0; its largest
        # real root is positive whenever q != 0.
        resolvent = [-q * q, 2.0 * p * p - 8.0 * r, 8.0 * p, 8.0]
        m = max(_polish(resolvent, z) for z, _ in _roots_cubic(resolvent))

    if m <= 0.0:
        # Biquadratic: z = y^2 solves z^2 + p z + r = 0.
        found: list[tuple[float, int]] = []
        for z, mult in _roots_quadratic([r, p, 1.0]) if r != 0.0 else [(0.0, 1), (-p, 1)]:
            if z > 0.0:
                s = math.sqrt(z)
                found += [(s - shift, mult), (-s - shift, mult)]
            elif z == 0.0:
                found.append((-shift, 2 * mult))
        return found

    s = math.sqrt(2.0 * m)
    half = q / (2.0 * s)
    found = []
    for sign in (1.0, -1.0):
        # y^2 - sign*s*y + (p/2 + m + sign*q/(2s)) = 0
        quad = [0.5 * p + m + sign * half, -sign * s, 1.0]
        found += [(y - shift, mult) for y, mult in _roots_quadratic(quad)]
    return found


_ROOTERS: dict[int, Callable[[Sequence[float]], list[tuple[float, int]]]] = {
    1: _roots_linear,
    2: _roots_quadratic,
    3: _roots_cubic,
    4: _roots_quartic,
}


# ---------------------------------------------------------------------------
# Public closed-form API
# ---------------------------------------------------------------------------


def solve_polynomial(coeffs: Sequence[float]) -> RootSet:
    """
    All real roots of a polynomial of degree ≤ 4.

    A negligible leading coefficient delegates to the next lower degree;
    exact zero low-order coefficients are factored out as roots at 0.

    Raises
    ------
    ZeroPolynomialError
        Every coefficient is zero.
    SolverError
        Degree above 4 or non-finite coefficients.
    """
    c = _trim(coeffs)
    if len(c) - 1 > 4:
        raise SolverError(f"degree {len(c) - 1} polynomials are not supported")
    zeros, reduced = _strip_zero_roots(c)
    found: list[tuple[float, int]] = [(0.0, zeros)] if zeros else []
    degree = len(reduced) - 1
    if degree >= 1:
        for root, mult in _ROOTERS[degree](reduced):
            if math.isfinite(root):
                found.append((_polish(reduced, root), mult))
    roots = _merge(found, CLOSED_FORM)
    bound = residual_bound(c)
    for root in roots.roots:
        if abs(polyval(c, root)) > bound:
            logger.debug("Root %.17g exceeds residual bound %.3g", root, bound)
    return roots


def solve_linear(coeffs: Sequence[float]) -> RootSet:
    _check_length(coeffs, 2)
    return solve_polynomial(coeffs)


def solve_quadratic(coeffs: Sequence[float]) -> RootSet:
    """Real roots of ``c0 + c1 x + c2 x^2``."""
    _check_length(coeffs, 3)
    return solve_polynomial(coeffs)


def solve_cubic(coeffs: Sequence[float]) -> RootSet:
    """
    Real roots of ``c0 + c1 x + c2 x^2 + c3 x^3`` by the cubic formula.

    The sign of the discriminant decides between one real root (Cardano) and
    three (trigonometric form); a vanishing discriminant yields a double root.

    Examples
    --------
    >>> [round(r, 9) for r in solve_cubic([-6, 11, -6, 1]).roots]
    [1.0, 2.0, 3.0]
    """
    _check_length(coeffs, 4)
    return solve_polynomial(coeffs)


def solve_quartic(coeffs: Sequence[float]) -> RootSet:
    """Real roots of a quartic via Ferrari's resolvent cubic."""
    _check_length(coeffs, 5)
    return solve_polynomial(coeffs)


def _check_length(coeffs: Sequence[float], expected: int) -> None:
    if len(coeffs) != expected:
        raise SolverError(
            f"expected {expected} ascending coefficients, got {len(coeffs)}"
        )


# ---------------------------------------------------------------------------
# Bracketing oracle
# ---------------------------------------------------------------------------


def bracket_bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    max_iter: int = 400,
) -> float:
    """
    Locate a sign change of ``f`` inside [lo, hi] by midpoint bisection.

    Returns the midpoint of the final bracket, whose width is at most ``tol``
    (or the floating-point resolution at that magnitude).

    Raises
    ------
    NoSignChangeError
        ``f(lo)`` and ``f(hi)`` have the same sign.
    """
    if not lo < hi:
        raise SolverError(f"bracket must satisfy lo < hi, got [{lo}, {hi}]")
    if tol <= 0:
        raise SolverError("tolerance must be positive")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoSignChangeError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if fmid == 0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_real_roots(
    f: Callable,
    lo: float,
    hi: float,
    grid: int = 1000,
    tol: float = 1e-12,
    vectorized: bool = False,
) -> RootSet:
    """
    Oracle root finder: evaluate ``f`` on a uniform grid and bisect every
    cell whose endpoints differ in sign.

    Roots of even multiplicity (no sign change) and pairs of roots inside one
    cell are invisible to the scan.  With ``vectorized=True`` the grid is
    evaluated in a single call ``f(ndarray)``.
    """
    if grid < 2:
        raise SolverError("grid needs at least two points")
    xs = np.linspace(lo, hi, grid)
    if vectorized:
        ys = np.asarray(f(xs), dtype=float)
    else:
        ys = np.fromiter((f(float(x)) for x in xs), dtype=float, count=grid)
    signs = np.sign(ys)

    found = [(float(xs[i]), 1) for i in np.flatnonzero(signs == 0)]
    for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
        found.append((bracket_bisect(f, float(xs[i]), float(xs[i + 1]), tol), 1))
    return _merge(found, BISECTION)


def scan_polynomial_roots(
    coeffs: Sequence[float],
    lo: float,
    hi: float,
    grid: int = 1000,
    tol: float = 1e-12,
) -> RootSet:
    """Vectorized ``scan_real_roots`` front-end for an ascending polynomial."""
    c = [float(x) for x in coeffs]
    return scan_real_roots(lambda x: polyval(c, x), lo, hi, grid, tol, vectorized=True)
