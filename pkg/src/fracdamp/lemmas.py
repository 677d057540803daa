"""Numerical verification of the operator estimates for bracket weights.

Three things are checked against the quadrature engine:

* the derivative bound |d^alpha <x>^(-q)| <= C <x>^(-q-|alpha|),
* the decay estimate for (-Delta)^gamma <x>^(-q), whose majorant
  switches between three cases depending on the sign of q + 2m - n,
* the scaling identity (-Delta)^s [psi(./R)](x) = R^(-2s) [(-Delta)^s psi](x/R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .brackets import FractionalOrder, RadialWeight, bracket_radial, weight_partial_derivative
from .quadrature import QuadratureFailure, QuadratureScheme, weight_fractional_laplacian

__all__ = [
    "majorant_case",
    "decay_majorant",
    "DecayReport",
    "verify_decay_lemma",
    "ScalingReport",
    "verify_scaling",
    "derivative_bound_ratio",
]

#: |q + 2m - n| below this counts as the critical (logarithmic) case
CRITICAL_TOL = 1e-9


def majorant_case(q: float, m: int, n: int) -> str:
    """Which decay regime q + 2m vs n selects: 'below', 'critical', 'above'."""
    gap = q + 2.0 * m - n
    if abs(gap) < CRITICAL_TOL:
        return "critical"
    return "below" if gap < 0 else "above"


def decay_majorant(q: float, order: FractionalOrder, n: int, x) -> float:
    """Case-selected decay envelope for |(-Delta)^gamma <x>^(-q)|.

    <x>^(-q-2 gamma) below the threshold, <x>^(-n-2s) log(e+|x|) at it,
    <x>^(-n-2s) above it.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    r = float(np.sqrt(np.sum(np.atleast_1d(np.asarray(x, float)) ** 2)))
    b = float(bracket_radial(r))
    case = majorant_case(q, order.m, n)
    if case == "below":
        return b ** (-q - 2.0 * order.gamma)
    if case == "critical":
        return b ** (-n - 2.0 * order.s) * math.log(math.e + r)
    return b ** (-n - 2.0 * order.s)


def majorant_slope_target(q: float, order: FractionalOrder, n: int) -> float:
    """Log-log slope the computed values must approach (log factor divided out)."""
    case = majorant_case(q, order.m, n)
    if case == "below":
        return -(q + 2.0 * order.gamma)
    return -(n + 2.0 * order.s)


@dataclass
class DecayReport:
    n: int
    q: float
    gamma: float
    case: str
    radii: list
    values: list
    errors: list
    majorants: list
    ratios: list
    failures: list = field(default_factory=list)
    max_ratio: float = math.nan
    slope: float = math.nan
    slope_target: float = math.nan

    @property
    def complete(self) -> bool:
        return not self.failures


def verify_decay_lemma(q, order, n, radii, scheme=None) -> DecayReport:
    """Compare |(-Delta)^gamma <x>^(-q)| against its decay majorant.

    ``radii`` must span at least two decades.  The report carries the
    per-radius ratio to the majorant (which must stay bounded) and the
    fitted log-log slope of the values, with the critical-case log
    factor divided out before fitting.
    """
    radii = sorted(float(r) for r in radii)
    if radii[0] <= 0:
        raise ValueError("radii must be positive")
    if radii[-1] < 100.0 * radii[0]:
        raise ValueError("radii must span at least two decades")
    if not isinstance(order, FractionalOrder):
        order = FractionalOrder(order)
    if scheme is None:
        scheme = QuadratureScheme()

    w = RadialWeight(n, q)
    case = majorant_case(q, order.m, n)
    report = DecayReport(
        n=n, q=q, gamma=order.gamma, case=case,
        radii=radii, values=[], errors=[], majorants=[], ratios=[],
        slope_target=majorant_slope_target(q, order, n),
    )
    for r in radii:
        x = np.zeros(n)
        x[0] = r
        maj = decay_majorant(q, order, n, x)
        report.majorants.append(maj)
        try:
            val, err = weight_fractional_laplacian(w, order, x, scheme)
        except QuadratureFailure as exc:
            report.failures.append({"radius": r, "reason": str(exc)})
            report.values.append(math.nan)
            report.errors.append(math.nan)
            report.ratios.append(math.nan)
            continue
        report.values.append(val)
        report.errors.append(err)
        report.ratios.append(abs(val) / maj)

    good = [i for i, v in enumerate(report.values) if np.isfinite(v) and v != 0.0]
    if len(good) >= 2:
        logs_r = np.log([bracket_radial(report.radii[i]) for i in good])
        vals = np.array([abs(report.values[i]) for i in good])
        if case == "critical":
            vals = vals / np.array(
                [math.log(math.e + report.radii[i]) for i in good]
            )
        slope, _ = np.polyfit(logs_r, np.log(vals), 1)
        report.slope = float(slope)
        report.max_ratio = float(np.nanmax(report.ratios))
    return report


@dataclass
class ScalingReport:
    s: float
    R: float
    rows: list
    max_discrepancy: float
    combined_error: float

    @property
    def within(self) -> bool:
        return self.max_discrepancy <= self.combined_error


def verify_scaling(psi, s, R, sample_points, scheme=None, n=1) -> ScalingReport:
    """Check (-Delta)^s psi(./R) at x against R^(-2s) (-Delta)^s psi (x/R).

    Both sides are independent quadrature runs; the discrepancy must stay
    within the combined error estimates (``combined_error`` is their max
    over the sampled points).
    """
    from .quadrature import fractional_laplacian_quadrature

    if R <= 0:
        raise ValueError("scale R must be positive")
    if scheme is None:
        scheme = QuadratureScheme()
    rows = []
    worst = 0.0
    combined = 0.0
    for x in sample_points:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lhs, e_lhs = fractional_laplacian_quadrature(
            lambda pts: psi(pts / R), s, x, scheme, n=n
        )
        rhs_val, e_rhs = fractional_laplacian_quadrature(psi, s, x / R, scheme, n=n)
        rhs = R ** (-2.0 * s) * rhs_val
        disc = abs(lhs - rhs)
        err = e_lhs + R ** (-2.0 * s) * e_rhs
        rows.append({
            "x": x.tolist(), "lhs": lhs, "rhs": rhs,
            "discrepancy": disc, "error_budget": err,
        })
        worst = max(worst, disc)
        combined = max(combined, err)
    return ScalingReport(s=s, R=R, rows=rows, max_discrepancy=worst, combined_error=combined)


def derivative_bound_ratio(w: RadialWeight, alpha, radii) -> float:
    """Max over ``radii`` of |d^alpha <x>^(-q)| / <x>^(-q-|alpha|).

    The points run along the diagonal direction so every component of the
    multi-index is exercised.
    """
    alpha = tuple(int(a) for a in alpha)
    total = sum(alpha)
    direction = np.ones(w.n) / math.sqrt(w.n)
    worst = 0.0
    for r in radii:
        x = r * direction
        val = weight_partial_derivative(w, alpha, x)
        envelope = bracket_radial(r) ** (-w.q - total)
        worst = max(worst, abs(float(val)) / envelope)
    return worst
