"""Space-time functionals of the test-function pipeline.

Multiplying the damped evolution equation by the product test function
eta_R(t) phi_R(x) (phi_R(x) = phi(x/R)) and integrating by parts in time
yields, for solutions with u(0) = 0,

    I_R = -int u1 phi_R dx + J1 + J2 - J3

with
    I_R = intint |u|^p eta_R phi_R,
    J1  = intint u  eta_R'' phi_R,
    J2  = intint u  eta_R (-Delta)^sigma phi_R,
    J3  = intint u  eta_R' (-Delta)^delta phi_R.

The fractional Laplacians land on the weight (Parseval), where the
integer part is exact and the fractional part comes from the quadrature
engine via a cached radial profile.  ``evaluate_functionals`` computes
all pieces with one shared trapezoid rule and reports the identity
residual; ``check_contradiction_bound`` compares the data term against
the shrinking bound R^(-2 sigma p' + n + alpha).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .brackets import FractionalOrder, RadialWeight, iterated_laplacian_terms
from .cutoffs import SpatialWeightChoice, TemporalCutoff
from .params import HypothesisError, ModelParams, contradiction_exponent
from .quadrature import QuadratureScheme, sphere_surface, weight_fractional_laplacian

__all__ = [
    "BoxGrid",
    "RadialGrid",
    "SpaceTimeField",
    "LeakageError",
    "FunctionalReport",
    "evaluate_functionals",
    "ContradictionCheck",
    "check_contradiction_bound",
    "contradiction_ladder",
    "default_times",
    "weight_operator_on_radii",
]


class LeakageError(ValueError):
    """The spatial grid is too small: phi_R at the boundary is not negligible."""

    def __init__(self, leakage, tol):
        super().__init__(
            f"weight leakage {leakage:.3e} at the grid boundary exceeds {tol:.1e}; "
            "enlarge the spatial domain"
        )
        self.leakage = leakage
        self.tol = tol


def _trapezoid_weights(x):
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    w[1:] += 0.5 * np.diff(x)
    w[:-1] += 0.5 * np.diff(x)
    return w


class BoxGrid:
    """Uniform tensor grid on [-X, X]^n with trapezoid weights, n <= 3."""

    def __init__(self, n: int, extent: float, points_per_axis: int):
        if n not in (1, 2, 3):
            raise ValueError("n must be 1, 2, or 3")
        self.n = n
        self.extent = float(extent)
        axis = np.linspace(-extent, extent, points_per_axis)
        wa = _trapezoid_weights(axis)
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        self.points = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*([wa] * n), indexing="ij")
        self.weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
        self.radii = np.sqrt(np.sum(self.points**2, axis=-1))
        self.boundary_radius = float(extent)

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * np.asarray(values)))


class RadialGrid:
    """Radial quadrature grid for radially symmetric integrands on R^n.

    Integrates int f(|x|) dx = surface(S^(n-1)) int f(r) r^(n-1) dr by a
    trapezoid rule on the given radial nodes.
    """

    def __init__(self, n: int, radii):
        self.n = n
        self.radii = np.asarray(radii, dtype=float)
        if self.radii[0] != 0.0 or np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must increase from 0")
        self.points = self.radii[:, None]  # along the first axis
        self.weights = (
            _trapezoid_weights(self.radii)
            * sphere_surface(n)
            * self.radii ** (n - 1)
        )
        self.boundary_radius = float(self.radii[-1])

    @classmethod
    def graded(cls, n: int, r_max: float, count: int) -> "RadialGrid":
        """Nodes clustered near the origin, geometric farther out."""
        inner = np.linspace(0.0, 1.0, max(8, count // 4))
        outer = np.geomspace(1.0, r_max, count - inner.size + 1)[1:]
        return cls(n, np.concatenate([inner, outer]))

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * np.asarray(values)))


@dataclass
class SpaceTimeField:
    """Solution samples u(t_i, x_k) on a time array and a spatial grid."""

    times: np.ndarray
    grid: object
    values: np.ndarray  # shape (len(times), len(grid.radii))

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.times.size, self.grid.radii.size):
            raise ValueError("values shape must be (n_times, n_spatial)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @classmethod
    def from_radial_callable(cls, fn, times, grid) -> "SpaceTimeField":
        times = np.asarray(times, dtype=float)
        vals = np.stack([np.asarray(fn(t, grid.radii), dtype=float) for t in times])
        return cls(times, grid, vals)


def default_times(R: float, alpha: float, count: int = 64, early_scale: float = 32.0):
    """Time nodes on [0, R^alpha]: dense early, split point included.

    Solutions and sources live on O(1) time scales while the horizon
    R^alpha grows, so the grid concentrates ``count`` nodes on
    [0, early_scale], keeps a coarse middle, and resolves the cutoff
    transition [R^alpha / 2, R^alpha].
    """
    horizon = R**alpha
    early_end = min(early_scale, horizon / 2.0)
    parts = [np.linspace(0.0, early_end, count + 1)]
    if early_end < horizon / 2.0:
        parts.append(np.linspace(early_end, horizon / 2.0, max(3, count // 8)))
    parts.append(np.linspace(horizon / 2.0, horizon, count // 2 + 1))
    return np.unique(np.concatenate(parts))


# --- cached radial profiles of (-Delta)^gamma <x>^(-q) ----------------------

_PROFILE_CACHE: dict = {}
_PROFILE_LOCK = threading.Lock()
_PROFILE_NODES = 192

#: profiles feed trapezoid-rule integrands, so ~1e-5 relative accuracy is
#: plenty; a light scheme keeps the 192-point sweep fast
_PROFILE_SCHEME = QuadratureScheme(
    n_radial=16, n_angular=16, n_polar=8, panel_nodes=8
)


def _profile_interpolant(n, q, order: FractionalOrder, r_max, scheme):
    key = (
        n, round(q, 12), order.m, round(order.s, 12),
        int(math.ceil(math.log2(max(r_max, 2.0)))),
        scheme,
    )
    with _PROFILE_LOCK:
        hit = _PROFILE_CACHE.get(key)
    if hit is not None:
        return hit
    r_hi = 2.0 ** key[4]
    radii = np.concatenate(
        [np.linspace(0.0, 1.0, 33)[:-1], np.geomspace(1.0, 1.02 * r_hi, _PROFILE_NODES - 32)]
    )
    w = RadialWeight(n, q)
    vals = np.empty_like(radii)
    for i, r in enumerate(radii):
        x = np.zeros(n)
        x[0] = r
        vals[i], _ = weight_fractional_laplacian(w, order, x, scheme)
    spline = CubicSpline(np.log1p(radii), vals)
    with _PROFILE_LOCK:
        _PROFILE_CACHE[key] = spline
    return spline


def weight_operator_on_radii(weight: RadialWeight, gamma: float, radii,
                             scheme=None, profile_rmax=None):
    """(-Delta)^gamma <x>^(-q) sampled at the given radii.

    Integer gamma is evaluated exactly from the iterated-Laplacian sum;
    a fractional part goes through the quadrature engine on a cached
    radial profile (the operator of a radial function is radial).
    ``profile_rmax`` widens the cached profile so one interpolant can
    serve a whole ladder of rescaled evaluations.
    """
    radii = np.asarray(radii, dtype=float)
    order = FractionalOrder(gamma)
    if order.s == 0.0:
        return iterated_laplacian_terms(weight, order.m).radial(radii)
    if scheme is None:
        scheme = _PROFILE_SCHEME
    r_hi = max(float(np.max(radii)), profile_rmax or 0.0)
    spline = _profile_interpolant(weight.n, weight.q, order, r_hi, scheme)
    return spline(np.log1p(radii))


# --- the functionals --------------------------------------------------------


@dataclass
class FunctionalReport:
    """One R-slice of the functional pipeline."""

    R: float
    I_R: float
    I_Rt: float
    J1: float
    J2: float
    J3: float
    data_term: float
    u0_term: float = 0.0
    identity_residual: float = math.nan
    leakage: float = math.nan
    j1_holder_factor: float = math.nan
    j3_holder_factor: float = math.nan


def evaluate_functionals(
    u: SpaceTimeField,
    u1,
    params: ModelParams,
    R: float,
    weight,
    source=None,
    u0=None,
    scheme=None,
    leakage_tol: float = 1e-8,
    profile_rmax=None,
) -> FunctionalReport:
    """Evaluate I_R, I_{R,t}, J1..J3, the data term, and the identity residual.

    ``u`` must be sampled on [0, R^alpha] x (a grid whose boundary keeps
    phi_R below ``leakage_tol`` relative to phi_R(0) = 1, else a
    :class:`LeakageError` reports the measured leakage).  ``source``
    overrides the default |u|^p integrand of I_R (used by manufactured
    solutions); ``u0`` adds the initial-datum term that enters the
    identity when u(0) is not zero.
    """
    if isinstance(weight, SpatialWeightChoice):
        weight = weight.weight()
    if weight.n != u.grid.n:
        raise ValueError("weight dimension does not match the grid")
    horizon = R**params.alpha
    if u.times[0] > 1e-12 or u.times[-1] < horizon * (1.0 - 1e-9):
        raise ValueError(
            f"time samples must cover [0, R^alpha] = [0, {horizon:.6g}]"
        )

    phi = weight.radial(u.grid.radii / R)
    leakage = float(weight.radial(u.grid.boundary_radius / R))
    if leakage > leakage_tol:
        raise LeakageError(leakage, leakage_tol)

    cutoff = TemporalCutoff(R=R, alpha=params.alpha)
    eta, eta_d1, eta_d2 = cutoff(u.times)
    wt = _trapezoid_weights(u.times)
    wx = u.grid.weights

    if source is None:
        source = np.abs(u.values) ** params.p
    else:
        source = np.asarray(source, dtype=float)

    lap_sigma = R ** (-2.0 * params.sigma) * weight_operator_on_radii(
        weight, params.sigma, u.grid.radii / R, scheme, profile_rmax
    )
    if params.delta > 0.0:
        lap_delta = R ** (-2.0 * params.delta) * weight_operator_on_radii(
            weight, params.delta, u.grid.radii / R, scheme, profile_rmax
        )
    else:
        lap_delta = phi  # (-Delta)^0 is the identity

    spatial_src = source @ (wx * phi)          # per-time int |u|^p phi_R dx
    spatial_u_phi = u.values @ (wx * phi)
    spatial_u_sig = u.values @ (wx * lap_sigma)
    spatial_u_del = u.values @ (wx * lap_delta)

    I_R = float(np.sum(wt * eta * spatial_src))
    late = u.times >= horizon / 2.0 - 1e-12
    wt_late = _trapezoid_weights(u.times[late])
    I_Rt = float(np.sum(wt_late * (eta * spatial_src)[late]))
    J1 = float(np.sum(wt * eta_d2 * spatial_u_phi))
    J2 = float(np.sum(wt * eta * spatial_u_sig))
    J3 = float(np.sum(wt * eta_d1 * spatial_u_del))
    data_term = float(np.sum(wx * phi * np.asarray(u1, dtype=float)))
    u0_term = 0.0
    if u0 is not None:
        u0_term = float(np.sum(wx * lap_delta * np.asarray(u0, dtype=float)))

    residual = abs(I_R - (-data_term - u0_term + J1 + J2 - J3))

    # Hoelder companions: |J1| <= I_Rt^(1/p) * j1_holder_factor holds
    # exactly for the shared discrete rule (same for J3 with eta').
    pc = params.p_conj
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_neg = np.where(eta > 0.0, eta ** (-pc / params.p), 0.0)
    phi_int = float(np.sum(wx * phi))
    j1_fac = float(
        np.sum(wt * eta_neg * np.abs(eta_d2) ** pc) * phi_int
    ) ** (1.0 / pc)
    j3_fac_time = float(np.sum(wt * eta_neg * np.abs(eta_d1) ** pc))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_neg = np.where(phi > 0.0, phi ** (-pc / params.p), 0.0)
    j3_fac = (
        j3_fac_time * float(np.sum(wx * phi_neg * np.abs(lap_delta) ** pc))
    ) ** (1.0 / pc)

    return FunctionalReport(
        R=R, I_R=I_R, I_Rt=I_Rt, J1=J1, J2=J2, J3=J3,
        data_term=data_term, u0_term=u0_term,
        identity_residual=residual, leakage=leakage,
        j1_holder_factor=j1_fac, j3_holder_factor=j3_fac,
    )


@dataclass
class ContradictionCheck:
    lhs: float
    rhs: float
    ratio: float
    exponent: float


def check_contradiction_bound(report: FunctionalReport, params: ModelParams) -> ContradictionCheck:
    """Compare the (positive) data term against R^(-2 sigma p' + n + alpha).

    Inside the blow-up range the exponent is negative, so the bound
    shrinks while the data term stabilizes: the growing ratio is the
    numerical shadow of the contradiction.
    """
    if report.data_term <= 0.0:
        raise HypothesisError(
            f"data term {report.data_term:.3e} is not positive; "
            "the sign assumption on u1 fails"
        )
    expo = contradiction_exponent(params)
    rhs = report.R**expo
    return ContradictionCheck(
        lhs=report.data_term, rhs=rhs, ratio=report.data_term / rhs, exponent=expo
    )


@dataclass
class LadderResult:
    R_values: list
    lhs: list
    rhs: list
    ratios: list
    exponent: float
    slope: float


def contradiction_ladder(reports, params: ModelParams) -> LadderResult:
    """Run the bound check over an R ladder and fit the log-log rhs slope."""
    checks = [check_contradiction_bound(rep, params) for rep in reports]
    Rs = [rep.R for rep in reports]
    slope = math.nan
    if len(Rs) >= 2:
        slope = float(np.polyfit(np.log(Rs), np.log([c.rhs for c in checks]), 1)[0])
    return LadderResult(
        R_values=Rs,
        lhs=[c.lhs for c in checks],
        rhs=[c.rhs for c in checks],
        ratios=[c.ratio for c in checks],
        exponent=checks[0].exponent if checks else math.nan,
        slope=slope,
    )
