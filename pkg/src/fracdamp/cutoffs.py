"""Test-function building blocks: temporal cutoff and spatial weight choice.

The temporal cutoff eta is 1 up to 1/2, 0 from 1 on, and on the
transition interval uses the smooth-partition profile

    eta(t) = g(2-2t) / (g(2-2t) + g(2t-1)),   g(tau) = exp(-1/tau),

which is C-infinity and keeps eta^(-p'/p)(|eta'|^p' + |eta''|^p')
bounded for every p > 1: near the vanishing end eta' ~ eta / tau^2, so
the negative power of eta is always beaten.  All evaluations go through
log-space so nothing overflows for p close to 1.

The spatial weight is <x>^(-q) with q = n + 2 s*, where the seed s*
follows the fractional-part taxonomy of the two operator orders; both
orders integer falls back to q = n + 2 (fully exact integer pipeline).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .brackets import INTEGER_TOL, RadialWeight

__all__ = [
    "TemporalCutoff",
    "temporal_cutoff_eval",
    "condition_supremum",
    "SpatialWeightChoice",
    "spatial_weight_for",
]

_EDGE = 1e-14  # distance from 1/2 and 1 below which values are exactly 1/0


def _profile_logs(t):
    """log a, log b, log(a+b) for the partition pair on (1/2, 1)."""
    t = np.asarray(t, dtype=float)
    log_a = -1.0 / (2.0 - 2.0 * t)
    log_b = -1.0 / (2.0 * t - 1.0)
    return log_a, log_b, np.logaddexp(log_a, log_b)


def _profile_values(t):
    """(eta, eta', eta'') of the unscaled profile, vectorized, stable."""
    t = np.asarray(t, dtype=float)
    eta = np.zeros_like(t)
    d1 = np.zeros_like(t)
    d2 = np.zeros_like(t)
    eta[t <= 0.5] = 1.0
    mid = (t > 0.5 + _EDGE) & (t < 1.0 - _EDGE)
    if np.any(mid):
        tm = t[mid]
        log_a, log_b, log_ab = _profile_logs(tm)
        eta[mid] = np.exp(log_a - log_ab)
        # eta' = -eta(1-eta) S,  eta'' = eta(1-eta)[(1-2 eta) S^2 - S']
        fac = np.exp(log_a + log_b - 2.0 * log_ab)  # eta (1 - eta)
        u, v = 2.0 - 2.0 * tm, 2.0 * tm - 1.0
        S = 2.0 * (u**-2 + v**-2)
        Sp = 8.0 * (u**-3 - v**-3)
        d1[mid] = -fac * S
        d2[mid] = fac * ((1.0 - 2.0 * eta[mid]) * S**2 - Sp)
    # within _EDGE of the endpoints the true derivatives are below 1e-300
    eta[(t > 0.5) & (t <= 0.5 + _EDGE)] = 1.0
    return eta, d1, d2


@dataclass(frozen=True)
class TemporalCutoff:
    """Scaled cutoff eta_R(t) = eta(t / R^alpha).

    ``R`` is the spatial scale and ``alpha`` the time-scale exponent
    2 sigma - k_minus; derivatives carry the chain-rule powers of
    R^(-alpha).
    """

    R: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("scale R must be positive")

    @property
    def horizon(self) -> float:
        """Support end R^alpha: eta_R vanishes from here on."""
        return self.R**self.alpha

    def __call__(self, t):
        tau = np.asarray(t, dtype=float) / self.horizon
        eta, d1, d2 = _profile_values(tau)
        scale = self.horizon
        return eta, d1 / scale, d2 / scale**2


def temporal_cutoff_eval(cutoff: TemporalCutoff, t: float) -> tuple:
    """(eta_R, eta_R', eta_R'') at time t >= 0; exactly (1,0,0)/(0,0,0) outside."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    eta, d1, d2 = cutoff(t)
    return float(eta), float(d1), float(d2)


def condition_supremum(p: float, num: int = 200_000, t_hi: float = 1.0 - 1e-6) -> float:
    """sup over [1/2, t_hi] of eta^(-p'/p) (|eta'|^p' + |eta''|^p').

    Evaluated on a dense grid in log space, so the negative power of eta
    never overflows even for p close to 1.
    """
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    p_conj = p / (p - 1.0)
    t = np.linspace(0.5 + 1e-12, t_hi, num)
    log_a, log_b, log_ab = _profile_logs(t)
    log_eta = log_a - log_ab
    log_fac = log_a + log_b - 2.0 * log_ab
    u, v = 2.0 - 2.0 * t, 2.0 * t - 1.0
    S = 2.0 * (u**-2 + v**-2)
    Sp = 8.0 * (u**-3 - v**-3)
    eta = np.exp(log_eta)
    with np.errstate(divide="ignore"):
        log_d1 = log_fac + np.log(S)
        log_d2 = log_fac + np.log(np.abs((1.0 - 2.0 * eta) * S**2 - Sp))
    term = np.exp(p_conj * log_d1 - (p_conj / p) * log_eta) + np.exp(
        p_conj * log_d2 - (p_conj / p) * log_eta
    )
    return float(np.max(term))


@dataclass(frozen=True)
class SpatialWeightChoice:
    """Spatial weight exponent q (phi = <x>^(-q)) and the case that chose it."""

    n: int
    q: float
    case: str
    s_star: float

    def weight(self) -> RadialWeight:
        return RadialWeight(self.n, self.q)


def _fractional_part(x: float):
    """(is_integer, fractional part) with the decimal-literal tolerance."""
    if abs(x - round(x)) < INTEGER_TOL:
        return True, 0.0
    return False, x - math.floor(x)


def spatial_weight_for(sigma: float, delta: float, n: int) -> SpatialWeightChoice:
    """Select the spatial weight exponent for given operator orders.

    The seed s* is the relevant fractional part (or their minimum); both
    orders integer uses s* = 1 so the whole pipeline stays exact.  The
    returned q always lies in (n, n + 2].
    """
    if sigma < 1.0 or not 0.0 <= delta < sigma:
        raise ValueError("need sigma >= 1 and delta in [0, sigma)")
    sigma_int, s_sigma = _fractional_part(sigma)
    delta_int, s_delta = _fractional_part(delta)
    if sigma_int and delta_int:
        case, s_star = "both-integer", 1.0
    elif sigma_int:
        if delta < 1.0:
            case, s_star = "sigma-integer-delta-low", delta
        else:
            case, s_star = "sigma-integer-delta-high", s_delta
    elif delta_int:
        case, s_star = "sigma-fractional-delta-integer", s_sigma
    elif delta < 1.0:
        case, s_star = "both-fractional-delta-low", min(s_sigma, delta)
    else:
        case, s_star = "both-fractional-delta-high", min(s_sigma, s_delta)
    return SpatialWeightChoice(n=n, q=n + 2.0 * s_star, case=case, s_star=s_star)
