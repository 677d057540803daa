"""Parameter algebra for the damped sigma-evolution model.

The model  u_tt + (-Delta)^sigma u + (-Delta)^delta u_t = |u|^p  is
governed by a handful of derived quantities: the pair
k_minus = min(sigma, 2 delta), k_plus = max(sigma, 2 delta), the scale
exponent alpha = 2 sigma - k_minus, the conjugate p' = p/(p-1), and the
exponent thresholds separating guaranteed blow-up from small-data global
existence.  Everything here is exact arithmetic on those definitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

__all__ = [
    "ModelParams",
    "HypothesisError",
    "derived_params",
    "blow_up_range",
    "ExistenceBound",
    "existence_exponent_bound",
    "DecayExponents",
    "linear_decay_exponents",
    "young_upper",
    "lifespan_bound",
    "lifespan_exponent",
    "contradiction_exponent",
]


class HypothesisError(ValueError):
    """A stated hypothesis on (sigma, delta, n, p, m) fails."""


def _check_orders(sigma: float, delta: float):
    if sigma < 1.0:
        raise HypothesisError(f"sigma={sigma} must be >= 1")
    if not 0.0 <= delta < sigma:
        raise HypothesisError(f"delta={delta} must lie in [0, sigma)")


def derived_params(sigma: float, delta: float) -> tuple:
    """(k_minus, k_plus, alpha) = (min(sigma,2delta), max(sigma,2delta), 2sigma-k_minus)."""
    _check_orders(sigma, delta)
    k_minus = min(sigma, 2.0 * delta)
    k_plus = max(sigma, 2.0 * delta)
    return k_minus, k_plus, 2.0 * sigma - k_minus


@dataclass(frozen=True)
class ModelParams:
    """Model parameters; derived quantities are recomputed, never stored."""

    sigma: float
    delta: float
    n: int
    p: float
    m_data: float = 1.0  # data-space exponent m in [1, 2)

    def __post_init__(self):
        _check_orders(self.sigma, self.delta)
        if self.n < 1 or int(self.n) != self.n:
            raise HypothesisError(f"dimension n={self.n} must be a positive integer")
        if self.p <= 1.0:
            raise HypothesisError(f"p={self.p} must exceed 1")
        if not 1.0 <= self.m_data < 2.0:
            raise HypothesisError(f"m_data={self.m_data} must lie in [1, 2)")

    @property
    def k_minus(self) -> float:
        return min(self.sigma, 2.0 * self.delta)

    @property
    def k_plus(self) -> float:
        return max(self.sigma, 2.0 * self.delta)

    @property
    def alpha(self) -> float:
        """Time-scale exponent of the test-function pipeline, 2 sigma - k_minus."""
        return 2.0 * self.sigma - self.k_minus

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)


def blow_up_range(params: ModelParams) -> tuple:
    """Open exponent interval (1, 1 + 2 sigma / (n - k_minus)) of forced blow-up.

    Requires n > 2 k_minus.
    """
    if params.n <= 2.0 * params.k_minus:
        raise HypothesisError(
            f"n={params.n} must exceed 2*k_minus={2.0 * params.k_minus}"
        )
    return 1.0, 1.0 + 2.0 * params.sigma / (params.n - params.k_minus)


def contradiction_exponent(params: ModelParams) -> float:
    """Exponent -2 sigma p' + n + alpha of the shrinking upper bound.

    Negative exactly when p lies inside :func:`blow_up_range`; zero at
    the right endpoint.
    """
    return -2.0 * params.sigma * params.p_conj + params.n + params.alpha


@dataclass(frozen=True)
class ExistenceBound:
    """Small-data existence threshold and the admissible p-window."""

    bound: float                      # global existence needs p > bound
    window: Optional[tuple]           # (p_lo, p_hi) admissible range; hi may be inf
    note: str = ""


def existence_exponent_bound(params: ModelParams) -> ExistenceBound:
    """Threshold 1 + m (k_plus + sigma) / (n - m k_minus) and p-window.

    The window comes from the dimension cases of the global-existence
    result: p in [2/m, inf) when n <= 2 k_plus, and
    p in [2/m, n/(n - 2 k_plus)] when 2 k_plus < n <= 4 k_plus/(2-m).
    Larger n falls outside the stated cases.
    """
    m = params.m_data
    k_minus, k_plus = params.k_minus, params.k_plus
    denom = params.n - m * k_minus
    if denom <= 0:
        raise HypothesisError(f"n={params.n} must exceed m*k_minus={m * k_minus}")
    bound = 1.0 + m * (k_plus + params.sigma) / denom
    if params.n <= 2.0 * k_plus:
        window = (2.0 / m, math.inf)
        note = "low-dimension case"
    elif params.n <= 4.0 * k_plus / (2.0 - m):
        window = (2.0 / m, params.n / (params.n - 2.0 * k_plus))
        note = "intermediate-dimension case"
    else:
        window = None
        note = "n outside the stated dimension cases"
    return ExistenceBound(bound=bound, window=window, note=note)


@dataclass(frozen=True)
class DecayExponents:
    """Time-decay exponents of the three linear-estimate norms."""

    u_l2: float
    d_kplus_u_l2: float
    ut_l2: float


def linear_decay_exponents(params: ModelParams, check_p: bool = True) -> DecayExponents:
    """Decay exponents of (1+t)^e for ||u||, |||D|^(k+) u||, ||u_t|| in L^2.

    With d = k_plus - delta and the data exponent m:

        e_u   = -n/(2d) (1/m - 1/2) + k_minus/(2d)
        e_Dk  = -n/(2d) (1/m - 1/2) - (k_plus - k_minus)/(2d)
        e_ut  = -n/(2d) (1/m - 1/2) - (sigma - k_minus)/d

    Raises :class:`HypothesisError` naming the violated condition.
    """
    m = params.m_data
    k_minus, k_plus = params.k_minus, params.k_plus
    m0 = math.inf if m == 2.0 else 1.0 / (1.0 / m - 0.5)
    if k_minus > 0 and params.n <= m0 * k_minus:
        raise HypothesisError(
            f"dimension condition n > m0*k_minus fails: n={params.n}, "
            f"m0*k_minus={m0 * k_minus}"
        )
    if check_p:
        existence = existence_exponent_bound(params)
        if existence.window is None:
            raise HypothesisError(existence.note)
        lo, hi = existence.window
        if not lo <= params.p <= hi:
            raise HypothesisError(
                f"p={params.p} outside the admissible window [{lo}, {hi}]"
            )
        if params.p <= existence.bound:
            raise HypothesisError(
                f"p={params.p} must exceed the existence threshold {existence.bound}"
            )
    d = k_plus - params.delta
    lead = -params.n / (2.0 * d) * (1.0 / m - 0.5)
    return DecayExponents(
        u_l2=lead + k_minus / (2.0 * d),
        d_kplus_u_l2=lead - (k_plus - k_minus) / (2.0 * d),
        ut_l2=lead - (params.sigma - k_minus) / d,
    )


def young_upper(A: float, gamma: float) -> float:
    """Upper bound A^(1/(1-gamma)) for sup_{y >= 0} (A y^gamma - y)."""
    if A <= 0:
        raise ValueError("A must be positive")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma={gamma} outside (0, 1)")
    return A ** (1.0 / (1.0 - gamma))


def lifespan_exponent(params: ModelParams) -> float:
    """Exponent of the lifespan bound T_eps <= C eps^e for data (0, eps u1).

    e = -(2 sigma - k_minus)(p-1) / (2 sigma - (n - k_minus)(p-1)),
    defined while p stays inside the blow-up range.
    """
    lo, hi = blow_up_range(params)
    denom = 2.0 * params.sigma - (params.n - params.k_minus) * (params.p - 1.0)
    if denom <= 0:
        raise HypothesisError(
            f"p={params.p} at or beyond the blow-up endpoint {hi}; "
            "the lifespan bound degenerates"
        )
    return -(2.0 * params.sigma - params.k_minus) * (params.p - 1.0) / denom


def lifespan_bound(epsilon: float, params: ModelParams) -> float:
    """eps**lifespan_exponent with the non-constructive prefactor set to 1."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return epsilon ** lifespan_exponent(params)
