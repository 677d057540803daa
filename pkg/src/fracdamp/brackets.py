"""Japanese-bracket weights and their exact derivative calculus.

The bracket ``<x> = (1 + |x|^2)^(1/2)`` generates the weight family
``<x>^(-q)`` used throughout the package: as spatial test-function
weights, as decay majorants, and as the canonical inputs of the
fractional-Laplacian quadrature.  Everything in this module is exact
(finite term lists), no differentiation or integration error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "bracket",
    "RadialWeight",
    "FractionalOrder",
    "BracketSum",
    "weight_partial_derivative",
    "laplacian_weight_step",
    "iterated_laplacian",
    "iterated_laplacian_terms",
    "closed_form_coefficients",
    "compare_with_closed_form",
]

#: treat a float as an integer when it is this close to one
INTEGER_TOL = 1e-9


def bracket(x):
    """Return <x> = (1 + |x|^2)^(1/2) for a point x in R^n.

    Accepts a scalar (n = 1) or a 1-D coordinate array.  Always >= 1.
    """
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(1.0 + np.sum(x * x)))


def bracket_radial(r):
    """Vectorized bracket as a function of the radius |x|."""
    r = np.asarray(r, dtype=float)
    return np.sqrt(1.0 + r * r)


def as_points(x, n):
    """Coerce ``x`` to an (m, n) array of points.

    A scalar or 1-D array is one point (for n > 1) or a batch of points
    on the line (for n == 1).
    """
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None] if n == 1 else pts[None, :]
    if pts.shape[-1] != n:
        raise ValueError(f"points have dimension {pts.shape[-1]}, expected {n}")
    return pts


@dataclass(frozen=True)
class RadialWeight:
    """The weight <x>^(-q) on R^n.

    Radially symmetric, strictly decreasing in |x|, equal to 1 at the
    origin.
    """

    n: int
    q: float

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("dimension n must be a positive integer")
        if self.q <= 0:
            raise ValueError("decay exponent q must be positive")

    def __call__(self, pts):
        pts = as_points(pts, self.n)
        r2 = np.sum(pts * pts, axis=-1)
        return (1.0 + r2) ** (-self.q / 2.0)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r * r) ** (-self.q / 2.0)

    def second_difference(self, x, offsets):
        return BracketSum(self.n, self.q, ((0, 1.0),)).second_difference(x, offsets)


@dataclass(frozen=True)
class FractionalOrder:
    """An order gamma > 0 split as gamma = m + s, integer m, s in [0, 1).

    Floats within INTEGER_TOL of an integer are snapped so that decimal
    inputs such as 1.5 or 3.0 decompose exactly.
    """

    gamma: float
    m: int = field(init=False)
    s: float = field(init=False)

    def __post_init__(self):
        g = float(self.gamma)
        if g < 0:
            raise ValueError("order gamma must be nonnegative")
        if abs(g - round(g)) < INTEGER_TOL:
            m, s = int(round(g)), 0.0
        else:
            m, s = int(math.floor(g)), g - math.floor(g)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "s", s)

    @classmethod
    def from_parts(cls, m: int, s: float) -> "FractionalOrder":
        if not 0.0 <= s < 1.0:
            raise ValueError("fractional part s must lie in [0, 1)")
        return cls(gamma=m + s)

    @property
    def is_integer(self) -> bool:
        return self.s == 0.0


# --- exact partial derivatives --------------------------------------------
#
# Every partial derivative of <x>^(-q) is a finite sum of terms
#     c * x^beta * (1 + |x|^2)^(-q/2 - k)
# and differentiating one such term yields two more of the same shape.
# The recursion keeps exact rational structure in (beta, k) and a float
# coefficient, so there is no differentiation error to speak of.


@lru_cache(maxsize=None)
def _derivative_terms(q: float, alpha: tuple) -> tuple:
    """Term list ((beta, k, coeff), ...) for d^alpha <x>^(-q)."""
    n = len(alpha)
    if all(a == 0 for a in alpha):
        return (((0,) * n, 0, 1.0),)
    # peel one derivative off the first nonzero axis
    axis = next(i for i, a in enumerate(alpha) if a > 0)
    lower = list(alpha)
    lower[axis] -= 1
    terms: dict[tuple, float] = {}
    for beta, k, c in _derivative_terms(q, tuple(lower)):
        # d/dx_i [x^beta * (1+|x|^2)^(-q/2-k)]
        if beta[axis] > 0:
            nb = list(beta)
            nb[axis] -= 1
            key = (tuple(nb), k)
            terms[key] = terms.get(key, 0.0) + c * beta[axis]
        nb = list(beta)
        nb[axis] += 1
        key = (tuple(nb), k + 1)
        terms[key] = terms.get(key, 0.0) + c * (-q - 2.0 * k)
    return tuple((b, k, c) for (b, k), c in terms.items() if c != 0.0)


def weight_partial_derivative(w: RadialWeight, alpha, x):
    """Exact value of d^alpha <x>^(-q) at the point(s) ``x``.

    ``alpha`` is a multi-index (len n).  Satisfies
    |result| <= C(q, alpha) * <x>^(-q - |alpha|).
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != w.n:
        raise ValueError("multi-index length must equal the dimension")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be nonnegative")
    pts = as_points(x, w.n)
    r2 = np.sum(pts * pts, axis=-1)
    base = 1.0 + r2
    out = np.zeros(pts.shape[0])
    for beta, k, c in _derivative_terms(float(w.q), alpha):
        mono = np.ones(pts.shape[0])
        for i, b in enumerate(beta):
            if b:
                mono = mono * pts[:, i] ** b
        out += c * mono * base ** (-w.q / 2.0 - k)
    return out if out.size > 1 else float(out[0])


# --- iterated Laplacians ---------------------------------------------------


@dataclass(frozen=True)
class BracketSum:
    """Finite linear combination  sum_j c_j * <x>^(-(base_q + 2 j)).

    Exponent keys are integer offsets from ``base_q`` so repeated
    Laplacian passes accumulate coefficients without float-key drift.
    """

    n: int
    base_q: float
    coeffs: tuple  # tuple of (offset j, coefficient)

    def exponents(self):
        return {j: self.base_q + 2.0 * j for j, _ in self.coeffs}

    def as_dict(self):
        return dict(self.coeffs)

    def __call__(self, pts):
        pts = as_points(pts, self.n)
        r2 = np.sum(pts * pts, axis=-1)
        return self.radial_from_sq(r2)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.radial_from_sq(r * r)

    def radial_from_sq(self, r2):
        base = 1.0 + np.asarray(r2, dtype=float)
        out = np.zeros_like(base)
        for j, c in self.coeffs:
            out += c * base ** (-(self.base_q + 2.0 * j) / 2.0)
        return out

    def minus_laplacian(self) -> "BracketSum":
        """Apply -Delta once, termwise, staying inside the family."""
        acc: dict[int, float] = {}
        for j, c in self.coeffs:
            r = self.base_q + 2.0 * j
            # -Delta <x>^(-r) = r[(n-r-2)<x>^(-r-2) + (r+2)<x>^(-r-4)]
            acc[j + 1] = acc.get(j + 1, 0.0) + c * r * (self.n - r - 2.0)
            acc[j + 2] = acc.get(j + 2, 0.0) + c * r * (r + 2.0)
        return BracketSum(self.n, self.base_q, tuple(sorted(acc.items())))

    def second_difference(self, x, offsets):
        """f(x+y) + f(x-y) - 2 f(x) without cancellation, y in ``offsets``.

        With A = 1 + |x|^2 and delta_pm = (|y|^2 +- 2 x.y)/A each term is
        A^(-p) [(1+delta_+)^(-p) + (1+delta_-)^(-p) - 2], p = exponent/2.
        Small deltas go through an even power-sum series in
        (u, v) = ((d_+ + d_-)/2, (d_+ - d_-)/2) whose terms are all
        nonnegative, so the value is accurate down to |y| ~ 1e-150 where
        a naive difference is pure roundoff.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        offs = np.asarray(offsets, dtype=float)
        A0 = 1.0 + float(np.sum(x * x))
        u = np.sum(offs * offs, axis=-1) / A0
        v = 2.0 * (offs @ x) / A0
        d_plus, d_minus = u + v, u - v
        dmax = np.abs(d_plus) + 0.0
        np.maximum(dmax, np.abs(d_minus), out=dmax)
        small = dmax < 1e-4
        out = np.zeros(offs.shape[0])
        for j, c in self.coeffs:
            p = (self.base_q + 2.0 * j) / 2.0
            vals = np.empty_like(out)
            if np.any(~small):
                dp, dm = d_plus[~small], d_minus[~small]
                vals[~small] = np.expm1(-p * np.log1p(dp)) + np.expm1(
                    -p * np.log1p(dm)
                )
            if np.any(small):
                us, vs2 = u[small], v[small] ** 2
                # power sums S_j = (u+v)^j + (u-v)^j, even in v
                S1 = 2.0 * us
                S2 = 2.0 * (us**2 + vs2)
                S3 = 2.0 * (us**3 + 3.0 * us * vs2)
                S4 = 2.0 * (us**4 + 6.0 * us**2 * vs2 + vs2**2)
                S5 = 2.0 * (us**5 + 10.0 * us**3 * vs2 + 5.0 * us * vs2**2)
                S6 = 2.0 * (us**6 + 15.0 * us**4 * vs2 + 15.0 * us**2 * vs2**2 + vs2**3)
                a = -p
                acc = a * S1
                a *= -(p + 1.0) / 2.0
                acc += a * S2
                a *= -(p + 2.0) / 3.0
                acc += a * S3
                a *= -(p + 3.0) / 4.0
                acc += a * S4
                a *= -(p + 4.0) / 5.0
                acc += a * S5
                a *= -(p + 5.0) / 6.0
                acc += a * S6
                vals[small] = acc
            out += c * A0 ** (-p) * vals
        return out

    def scaled(self, factor: float) -> "BracketSum":
        return BracketSum(
            self.n, self.base_q, tuple((j, factor * c) for j, c in self.coeffs)
        )


def laplacian_weight_step(r: float, n: int, x) -> float:
    """One-step value -Delta <x>^(-r) = r[(n-r-2)<x>^(-r-2) + (r+2)<x>^(-r-4)]."""
    if r <= 0:
        raise ValueError("exponent r must be positive")
    b = bracket_radial(np.sqrt(np.sum(np.atleast_1d(np.asarray(x, float)) ** 2)))
    return float(r * ((n - r - 2.0) * b ** (-r - 2.0) + (r + 2.0) * b ** (-r - 4.0)))


def iterated_laplacian_terms(w: RadialWeight, m: int) -> BracketSum:
    """Exact term list of (-Delta)^m <x>^(-q), offsets j = m..2m.

    ``m = 0`` returns the weight itself.
    """
    if m < 0 or int(m) != m:
        raise ValueError("m must be a nonnegative integer")
    terms = BracketSum(w.n, float(w.q), ((0, 1.0),))
    for _ in range(int(m)):
        terms = terms.minus_laplacian()
    return terms

def iterated_laplacian(w: RadialWeight, m: int, x) -> float:
    """Value of (-Delta)^m <x>^(-q) at ``x`` via the exact recursion."""
    if m < 1:
        raise ValueError("m must be >= 1; use the weight itself for m = 0")
    terms = iterated_laplacian_terms(w, m)
    pts = as_points(x, w.n)
    vals = terms(pts)
    return float(vals[0]) if np.size(vals) == 1 else vals


def closed_form_coefficients(q: float, n: int, m: int) -> dict:
    """Printed m-step coefficients, offset j = m + k -> coefficient.

    The k-th entry (k = 0..m) multiplies <x>^(-q - 2m - 2k):

        (-1)^m prod_{i<m}(q+2i) * (-1)^k C(m,k)
            * prod_{i=k+1..m}(q+2i-n) * prod_{i<k}(q+2m+2i)
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    pref = (-1.0) ** m * math.prod(q + 2.0 * i for i in range(m))
    out = {}
    for k in range(m + 1):
        c = (-1.0) ** k * math.comb(m, k)
        c *= math.prod(q + 2.0 * i - n for i in range(k + 1, m + 1))
        c *= math.prod(q + 2.0 * m + 2.0 * i for i in range(k))
        out[m + k] = pref * c
    return out


def compare_with_closed_form(q: float, n: int, m: int) -> dict:
    """Check the one-step recursion against the printed m-step formula.

    The recursion is ground truth; any mismatch is reported, not
    corrected.  Returns per-offset pairs and the max relative gap.
    """
    rec = iterated_laplacian_terms(RadialWeight(n, q), m).as_dict()
    printed = closed_form_coefficients(q, n, m)
    offsets = sorted(set(rec) | set(printed))
    rows = []
    worst = 0.0
    for j in offsets:
        a = rec.get(j, 0.0)
        b = printed.get(j, 0.0)
        scale = max(abs(a), abs(b), 1e-30)
        gap = abs(a - b) / scale
        worst = max(worst, gap)
        rows.append({"offset": j, "recursion": a, "printed": b, "rel_gap": gap})
    return {"max_rel_gap": worst, "rows": rows, "agree": worst < 1e-12}
