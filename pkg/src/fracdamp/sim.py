"""Pseudo-spectral simulator for the damped sigma-evolution equation.

    u_tt + (-Delta)^sigma u + (-Delta)^delta u_t = |u|^p

on a periodic torus.  Per Fourier mode the linear part is the scalar ODE
v'' + b v' + c v = 0 with b = |xi|^(2 delta), c = |xi|^(2 sigma), which
is solved exactly over each step; the nonlinearity enters through Strang
splitting (half kick, exact linear flow, half kick), second order in dt.

delta = 0 makes the damping multiplier |xi|^0 identically 1 - classical
friction acting on every mode including the mean.  For delta > 0 the
mean mode is undamped and obeys m'' = mean(|u|^p) exactly.

Blow-up is watched through the sup norm: a doubling within one step
halves dt (and rejects the step); crossing the configured threshold, or
dt collapsing below dt_min, ends the run with a detection time obtained
by geometric extrapolation of the doubling cascade, which makes the
estimate robust against the choice of threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from functools import lru_cache

from .gridfield import torus_axes, torus_xi_squared
from .params import ModelParams
from .tables import canonical_hash

__all__ = [
    "SimConfig",
    "RunRecord",
    "linear_propagator_coefficients",
    "SpectralStepper",
    "simulate",
    "gaussian_bump",
    "LinearDecayFit",
    "measure_linear_decay",
    "SweepResult",
    "lifespan_sweep",
    "energy_ledger",
]


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    L: float = 32.0
    N: int = 512
    dt: float = 0.1
    dt_min: float = 1e-6
    blowup_threshold: float = 1e4   # sup-norm units
    T: float = 100.0
    nonlinear: bool = True
    record_every: int = 8
    max_steps: int = 20_000_000

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two")
        if not 0.0 < self.dt_min < self.dt:
            raise ValueError("need 0 < dt_min < dt")
        if self.blowup_threshold <= 0 or self.T <= 0:
            raise ValueError("threshold and horizon must be positive")

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    def summary(self) -> dict:
        p = self.params
        return {
            "sigma": p.sigma, "delta": p.delta, "n": p.n, "p": p.p,
            "L": self.L, "N": self.N, "dt": self.dt, "dt_min": self.dt_min,
            "M": self.blowup_threshold, "T": self.T, "nonlinear": self.nonlinear,
        }


@lru_cache(maxsize=16)
def _xi2_full(n: int, L: float, N: int):
    h = 2.0 * L / N
    k2 = (2.0 * np.pi * np.fft.fftfreq(N, d=h)) ** 2
    grids = np.meshgrid(*([k2] * n), indexing="ij")
    out = sum(grids)
    out.setflags(write=False)
    return out


def spectral_tail_fraction(u, L: float) -> float:
    """Energy fraction in the top frequency octave (resolution gauge).

    Runs feeding acceptance fits should keep this below 1e-6; larger
    values flag the state as under-resolved.
    """
    u = np.asarray(u, dtype=float)
    n, N = u.ndim, u.shape[0]
    spec2 = np.abs(np.fft.fftn(u)) ** 2
    xi2 = _xi2_full(n, float(L), N)
    cut = 0.25 * float(np.max(xi2))  # (xi_max / 2)^2
    total = float(np.sum(spec2))
    if total == 0.0:
        return 0.0
    return float(np.sum(spec2[xi2 > cut])) / total


def _phi1(z):
    """(exp(z) - 1)/z, series near 0 so confluent roots stay smooth."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-2
    zs = np.where(small, z, 0.0)
    series = 1.0 + zs / 2.0 + zs**2 / 6.0 + zs**3 / 24.0 + zs**4 / 120.0 + zs**5 / 720.0
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.expm1(z.real) / np.where(small, 1.0, z) if np.isrealobj(z) else None
    zsafe = np.where(small, 1.0, z)
    direct = (np.exp(zsafe) - 1.0) / zsafe
    return np.where(small, series, direct)


def linear_propagator_coefficients(xi_sq_sigma, xi_sq_delta, dt):
    """Exact flow matrix of v'' + b v' + c v = 0 over dt, elementwise.

    Returns (A, B, C, D) with (v, v') -> (A v + B v', C v + D v').  The
    characteristic roots (-b +- sqrt(b^2 - 4 c))/2 may be real, complex,
    or confluent; the phi1 form is uniformly valid, including the free
    drift at xi = 0.
    """
    c = np.asarray(xi_sq_sigma, dtype=float)
    b = np.asarray(xi_sq_delta, dtype=float)
    disc = np.asarray(b * b - 4.0 * c, dtype=complex)
    root = np.sqrt(disc)
    lam_minus = (-b - root) / 2.0
    E = np.exp(lam_minus * dt)
    G = dt * _phi1(root * dt)
    A = E * (1.0 - lam_minus * G)
    B = E * G
    D = E * (1.0 + (lam_minus + root) * G)
    C = -c * B
    return A.real, B.real, C.real, D.real


class SpectralStepper:
    """Strang-split stepper; propagator coefficients cached per dt."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        xi2 = torus_xi_squared(cfg.n, cfg.L, cfg.N)
        self.sym_sigma = xi2 ** cfg.params.sigma
        self.sym_delta = xi2 ** cfg.params.delta  # 0**0 = 1: friction at delta=0
        self.sym_kplus = xi2 ** (cfg.params.k_plus / 2.0)
        self._coeffs: dict = {}

    def _propagator(self, dt):
        key = round(dt, 15)
        if key not in self._coeffs:
            self._coeffs[key] = linear_propagator_coefficients(
                self.sym_sigma, self.sym_delta, dt
            )
        return self._coeffs[key]

    def _kick(self, u, ut, half_dt):
        if not self.cfg.nonlinear:
            return ut
        return ut + half_dt * np.abs(u) ** self.cfg.params.p

    def step(self, u, ut, dt):
        """One Strang step of size dt; realness is preserved throughout."""
        ut = self._kick(u, ut, 0.5 * dt)
        A, B, C, D = self._propagator(dt)
        shape = u.shape
        U = np.fft.rfftn(u)
        V = np.fft.rfftn(ut)
        u = np.fft.irfftn(A * U + B * V, s=shape)
        ut = np.fft.irfftn(C * U + D * V, s=shape)
        ut = self._kick(u, ut, 0.5 * dt)
        return u, ut

    def l2(self, arr) -> float:
        return float(np.sqrt(np.sum(arr * arr) * self.cfg.h ** self.cfg.n))

    def dk_l2(self, u) -> float:
        """|||D|^(k_plus) u||_L2 through the spectral multiplier."""
        spec = np.fft.rfftn(u) * self.sym_kplus
        return self.l2(np.fft.irfftn(spec, s=u.shape))


@dataclass
class RunRecord:
    """Norm time series and verdict of one simulation."""

    times: list
    l2: list
    sup: list
    ut_l2: list
    dk_l2: list
    verdict: str               # completed | blew-up | step-collapse
    t_detect: Optional[float]
    config: dict
    config_hash: str
    doubling_times: list = field(default_factory=list)
    final_dt: float = math.nan
    tail_fraction: float = 0.0  # top-octave energy share, pre-cascade

    @property
    def under_resolved(self) -> bool:
        return self.tail_fraction > 1e-6

    def to_dict(self) -> dict:
        return {
            "times": list(self.times), "l2": list(self.l2),
            "sup": list(self.sup), "ut_l2": list(self.ut_l2),
            "dk_l2": list(self.dk_l2), "verdict": self.verdict,
            "t_detect": self.t_detect, "config": self.config,
            "config_hash": self.config_hash,
            "doubling_times": list(self.doubling_times),
            "final_dt": self.final_dt,
            "tail_fraction": self.tail_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)


def gaussian_bump(amplitude: float = 1.0, width: float = 1.0):
    """amplitude * exp(-|x|^2 / width^2) as a grid-sampling callable."""

    def fn(pts):
        pts = np.asarray(pts, dtype=float)
        r2 = np.sum(pts * pts, axis=-1)
        return amplitude * np.exp(-r2 / width**2)

    return fn


def _sample(data, cfg: SimConfig):
    if data is None:
        return np.zeros((cfg.N,) * cfg.n)
    if callable(data):
        mesh = np.meshgrid(*torus_axes(cfg.n, cfg.L, cfg.N), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return np.asarray(data(pts), dtype=float).reshape((cfg.N,) * cfg.n)
    arr = np.asarray(data, dtype=float)
    if arr.shape != (cfg.N,) * cfg.n:
        raise ValueError(f"initial data must have shape {(cfg.N,) * cfg.n}")
    return arr.copy()


def _extrapolate_detection(t_last, doubling_times, dt_last):
    """Blow-up time from the doubling cascade; threshold-robust."""
    if len(doubling_times) >= 3:
        g1 = doubling_times[-2] - doubling_times[-3]
        g2 = doubling_times[-1] - doubling_times[-2]
        if g1 > 0 and 0 < g2 < 0.95 * g1:
            r = g2 / g1
            return t_last + min(g2 * r / (1.0 - r), 10.0 * g2)
    return t_last + dt_last


def simulate(u0, u1, cfg: SimConfig) -> RunRecord:
    """Drive the stepper to T, watching for blow-up.

    Deterministic given the configuration.  A sup-norm doubling within a
    single step rejects the step and halves dt; exceeding the threshold
    (or any non-finite value) declares blow-up, dt < dt_min declares
    step-collapse.
    """
    stepper = SpectralStepper(cfg)
    u = _sample(u0, cfg)
    ut = _sample(u1, cfg)
    cfg_hash = canonical_hash(cfg.summary())

    times, l2s, sups, utl2s, dkl2s = [], [], [], [], []
    tail_pre_cascade = 0.0

    def record(t):
        nonlocal tail_pre_cascade
        times.append(t)
        l2s.append(stepper.l2(u))
        sups.append(float(np.max(np.abs(u))))
        utl2s.append(stepper.l2(ut))
        dkl2s.append(stepper.dk_l2(u))
        if sups[-1] < 0.1 * cfg.blowup_threshold:
            tail_pre_cascade = spectral_tail_fraction(u, cfg.L)

    record(0.0)
    t, dt = 0.0, cfg.dt
    sup_scale = max(sups[0], 1e-12)
    next_doubling = 2.0 * sup_scale
    doubling_times: list = []
    verdict, t_detect = "completed", None
    steps = 0

    while t < cfg.T - 1e-12 and steps < cfg.max_steps:
        step_dt = min(dt, cfg.T - t)
        u_new, ut_new = stepper.step(u, ut, step_dt)
        steps += 1
        sup_new = float(np.max(np.abs(u_new))) if np.all(np.isfinite(u_new)) else math.inf
        if not math.isfinite(sup_new) or not np.all(np.isfinite(ut_new)):
            verdict = "blew-up"
            t_detect = _extrapolate_detection(t, doubling_times, step_dt)
            break
        sup_old = float(np.max(np.abs(u)))
        if sup_old > 0.0 and sup_new > 2.0 * sup_old:
            dt *= 0.5
            if dt < cfg.dt_min:
                verdict = "step-collapse"
                t_detect = _extrapolate_detection(t, doubling_times, step_dt)
                break
            continue  # reject the step
        t += step_dt
        u, ut = u_new, ut_new
        while sup_new >= next_doubling:
            doubling_times.append(t)
            next_doubling *= 2.0
        if steps % cfg.record_every == 0:
            record(t)
        if sup_new > cfg.blowup_threshold:
            verdict = "blew-up"
            t_detect = _extrapolate_detection(t, doubling_times, step_dt)
            break

    if not times or times[-1] != t:
        record(t)
    return RunRecord(
        times=times, l2=l2s, sup=sups, ut_l2=utl2s, dk_l2=dkl2s,
        verdict=verdict, t_detect=t_detect,
        config=cfg.summary(), config_hash=cfg_hash,
        doubling_times=doubling_times, final_dt=dt,
        tail_fraction=tail_pre_cascade,
    )


# --- linear decay fits -------------------------------------------------------


@dataclass
class LinearDecayFit:
    exponent: float
    window: tuple
    times: list
    norms: list
    mean_floor_fraction: float
    norm_kind: str
    tail_fraction: float = 0.0


def measure_linear_decay(
    cfg: SimConfig, u0, u1, window, n_samples: int = 48, norm_kind: str = "u"
) -> LinearDecayFit:
    """Fit the L2 decay exponent of the linear flow on a time window.

    The linear propagator is exact for any dt, so each sample is one
    step.  The torus zero mode is a point mass absent from the continuum
    problem; it is removed from the fitted norm and its share of the
    final norm is reported as ``mean_floor_fraction`` (window-selection
    bias is reported, not hidden).
    """
    if cfg.nonlinear:
        cfg = replace(cfg, nonlinear=False)
    stepper = SpectralStepper(cfg)
    u = _sample(u0, cfg)
    ut = _sample(u1, cfg)
    t_lo, t_hi = window
    if not 0 <= t_lo < t_hi:
        raise ValueError("window must satisfy 0 <= t_lo < t_hi")
    samples = np.geomspace(max(t_lo, 1e-3), t_hi, n_samples)
    vol = (2.0 * cfg.L) ** cfg.n

    times, norms = [], []
    floor_frac = 0.0
    t = 0.0
    for target in samples:
        u, ut = stepper.step(u, ut, target - t)
        t = target
        if norm_kind == "u":
            arr = u
        elif norm_kind == "ut":
            arr = ut
        else:
            raise ValueError("norm_kind must be 'u' or 'ut'")
        mean = float(np.mean(arr))
        full_sq = float(np.sum(arr * arr)) * cfg.h**cfg.n
        fluct_sq = max(full_sq - vol * mean * mean, 0.0)
        times.append(t)
        norms.append(math.sqrt(fluct_sq))
        floor_frac = vol * mean * mean / full_sq if full_sq > 0 else 0.0

    good = [i for i, nrm in enumerate(norms) if nrm > 0]
    logt = np.log1p(np.asarray(times)[good])
    logn = np.log(np.asarray(norms)[good])
    exponent = float(np.polyfit(logt, logn, 1)[0])
    return LinearDecayFit(
        exponent=exponent, window=(t_lo, t_hi),
        times=times, norms=norms,
        mean_floor_fraction=floor_frac, norm_kind=norm_kind,
        tail_fraction=spectral_tail_fraction(u, cfg.L),
    )


# --- lifespan sweeps ---------------------------------------------------------


@dataclass
class SweepResult:
    epsilons: list
    lifespans: list
    verdicts: list
    slope: float
    monotone: bool
    records: list = field(default_factory=list)


def lifespan_sweep(cfg: SimConfig, epsilons, bump_amplitude=1.0, bump_width=1.0,
                   t_cap=None, keep_records=False) -> SweepResult:
    """Measure T_eps for data (0, eps * bump) over an epsilon ladder.

    Fits the slope of log T_eps against log eps on the runs that blew
    up.  ``t_cap`` maps eps to a per-run horizon (defaults to the
    configured T).  The T_eps sequence should be nonincreasing in eps;
    violations set ``monotone`` to False.
    """
    eps_sorted = sorted(float(e) for e in epsilons)
    lifespans, verdicts, records = [], [], []
    for eps in eps_sorted:
        run_cfg = cfg if t_cap is None else replace(cfg, T=float(t_cap(eps)))
        rec = simulate(
            None, gaussian_bump(eps * bump_amplitude, bump_width), run_cfg
        )
        verdicts.append(rec.verdict)
        lifespans.append(rec.t_detect if rec.verdict != "completed" else math.nan)
        if keep_records:
            records.append(rec)
    blew = [i for i, v in enumerate(verdicts) if v != "completed"]
    slope = math.nan
    if len(blew) >= 2:
        slope = float(np.polyfit(
            np.log([eps_sorted[i] for i in blew]),
            np.log([lifespans[i] for i in blew]), 1,
        )[0])
    ls = [lifespans[i] for i in blew]
    monotone = all(ls[i] >= ls[i + 1] * (1.0 - 1e-9) for i in range(len(ls) - 1))
    return SweepResult(
        epsilons=eps_sorted, lifespans=lifespans, verdicts=verdicts,
        slope=slope, monotone=monotone, records=records,
    )


def energy_ledger(u, ut, cfg: SimConfig) -> tuple:
    """(E, dissipation, work): energy, damping drain, nonlinear input.

    E = 1/2 ||u_t||^2 + 1/2 |||D|^sigma u||^2 and the balance reads
    dE/dt = -dissipation + work with dissipation = |||D|^delta u_t||^2
    and work = int |u|^p u_t dx.
    """
    stepper = SpectralStepper(cfg)
    shape = u.shape
    du = np.fft.irfftn(np.fft.rfftn(u) * stepper.sym_sigma**0.5, s=shape)
    ddut = np.fft.irfftn(np.fft.rfftn(ut) * stepper.sym_delta**0.5, s=shape)
    hn = cfg.h**cfg.n
    energy = 0.5 * float(np.sum(ut * ut) * hn) + 0.5 * float(np.sum(du * du) * hn)
    dissipation = float(np.sum(ddut * ddut) * hn)
    work = float(np.sum(np.abs(u) ** cfg.params.p * ut) * hn)
    return energy, dissipation, work
