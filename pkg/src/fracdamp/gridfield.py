"""Real fields on a periodic torus grid with a cached spectral view.

The torus [-L, L)^n with N points per axis carries discrete frequencies
xi = pi * k / L.  Fractional Laplacians act as the multiplier |xi|^(2 gamma)
on the real-FFT coefficients, which keeps fields exactly real.
"""

from __future__ import annotations

import threading
from functools import lru_cache

import numpy as np

__all__ = ["GridField", "spectral_fractional_laplacian", "torus_axes", "torus_xi_squared"]


@lru_cache(maxsize=32)
def torus_axes(n: int, L: float, N: int) -> tuple:
    """Coordinate arrays of the uniform grid on [-L, L) per axis."""
    h = 2.0 * L / N
    ax = -L + h * np.arange(N)
    ax.setflags(write=False)
    return (ax,) * n


@lru_cache(maxsize=32)
def torus_xi_squared(n: int, L: float, N: int):
    """|xi|^2 on the rfftn layout (full axes first, half axis last)."""
    h = 2.0 * L / N
    full = (2.0 * np.pi * np.fft.fftfreq(N, d=h)) ** 2
    half = (2.0 * np.pi * np.fft.rfftfreq(N, d=h)) ** 2
    grids = np.meshgrid(*([full] * (n - 1) + [half]), indexing="ij")
    out = sum(grids)
    out.setflags(write=False)
    return out


class GridField:
    """Real samples on an n-dimensional torus grid, n in {1, 2, 3}.

    The spectral view (rfftn coefficients) is computed lazily and cached
    behind a lock, so concurrent readers see a consistent cache.
    """

    def __init__(self, n: int, L: float, N: int, values):
        if n not in (1, 2, 3):
            raise ValueError("n must be 1, 2, or 3")
        if N < 2 or N & (N - 1):
            raise ValueError("N must be a power of two")
        values = np.asarray(values, dtype=float)
        if values.shape != (N,) * n:
            raise ValueError(f"values must have shape {(N,) * n}")
        self.n, self.L, self.N = n, float(L), int(N)
        self.values = values
        self._spec = None
        self._lock = threading.Lock()

    @classmethod
    def from_function(cls, fn, n: int, L: float, N: int) -> "GridField":
        """Sample ``fn`` (taking an (m, n) point array) on the grid."""
        axes = torus_axes(n, L, N)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = np.asarray(fn(pts), dtype=float).reshape((N,) * n)
        return cls(n, L, N, vals)

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    def points(self):
        mesh = np.meshgrid(*torus_axes(self.n, self.L, self.N), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def spectrum(self):
        with self._lock:
            if self._spec is None:
                self._spec = np.fft.rfftn(self.values)
            return self._spec

    def xi_squared(self):
        return torus_xi_squared(self.n, self.L, self.N)

    def apply_multiplier(self, multiplier) -> "GridField":
        """Return the field with spectral coefficients scaled by ``multiplier``."""
        spec = self.spectrum() * np.asarray(multiplier)
        vals = np.fft.irfftn(spec, s=(self.N,) * self.n)
        return GridField(self.n, self.L, self.N, vals)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.h**self.n))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def boundary_max(self) -> float:
        """Largest |value| on the outermost grid shell (wrap-around gauge)."""
        worst = 0.0
        for axis in range(self.n):
            sl = [slice(None)] * self.n
            sl[axis] = 0
            worst = max(worst, float(np.max(np.abs(self.values[tuple(sl)]))))
        return worst


def spectral_fractional_laplacian(field: GridField, gamma: float) -> GridField:
    """Apply the multiplier |xi|^(2 gamma); the zero frequency maps to 0."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return field.apply_multiplier(field.xi_squared() ** gamma)
