"""Uniform periodic grids on [-L, L) and exact Fourier-side operators.

Fourier convention: f^(xi) = int f(x) exp(-2 pi i x xi) dx, so the derivative
has symbol 2 pi i xi and the Hilbert transform has symbol -i sign(xi).

Two spectral layouts are used:

* ``SpectralField.coeffs`` holds the full length-N array in numpy FFT order
  (xi_k = k / 2L), scaled so that it approximates the continuous transform:
  coeffs_k = dx * (-1)^k * fft(values)_k.
* The solver-facing helpers (``rfft``/``irfft`` and the ``*_symbol`` arrays)
  work on plain real-FFT coefficients, where the node phase cancels.

The Nyquist mode has no conjugate partner. It is treated as unoriented:
sign = 0 there, so Hilbert and derivative annihilate it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "make_grid",
    "fft_forward",
    "fft_inverse",
    "hilbert",
    "derivative",
    "dealias",
    "norms",
    "weighted_sup_norm",
    "weighted_l2",
    "rfft",
    "irfft",
    "sign_symbol",
    "hilbert_symbol",
    "derivative_symbol",
    "dealias_mask",
    "hs_weight",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_j = -L + j dx, j = 0..N-1, with dx = 2L/N."""

    L: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"half width L must be positive, got {self.L}")
        if int(self.N) != self.N or self.N < 16 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 16, got {self.N}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def freqs(self) -> np.ndarray:
        """Frequencies k/(2L) in numpy FFT order (Nyquist carries -N/2)."""
        return np.fft.fftfreq(self.N, d=self.dx)

    @cached_property
    def rfreqs(self) -> np.ndarray:
        return np.fft.rfftfreq(self.N, d=self.dx)

    @property
    def dxi(self) -> float:
        return 1.0 / (2.0 * self.L)

    def __hash__(self):
        return hash((self.L, self.N))

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.L, self.N) == (other.L, other.N)


def make_grid(L: float, N: int) -> Grid:
    return Grid(L, N)


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "RealField":
        return cls(grid, func(grid.x))

    def __mul__(self, c):
        return RealField(self.grid, self.values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} coefficients, got shape {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def freqs(self) -> np.ndarray:
        return self.grid.freqs

    def hermitian_defect(self) -> float:
        """Max |c(-xi) - conj c(xi)| relative to max |c|, Nyquist imaginary part included."""
        c = self.coeffs
        N = c.size
        scale = max(np.max(np.abs(c)), np.finfo(float).tiny)
        idx = np.arange(1, N // 2)
        defect = np.max(np.abs(c[N - idx] - np.conj(c[idx]))) if idx.size else 0.0
        defect = max(defect, abs(c[N // 2].imag), abs(c[0].imag))
        return float(defect / scale)


def _node_phase(N: int) -> np.ndarray:
    return np.where(np.arange(N) % 2 == 0, 1.0, -1.0)


def fft_forward(f: RealField) -> SpectralField:
    g = f.grid
    return SpectralField(g, g.dx * _node_phase(g.N) * np.fft.fft(f.values))


def fft_inverse(F: SpectralField) -> RealField:
    g = F.grid
    vals = np.fft.ifft(F.coeffs * _node_phase(g.N) / g.dx)
    return RealField(g, vals.real)


# --- real-FFT symbols (solver fast path) -----------------------------------


def rfft(values: np.ndarray) -> np.ndarray:
    return np.fft.rfft(values)


def irfft(coeffs: np.ndarray, n: int) -> np.ndarray:
    return np.fft.irfft(coeffs, n=n)


def sign_symbol(grid: Grid) -> np.ndarray:
    s = np.ones(grid.N // 2 + 1)
    s[0] = 0.0
    s[-1] = 0.0
    return s


def hilbert_symbol(grid: Grid) -> np.ndarray:
    return -1j * sign_symbol(grid)


def derivative_symbol(grid: Grid) -> np.ndarray:
    d = 2j * np.pi * grid.rfreqs
    d[-1] = 0.0
    return d


def dealias_mask(grid: Grid) -> np.ndarray:
    k = np.arange(grid.N // 2 + 1)
    return k <= grid.N / 3.0


def hs_weight(grid: Grid, s: float, freqs=None) -> np.ndarray:
    xi = grid.freqs if freqs is None else freqs
    return (1.0 + (2.0 * np.pi * xi) ** 2) ** s


# --- public operators --------------------------------------------------------


def _apply_real_symbol(f: RealField, symbol: np.ndarray) -> RealField:
    return RealField(f.grid, irfft(symbol * rfft(f.values), f.grid.N))


def hilbert(f: RealField) -> RealField:
    """Hilbert transform, symbol -i sign(xi); the zero mode of the output is exactly 0."""
    return _apply_real_symbol(f, hilbert_symbol(f.grid))


def derivative(f: RealField) -> RealField:
    return _apply_real_symbol(f, derivative_symbol(f.grid))


def dealias(F: SpectralField) -> SpectralField:
    """Two-thirds rule: keep |k| <= N/3."""
    k = np.rint(F.freqs * 2.0 * F.grid.L)
    return SpectralField(F.grid, np.where(np.abs(k) <= F.grid.N / 3.0, F.coeffs, 0.0))


def norms(f: RealField, s: float = 2.0) -> dict:
    """L1, L2, H^s and sup norms. Integrals are dx-weighted sums (periodic trapezoid)."""
    g = f.grid
    v = f.values
    c = fft_forward(f).coeffs
    hs2 = np.sum(hs_weight(g, s) * np.abs(c) ** 2) * g.dxi
    return {
        "l1": float(g.dx * np.sum(np.abs(v))),
        "l2": float(np.sqrt(g.dx * np.sum(v * v))),
        "hs": float(np.sqrt(hs2)),
        "linf": float(np.max(np.abs(v))),
    }


def weighted_sup_norm(f: RealField, a: float) -> float:
    return float(np.max((1.0 + np.abs(f.grid.x)) ** a * np.abs(f.values)))


def weighted_l2(f: RealField) -> float:
    """|| |x| f ||_{L^2} on the grid."""
    g = f.grid
    return float(np.sqrt(g.dx * np.sum((g.x * f.values) ** 2)))
