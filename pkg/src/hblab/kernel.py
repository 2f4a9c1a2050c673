"""Propagator kernel of the linear part, K(t, .) = F^{-1}[exp(-mu xi^2 t + i beta sign(xi) t)].

Splitting exp(i beta sign(xi) t) = cos(beta t) + i sign(xi) sin(beta t) gives

    K   = cos(beta t) G   - sin(beta t) G_H
    HK  = cos(beta t) G_H + sin(beta t) G
    dxK = cos(beta t) G'  - sin(beta t) G_H'

with G the Gaussian heat kernel of symbol exp(-mu xi^2 t) and G_H its Hilbert
transform, G_H(x) = DAWSON_SCALE / sqrt(mu t) * D(pi x / sqrt(mu t)).

The viscous symbol here is exp(-mu xi^2 t), the ``mu`` of this module. The
solver propagates with exp(-mu (2 pi xi)^2 t); use ``solver_kernel_params``
to translate between the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fitting import PowerTailFit, fit_power_tail
from .quadrature import QuadratureError, gk15_adaptive
from .special import dawson, dawson_complement

__all__ = [
    "DAWSON_SCALE",
    "KernelParams",
    "KernelEval",
    "BoundReport",
    "heat_kernel",
    "hilbert_heat_kernel",
    "kernel_K",
    "kernel_HK",
    "kernel_dK",
    "evaluate",
    "oracle_quadrature",
    "eta",
    "check_bounds",
    "tail_constant",
    "solver_kernel_params",
    "QuadratureError",
]

# H[G](x) = DAWSON_SCALE / sqrt(mu t) * D(z); fitted against the quadrature
# oracle (see tests/test_kernel.py::test_dawson_scale_regression) and equal
# to 2 up to rounding.
DAWSON_SCALE = 2.0

T_MIN_CLOSED_FORM = 1e-6


@dataclass(frozen=True)
class KernelParams:
    beta: float
    mu: float

    def __post_init__(self):
        if not (self.mu > 0):
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")

    @property
    def heat_only(self) -> bool:
        return self.beta == 0


@dataclass(frozen=True)
class KernelEval:
    t: float
    x: float
    value_K: float
    value_HK: float
    value_dK: float
    method: str
    abs_err_est: float = 0.0


def solver_kernel_params(beta: float, mu: float) -> KernelParams:
    """Kernel parameters matching the solver propagator exp(-mu (2 pi xi)^2 t)."""
    return KernelParams(beta, 4.0 * np.pi**2 * mu)


def _check_t(t, floor=T_MIN_CLOSED_FORM):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("t must be positive")
    if np.any(t < floor):
        raise ValueError(f"closed forms need t >= {floor:g}; use oracle_quadrature")
    return t


def heat_kernel(t, x, mu):
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    mt = mu * t
    return np.sqrt(np.pi / mt) * np.exp(-(np.pi**2) * x * x / mt)


def hilbert_heat_kernel(t, x, mu):
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    rt = np.sqrt(mu * t)
    return DAWSON_SCALE / rt * dawson(np.pi * x / rt)


def _pieces(t, x, p: KernelParams):
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    mt = p.mu * t
    rt = np.sqrt(mt)
    z = np.pi * x / rt
    G = np.sqrt(np.pi / mt) * np.exp(-z * z)
    GH = DAWSON_SCALE / rt * dawson(z)
    dG = -2.0 * np.pi * z / rt * G
    dGH = DAWSON_SCALE * np.pi / mt * dawson_complement(z)
    c = np.cos(p.beta * t)
    s = np.sin(p.beta * t)
    return c, s, G, GH, dG, dGH


def kernel_K(t, x, p: KernelParams):
    c, s, G, GH, _, _ = _pieces(t, x, p)
    return c * G - s * GH


def kernel_HK(t, x, p: KernelParams):
    c, s, G, GH, _, _ = _pieces(t, x, p)
    return c * GH + s * G


def kernel_dK(t, x, p: KernelParams):
    c, s, _, _, dG, dGH = _pieces(t, x, p)
    return c * dG - s * dGH


def evaluate(t: float, x: float, p: KernelParams, method: str = "closed_form") -> KernelEval:
    if method == "closed_form":
        c, s, G, GH, dG, dGH = _pieces(t, x, p)
        vals = (c * G - s * GH, c * GH + s * G, c * dG - s * dGH)
        err = 0.0
    elif method == "oracle":
        vals, errs = _oracle_all(float(t), float(x), p)
        err = float(np.max(errs))
    else:
        raise ValueError(f"unknown method {method!r}")
    return KernelEval(float(t), float(x), *(float(v) for v in vals), method, err)


# --- quadrature oracle ------------------------------------------------------

_WHICH = ("K", "HK", "dK")
_TWO_PI_LD = 8 * np.arctan(np.longdouble(1))


def _oracle_all(t: float, x: float, p: KernelParams, abs_tol: float = 1e-12):
    """K, HK, dK by direct quadrature of the Fourier integral.

    The integral over xi < 0 is the conjugate of the one over xi > 0, so
    each kernel is twice the real part of a half-line integral:

        K  =  2 int_0^inf g cos(theta),  HK = 2 int_0^inf g sin(theta),
        dK = -4 pi int_0^inf xi g sin(theta),

    with g = exp(-mu t xi^2), theta = 2 pi x xi + beta t.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    a = p.mu * t
    xi_max = np.sqrt(40.0 / a)  # exp(-40) ~ 4e-18 truncation
    h = min(1.0 / (4.0 * abs(x) + 1.0), xi_max / 64.0)
    n = int(np.ceil(xi_max / h))
    edges = np.linspace(0.0, xi_max, n + 1)
    bt = np.longdouble(p.beta * t)
    tpx = _TWO_PI_LD * np.longdouble(x)

    def integrand(xi_ld):
        xi = xi_ld.astype(float)
        g = np.exp(-a * xi * xi)
        # phase reaches ~1e5 rad; reduce it in extended precision
        th = np.mod(tpx * xi_ld + bt, _TWO_PI_LD).astype(float)
        gs = g * np.sin(th)
        return np.stack([2.0 * g * np.cos(th), 2.0 * gs, -4.0 * np.pi * xi * gs])

    vals, errs = gk15_adaptive(integrand, edges, abs_tol=abs_tol)
    return vals, errs


def oracle_quadrature(t: float, x: float, p: KernelParams, which: str = "K",
                      abs_tol: float = 1e-12) -> float:
    """Ground-truth kernel value by adaptive Gauss-Kronrod on the Fourier integral."""
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    vals, _ = _oracle_all(float(t), float(x), p, abs_tol=abs_tol)
    return float(vals[_WHICH.index(which)])


# --- bounds and tails ---------------------------------------------------------


def eta(t):
    t = np.asarray(t, dtype=float)
    return 1.0 + np.sqrt(t) + t


@dataclass(frozen=True)
class BoundReport:
    sup_Q: float
    t_at_sup: float
    x_at_sup: float
    beta_zero: bool


def check_bounds(p: KernelParams, t_grid, x_grid) -> BoundReport:
    """Empirical constant sup (|K| + |HK|) t^(1/2) (1+|x|) / eta(t) over a (t, x) grid."""
    t = np.asarray(t_grid, dtype=float)[:, None]
    x = np.asarray(x_grid, dtype=float)[None, :]
    c, s, G, GH, _, _ = _pieces(t, x, p)
    Q = (np.abs(c * G - s * GH) + np.abs(c * GH + s * G)) * np.sqrt(t) * (1.0 + np.abs(x)) / eta(t)
    i, j = np.unravel_index(np.argmax(Q), Q.shape)
    return BoundReport(float(Q[i, j]), float(t[i, 0]), float(x[0, j]), p.heat_only)


def tail_constant(t: float, p: KernelParams, window=(50.0, 400.0), which: str = "K",
                  n_points: int = 200, method: str = "closed_form",
                  min_r2: float = 0.99) -> PowerTailFit:
    """Fit |K(t, x)| ~ a |x|^slope on a log-spaced window and return the fit.

    The amplitude is the mean of x K(t, x) when the slope is close to -1.
    A fit with r^2 < ``min_r2`` raises ``ValueError``; a window where the
    kernel is below double-precision resolution returns slope = -inf.
    """
    lo, hi = window
    if lo < 10.0 * np.sqrt(p.mu * t):
        raise ValueError("window must start beyond 10 sqrt(mu t)")
    xs = np.geomspace(lo, hi, n_points)
    if method == "closed_form":
        f = kernel_K(t, xs, p) if which == "K" else kernel_HK(t, xs, p)
    elif method == "oracle":
        f = np.array([oracle_quadrature(t, xv, p, which) for xv in xs])
    else:
        raise ValueError(f"unknown method {method!r}")
    fit = fit_power_tail(xs, f)
    if np.isfinite(fit.slope) and fit.r2 < min_r2:
        raise ValueError(f"tail fit rejected: r2={fit.r2:.4f} < {min_r2}")
    return fit
