"""Tail fits, the 1/x profile amplitude, weighted norms and decay constants."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fitting import InsufficientTail, fit_power_tail
from .solver import ModelParams, Trajectory
from .spectral_core import (
    RealField,
    derivative,
    hilbert,
    norms,
    weighted_l2,
)

__all__ = [
    "TailFit",
    "ProfileReport",
    "DecayReport",
    "GSeries",
    "InsufficientTail",
    "SkippedNearNode",
    "WRAP_GUARD",
    "tail_fit",
    "decay_check",
    "decay_drift",
    "phi",
    "profile_check",
    "weighted_diagnostics",
    "g_series",
    "gronwall_mass",
]

WRAP_GUARD = 0.4
NEAR_NODE = 0.3
PROFILE_TOL = 0.05
ZERO_MASS = 1e-12  # |M0| below this is rounding noise of an odd datum


class SkippedNearNode(UserWarning):
    """Relative profile comparison skipped because |sin(beta t)| < 0.3."""


@dataclass(frozen=True)
class TailFit:
    window: tuple
    side: str
    slope: float
    amplitude: float
    r2: float
    n_used: int
    below_floor: bool = False


@dataclass(frozen=True)
class ProfileReport:
    t: float
    measured_amplitude: float
    predicted: float
    nonlinear_correction: float
    relative_gap: float
    absolute_gap: float
    status: str = "compared"  # compared | skipped_near_node | zero_mass
    passed: bool | None = None
    phi_value: float = 0.0


def _check_window(grid, window):
    lo, hi = float(window[0]), float(window[1])
    if lo < 1.0:
        raise ValueError(f"window start must be >= 1, got {lo}")
    if hi > WRAP_GUARD * grid.L * (1 + 1e-12):
        raise ValueError(f"window end {hi} beyond the wrap guard {WRAP_GUARD} L = {WRAP_GUARD * grid.L}")
    if not hi > lo:
        raise ValueError("empty window")
    return lo, hi


def _mirror(values):
    """f(-x_j) on the grid x_j = -L + j dx: index N - j (mod N)."""
    return np.roll(values[::-1], 1)


def _odd_part(values):
    return 0.5 * (values - _mirror(values))


def tail_fit(f: RealField, window=(20.0, 100.0), side: str = "right") -> TailFit:
    """Log-log fit of |f| ~ a |x|^slope on window nodes.

    ``right`` and ``left`` use the nodes with lo <= |x| <= hi on that side.
    ``symmetric`` fits the odd part (f(x) - f(-x))/2 on the right, i.e. x f
    averaged over +-x, which removes even contamination such as the constant
    offset a periodic box adds to a mass-carrying solution.
    """
    g = f.grid
    lo, hi = _check_window(g, window)
    x = g.x
    v = f.values
    if side == "right":
        sel = (x >= lo) & (x <= hi)
        xs, fs = x[sel], v[sel]
    elif side == "left":
        sel = (x <= -lo) & (x >= -hi)
        xs, fs = x[sel], v[sel]
    elif side == "symmetric":
        sel = (x >= lo) & (x <= hi)
        xs, fs = x[sel], _odd_part(v)[sel]
    else:
        raise ValueError(f"side must be left, right or symmetric, got {side!r}")
    fit = fit_power_tail(xs, fs)
    return TailFit((lo, hi), side, fit.slope, fit.amplitude, fit.r2, fit.n_used, fit.below_floor)


def _measured_amplitude(u: RealField, window, wrap_correction: bool) -> float:
    """Mean of x times the odd part of u over the window nodes.

    With ``wrap_correction`` the odd part is compared with the periodised
    profile (pi/2L) cot(pi x/2L) instead of 1/x, removing the O((x/L)^2) bias
    of the periodic images.
    """
    g = u.grid
    lo, hi = _check_window(g, window)
    x = g.x
    sel = (x >= lo) & (x <= hi)
    xs = x[sel]
    odd = _odd_part(u.values)[sel]
    if not wrap_correction:
        return float(np.mean(xs * odd))
    k = np.pi / (2.0 * g.L)
    prof = k / np.tan(k * xs)
    return float(np.mean(xs * odd) / np.mean(xs * prof))


# --- decay and weighted diagnostics -----------------------------------------


@dataclass(frozen=True)
class DecayReport:
    exponent: float
    C1: float
    t_at_sup: float
    per_time: np.ndarray
    x_max: float


def _weight_exponent(gamma):
    return min(1.0, float(gamma))


def decay_check(traj: Trajectory, gamma: float, x_max: float | None = None) -> DecayReport:
    """C1 = sup_t sup_{|x|<=x_max} t^(1/2) (1+|x|)^min(1,gamma) (|u| + |Hu|).

    ``gamma=np.inf`` (Gaussian data) gives exponent 1. ``x_max`` defaults to the
    wrap guard 0.4 L.
    """
    a = _weight_exponent(gamma)
    g = traj.grid
    xm = WRAP_GUARD * g.L if x_max is None else float(x_max)
    sel = np.abs(g.x) <= xm
    w = (1.0 + np.abs(g.x[sel])) ** a
    per = []
    for st in traj.states:
        hu = hilbert(st.u).values
        per.append(np.sqrt(st.t) * np.max(w * (np.abs(st.u.values[sel]) + np.abs(hu[sel]))))
    per = np.asarray(per)
    i = int(np.argmax(per)) if per.size else 0
    return DecayReport(a, float(per[i]) if per.size else 0.0,
                       float(traj.states[i].t) if per.size else 0.0, per, xm)


def decay_drift(r1: DecayReport, r2: DecayReport) -> float:
    """Relative difference of two C1 constants (0 when both vanish)."""
    den = max(abs(r1.C1), abs(r2.C1))
    return 0.0 if den == 0 else abs(r1.C1 - r2.C1) / den


@dataclass(frozen=True)
class GSeries:
    t: np.ndarray
    g: np.ndarray
    exponent: float
    bounded: bool


def g_series(traj: Trajectory, gamma: float, x_max: float | None = None) -> GSeries:
    """g(t) = t^(1/2) (||(1+|x|)^a u||_inf + ||(1+|x|)^a Hu||_inf), a = min(1, gamma).

    Sups are taken over |x| <= x_max (default the wrap guard 0.4 L), where the
    constant offset a periodic box adds to a mass-carrying solution is not
    amplified by the weight. ``bounded`` is True when g is finite and its
    maximum over the second half of the run is at most twice its maximum over
    the first half.
    """
    a = _weight_exponent(gamma)
    g = traj.grid
    xm = WRAP_GUARD * g.L if x_max is None else float(x_max)
    sel = np.abs(g.x) <= xm
    w = (1.0 + np.abs(g.x[sel])) ** a
    ts, gs = [], []
    for st in traj.states:
        hu = hilbert(st.u).values[sel]
        ts.append(st.t)
        gs.append(np.sqrt(st.t) * (np.max(w * np.abs(st.u.values[sel])) + np.max(w * np.abs(hu))))
    t, gv = np.asarray(ts), np.asarray(gs)
    bounded = bool(np.all(np.isfinite(gv)))
    if bounded and t.size > 2:
        half = t <= 0.5 * t[-1]
        first = gv[half].max()
        bounded = bool(gv[~half].max() <= 2.0 * first) if first > 0 else bool(gv.max() == 0)
    return GSeries(t, gv, a, bounded)


def weighted_diagnostics(traj: Trajectory) -> dict:
    """Time series of || |x| u ||_2, || |x| Hu ||_2, ||u||_1 and ||Hu||_1 over the whole box."""
    out = {k: [] for k in ("t", "xu_l2", "xhu_l2", "u_l1", "hu_l1")}
    for st in traj.states:
        hu = hilbert(st.u)
        out["t"].append(st.t)
        out["xu_l2"].append(weighted_l2(st.u))
        out["xhu_l2"].append(weighted_l2(hu))
        out["u_l1"].append(norms(st.u, 2)["l1"])
        out["hu_l1"].append(norms(hu, 2)["l1"])
    res = {k: np.asarray(v) for k, v in out.items()}
    res["L"] = traj.grid.L
    return res


# --- the 1/x profile --------------------------------------------------------


def _flux_integral(u: RealField) -> float:
    """int (u u_x + Hu (Hu)_x) dy by the trapezoid rule; a perfect derivative."""
    hu = hilbert(u)
    return float(u.grid.dx * np.sum(u.values * derivative(u).values
                                    + hu.values * derivative(hu).values))


def _correction(traj: Trajectory, p: ModelParams, t: float) -> float:
    states = [s for s in traj.states if s.t <= t * (1 + 1e-12)]
    if len(states) < 2:
        return 0.0
    tau = np.array([s.t for s in states])
    J = np.array([_flux_integral(s.u) for s in states])
    return float(np.trapezoid(np.sin(p.beta * (t - tau)) * J, tau))


def _default_window(L):
    return (max(1.0, 0.05 * L), 0.2 * L)


def phi(traj: Trajectory, M0: float, p: ModelParams, t: float, window=None,
        wrap_correction: bool = False) -> ProfileReport:
    """Profile amplitude report at a saved time t.

    Phi = -sin(beta t) M0 - int_0^t sin(beta (t - tau)) int (u u_x + Hu (Hu)_x) dy dtau;
    the inner integrals are perfect derivatives, so the correction is a
    consistency check that should vanish. The predicted 1/x amplitude is
    -sin(beta t) M0 / pi. ``window`` defaults to [0.05 L, 0.2 L].
    """
    st = traj.state_at(t)
    corr = _correction(traj, p, st.t)
    pred = -np.sin(p.beta * st.t) * M0 / np.pi
    win = _default_window(traj.grid.L) if window is None else window
    meas = _measured_amplitude(st.u, win, wrap_correction)
    absgap = abs(meas - pred)
    s = abs(np.sin(p.beta * st.t))
    if abs(M0) <= ZERO_MASS:
        status, rel = "zero_mass", absgap
    elif s < NEAR_NODE:
        status, rel = "skipped_near_node", absgap
    else:
        status, rel = "compared", absgap / abs(pred)
    passed = rel <= PROFILE_TOL if status == "compared" else None
    return ProfileReport(float(st.t), meas, float(pred), corr, float(rel), float(absgap),
                         status, passed, float(-np.sin(p.beta * st.t) * M0 - corr))


def profile_check(traj: Trajectory, M0: float, p: ModelParams, times, window=(50.0, 200.0),
                  wrap_correction: bool = False) -> list:
    """ProfileReport for each requested saved time.

    Times with |sin(beta t)| < 0.3 are not compared relatively: they get
    status ``skipped_near_node``, the absolute gap in ``relative_gap`` and a
    SkippedNearNode warning.
    """
    _check_window(traj.grid, window)
    reports = []
    for t in times:
        r = phi(traj, M0, p, t, window, wrap_correction)
        if r.status == "skipped_near_node":
            warnings.warn(f"t={r.t:g}: |sin(beta t)| < {NEAR_NODE}; absolute gap {r.absolute_gap:.3e}",
                          SkippedNearNode, stacklevel=2)
        reports.append(r)
    return reports


# --- singular Gronwall constant ---------------------------------------------


def gronwall_mass(a: float = 0.0, b: float = 1.0, method: str = "transformed",
                  n: int = 1_000_000) -> float:
    """int_a^b dtau / ((1 - tau)^(1/2) tau^(1/2)); the full interval gives pi.

    ``transformed``: tau = sin^2(theta) turns the integrand into the constant 2,
    integrated by Gauss-Legendre in theta.
    ``naive``: midpoint rule with n panels in tau plus one Richardson step in
    h^(1/2), the leading error term of the endpoint singularities.
    ``midpoint``: the plain midpoint rule (error ~ h^(1/2)).
    """
    if not 0.0 <= a < b <= 1.0:
        raise ValueError("need 0 <= a < b <= 1")
    f = lambda tau: 1.0 / np.sqrt(tau * (1.0 - tau))  # noqa: E731
    if method == "transformed":
        th_a, th_b = np.arcsin(np.sqrt(a)), np.arcsin(np.sqrt(b))
        xg, wg = np.polynomial.legendre.leggauss(8)
        th = 0.5 * (th_b - th_a) * (xg + 1.0) + th_a
        s, c = np.sin(th), np.cos(th)
        jac = 2.0 * s * c
        # f(sin^2 th) * jac, with the product simplified where f is singular
        vals = np.where(jac > 0, f(np.clip(s * s, 1e-300, 1 - 1e-16)) * jac, 2.0)
        return float(0.5 * (th_b - th_a) * np.sum(wg * vals))

    def midpoint(m):
        h = (b - a) / m
        return float(h * np.sum(f(a + h * (np.arange(m) + 0.5))))

    if method == "midpoint":
        return midpoint(n)
    if method == "naive":
        q1, q2 = midpoint(n // 2), midpoint(n)
        r = np.sqrt(2.0)
        return float((r * q2 - q1) / (r - 1.0))
    raise ValueError(f"unknown method {method!r}")
