"""Mild-formulation time integration of

    u_t + u u_x + (Hu)(Hu)_x + beta Hu - mu u_xx = 0

on the periodic box [-L, L). The linear part is propagated exactly by its
Fourier multiplier exp(Lambda t), Lambda(xi) = -mu (2 pi xi)^2 + i beta sign(xi);
the nonlinearity is N(u) = 1/2 d/dx (u^2 + (Hu)^2).

Internally the state is the real-FFT coefficient array of u. Two steppers
share the same multiplier: a Picard iteration on the Duhamel formula and
the two-stage exponential integrator ETD2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral_core import (
    Grid,
    RealField,
    SpectralField,
    dealias_mask,
    derivative_symbol,
    hilbert_symbol,
    hs_weight,
    norms,
    sign_symbol,
)

__all__ = [
    "ModelParams",
    "InitialData",
    "SolverConfig",
    "State",
    "Trajectory",
    "NonContraction",
    "BlowupSuspected",
    "NaNEncountered",
    "make_initial",
    "semigroup_apply",
    "nonlinearity",
    "picard_step",
    "etd2_step",
    "default_horizon",
    "run",
    "blowup_monitor",
    "energy_residual",
    "DIAGNOSTICS",
]

DIAGNOSTICS = ("t", "l2", "hs", "linf_dux", "blowup_integral", "energy_residual", "mass")


class NonContraction(RuntimeError):
    """Picard iteration did not reach its tolerance within the iteration budget."""


class NaNEncountered(FloatingPointError):
    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


class BlowupSuspected(RuntimeError):
    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


@dataclass(frozen=True)
class ModelParams:
    beta: float
    mu: float

    def __post_init__(self):
        if not (self.mu > 0) or not np.isfinite(self.mu):
            raise ValueError(f"mu must be positive and finite, got {self.mu}")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")


@dataclass(frozen=True, eq=False)
class InitialData:
    kind: str
    u0: RealField
    mass: float
    params: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.u0.grid


def make_initial(grid: Grid, kind: str = "gaussian", **kw) -> InitialData:
    """Build an initial datum on ``grid``.

    Kinds and keywords:

    * ``gaussian``: amplitude, width, center, or ``mass`` in place of amplitude;
      u0 = A exp(-((x - c)/w)^2).
    * ``odd_gaussian``: amplitude, width, center; u0 = A ((x-c)/w) exp(-((x-c)/w)^2),
      a zero-mass datum.
    * ``algebraic``: C0, gamma; u0 = C0 (2 (1 + x^2))^(-(1+gamma)/2), which
      satisfies |u0| <= C0 (1+|x|)^(-1-gamma) everywhere and is smooth.
    * ``cosine``: amplitude, mode k; u0 = A cos(pi k x / L).
    * ``two_mode``: amplitude, seed, mode k; u0 = A cos(2 pi k x / L) + seed cos(pi k x / L).
      For the analytic signal u + iHu the pair of modes {k, 2k} is closed under
      the nonlinearity and mode k grows exponentially at a rate of order A k pi / L.
    * ``custom``: samples.
    """
    x = grid.x
    kind = kind.lower()
    if kind == "gaussian":
        w = float(kw.get("width", 1.0))
        c = float(kw.get("center", 0.0))
        if w <= 0:
            raise ValueError("gaussian width must be positive")
        if "mass" in kw and kw["mass"] is not None:
            amp = float(kw["mass"]) / (w * np.sqrt(np.pi))
        else:
            amp = float(kw.get("amplitude", 1.0))
        vals = amp * np.exp(-(((x - c) / w) ** 2))
        params = {"amplitude": amp, "width": w, "center": c}
    elif kind == "odd_gaussian":
        w = float(kw.get("width", 1.0))
        c = float(kw.get("center", 0.0))
        if w <= 0:
            raise ValueError("odd_gaussian width must be positive")
        amp = float(kw.get("amplitude", 1.0))
        y = (x - c) / w
        vals = amp * y * np.exp(-y * y)
        params = {"amplitude": amp, "width": w, "center": c}
    elif kind == "algebraic":
        C0 = float(kw.get("C0", 1.0))
        gamma = float(kw.get("gamma", 1.0))
        if not gamma > 0:
            raise ValueError("algebraic data need gamma > 0")
        vals = C0 * (2.0 * (1.0 + x * x)) ** (-(1.0 + gamma) / 2.0)
        params = {"C0": C0, "gamma": gamma}
    elif kind == "cosine":
        amp = float(kw.get("amplitude", 1.0))
        k = int(kw.get("k", 1))
        vals = amp * np.cos(np.pi * k * x / grid.L)
        params = {"amplitude": amp, "k": k}
    elif kind == "two_mode":
        amp = float(kw.get("amplitude", 20.0))
        seed = float(kw.get("seed", 1e-6))
        k = int(kw.get("k", 1))
        th = np.pi * k * x / grid.L
        vals = amp * np.cos(2.0 * th) + seed * np.cos(th)
        params = {"amplitude": amp, "seed": seed, "k": k}
    elif kind == "custom":
        vals = np.asarray(kw["samples"], dtype=float)
        params = {}
    else:
        raise ValueError(f"unknown initial-data kind {kind!r}")
    u0 = RealField(grid, vals)
    return InitialData(kind, u0, float(grid.dx * np.sum(u0.values)), params)


@dataclass(frozen=True)
class SolverConfig:
    """Stepping and diagnostic options.

    ``dt=None`` selects min(default_horizon/8, cfl * dx / max|u0|).
    ``save_times`` (if given) are hit exactly; otherwise every ``save_every``-th
    step is stored. The final time T is always stored.
    """

    dt: float | None = None
    T: float = 1.0
    scheme: str = "etd2"
    picard_tol: float = 1e-12
    picard_max_iter: int = 50
    duhamel_nodes: int = 4
    dealias: bool = True
    s: float = 2.0
    C_cal: float = 1.0
    T_max: float = 1e3
    hs_ceiling: float = 1e3
    nonlinear: bool = True
    save_every: int = 1
    save_times: tuple | None = None
    cfl: float = 0.25

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.dt is not None and self.T < self.dt:
            raise ValueError("T must be >= dt")
        if self.scheme not in ("picard", "etd2"):
            raise ValueError(f"scheme must be 'picard' or 'etd2', got {self.scheme!r}")
        if not self.s > 1.5:
            raise ValueError(f"Sobolev index must satisfy s > 3/2, got {self.s}")
        if self.picard_max_iter < 1 or self.duhamel_nodes < 1 or self.save_every < 1:
            raise ValueError("iteration, node and save counts must be >= 1")
        if not self.picard_tol > 0 or not self.C_cal > 0 or not self.hs_ceiling > 1:
            raise ValueError("picard_tol and C_cal must be positive, hs_ceiling > 1")
        if self.save_times is not None:
            st = tuple(float(v) for v in self.save_times)
            if any(not (0 < v <= self.T) for v in st) or any(b <= a for a, b in zip(st, st[1:])):
                raise ValueError("save_times must be strictly increasing in (0, T]")
            object.__setattr__(self, "save_times", st)


@dataclass(frozen=True, eq=False)
class State:
    t: float
    u: RealField


@dataclass(eq=False)
class Trajectory:
    grid: Grid
    params: ModelParams
    states: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=lambda: {k: [] for k in DIAGNOSTICS})
    mass0: float = 0.0
    hs0: float = 0.0
    aborted: bool = False
    abort_reason: str = ""
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.diagnostics[name], dtype=float)

    def state_at(self, t: float, tol: float = 1e-9) -> State:
        ts = self.times
        i = int(np.argmin(np.abs(ts - t)))
        if abs(ts[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no saved state at t={t}")
        return self.states[i]

    def __len__(self):
        return len(self.states)


# --- spectral machinery -------------------------------------------------------


class _Ops:
    """Symbols on the real-FFT frequency set of one grid."""

    def __init__(self, grid: Grid, p: ModelParams, dealias: bool, nonlinear: bool = True):
        self.grid = grid
        self.N = grid.N
        self.lam = -p.mu * (2.0 * np.pi * grid.rfreqs) ** 2 + 1j * p.beta * sign_symbol(grid)
        self.lam[0] = 0.0
        self.H = hilbert_symbol(grid)
        self.D = derivative_symbol(grid)
        self.mask = dealias_mask(grid) if dealias else np.ones(grid.N // 2 + 1, dtype=bool)
        self.nonlinear = nonlinear
        self.p = p
        self._cache = {}

    def E(self, h):
        key = ("E", h)
        if key not in self._cache:
            self._cache[key] = np.exp(h * self.lam)
        return self._cache[key]

    def phis(self, h):
        key = ("phi", h)
        if key not in self._cache:
            self._cache[key] = _phi12(h * self.lam)
        return self._cache[key]

    def fwd(self, v):
        return np.fft.rfft(v)

    def inv(self, V):
        return np.fft.irfft(V, n=self.N)

    def N_hat(self, U):
        if not self.nonlinear:
            return np.zeros_like(U)
        Um = U * self.mask
        u = self.inv(Um)
        hu = self.inv(self.H * Um)
        W = self.fwd(u * u + hu * hu)
        out = 0.5 * self.D * W * self.mask
        out[0] = 0.0
        return out

    def l2(self, U):
        g = self.grid
        a = np.abs(U) ** 2
        ssum = a[0] + a[-1] + 2.0 * np.sum(a[1:-1])
        return float(np.sqrt(g.dx * ssum / self.N))

    def hs(self, U, s):
        g = self.grid
        w = hs_weight(g, s, g.rfreqs)
        a = w * np.abs(U) ** 2
        ssum = a[0] + a[-1] + 2.0 * np.sum(a[1:-1])
        return float(np.sqrt(g.dxi * g.dx**2 * ssum))

    def energy_rhs(self, U):
        u = self.inv(U)
        ux = self.inv(self.D * U)
        dx = self.grid.dx
        rhs = -self.p.mu * dx * np.sum(ux * ux)
        if self.nonlinear:
            hu = self.inv(self.H * U)
            rhs += 0.5 * dx * np.sum(hu * hu * ux)
        return float(rhs), u, ux


def _phi12(z):
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, elementwise."""
    z = np.asarray(z, dtype=complex)
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)
    small = np.abs(z) < 1.0
    big = ~small
    zb = z[big]
    ez = np.exp(zb)
    phi1[big] = (ez - 1.0) / zb
    phi2[big] = (ez - 1.0 - zb) / (zb * zb)
    zs = z[small]
    # Taylor series, 20 terms: |z|^20/22! < 1e-21
    p1 = np.zeros_like(zs)
    p2 = np.zeros_like(zs)
    for k in range(19, -1, -1):
        p1 = p1 * zs + 1.0 / _FACT[k + 1]
        p2 = p2 * zs + 1.0 / _FACT[k + 2]
    phi1[small] = p1
    phi2[small] = p2
    return phi1, phi2


_FACT = np.array([float(np.prod(np.arange(1, k + 1))) for k in range(25)])


def _etd2(ops: _Ops, U, h):
    E = ops.E(h)
    phi1, phi2 = ops.phis(h)
    Nn = ops.N_hat(U)
    A = E * U - h * phi1 * Nn
    if not ops.nonlinear:
        return A
    return A - h * phi2 * (ops.N_hat(A) - Nn)


def _picard(ops: _Ops, U, h, tol, max_iter, nodes):
    """Fixed point of V = E(h) U - sum_i w_i E(h - tau_i) N((1 - tau_i/h) U + (tau_i/h) V)."""
    EU = ops.E(h) * U
    if not ops.nonlinear:
        return EU, 1
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    tau = 0.5 * h * (xg + 1.0)
    w = 0.5 * h * wg
    Es = [ops.E(h - ti) for ti in tau]
    scale = max(1.0, ops.l2(U))
    V = EU
    for it in range(1, max_iter + 1):
        acc = np.zeros_like(U)
        for ti, wi, Ei in zip(tau, w, Es):
            acc += wi * Ei * ops.N_hat((1.0 - ti / h) * U + (ti / h) * V)
        Vn = EU - acc
        inc = ops.l2(Vn - V)
        V = Vn
        if not np.isfinite(inc):
            raise NonContraction("Picard iterate is not finite")
        if inc <= tol * scale:
            return V, it
    raise NonContraction(f"no convergence in {max_iter} iterations (last increment {inc:.3e})")


# --- public single-step API ---------------------------------------------------


def semigroup_apply(F: SpectralField, dt: float, p: ModelParams) -> SpectralField:
    """Multiply by exp(-mu (2 pi xi)^2 dt + i beta sign(xi) dt); Nyquist gets the heat factor only."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    g = F.grid
    xi = g.freqs
    sgn = np.sign(xi)
    sgn[g.N // 2] = 0.0
    mult = np.exp(-p.mu * (2.0 * np.pi * xi) ** 2 * dt + 1j * p.beta * sgn * dt)
    mult[0] = 1.0
    return SpectralField(g, F.coeffs * mult)


def nonlinearity(u: RealField, cfg: SolverConfig | None = None) -> RealField:
    dealias = True if cfg is None else cfg.dealias
    ops = _Ops(u.grid, ModelParams(0.0, 1.0), dealias)
    return RealField(u.grid, ops.inv(ops.N_hat(ops.fwd(u.values))))


def picard_step(st: State, dt: float, p: ModelParams, cfg: SolverConfig) -> tuple[State, int]:
    if not dt > 0:
        raise ValueError("dt must be positive")
    ops = _Ops(st.u.grid, p, cfg.dealias, cfg.nonlinear)
    V, it = _picard(ops, ops.fwd(st.u.values), dt, cfg.picard_tol, cfg.picard_max_iter,
                    cfg.duhamel_nodes)
    return State(st.t + dt, RealField(st.u.grid, ops.inv(V))), it


def etd2_step(st: State, dt: float, p: ModelParams, cfg: SolverConfig) -> State:
    if not dt > 0:
        raise ValueError("dt must be positive")
    ops = _Ops(st.u.grid, p, cfg.dealias, cfg.nonlinear)
    V = _etd2(ops, ops.fwd(st.u.values), dt)
    return State(st.t + dt, RealField(st.u.grid, ops.inv(V)))


def default_horizon(u0, cfg: SolverConfig) -> float:
    """T0 = 1/2 (4 C_cal ||u0||_{H^s})^(-2), capped at cfg.T_max."""
    f = u0.u0 if isinstance(u0, InitialData) else u0
    hs = norms(f, cfg.s)["hs"]
    if hs == 0:
        return float(cfg.T_max)
    return float(min(cfg.T_max, 0.5 / (4.0 * cfg.C_cal * hs) ** 2))


def _resolve_dt(u0: InitialData, cfg: SolverConfig) -> float:
    if cfg.dt is not None:
        return float(cfg.dt)
    dt = default_horizon(u0, cfg) / 8.0
    umax = float(np.max(np.abs(u0.u0.values)))
    if umax > 0:
        dt = min(dt, cfg.cfl * u0.grid.dx / umax)
    return float(min(dt, cfg.T))


def _schedule(T, dt, save_times, save_every):
    """Yield (h, save) pairs covering [0, T] that land exactly on the save times."""
    if save_times is not None:
        marks = list(save_times)
        if marks[-1] < T:
            marks.append(T)
        t0 = 0.0
        for tm in marks:
            n = max(1, int(np.ceil((tm - t0) / dt - 1e-9)))
            h = (tm - t0) / n
            for i in range(n):
                yield h, i == n - 1, (tm if i == n - 1 else None)
            t0 = tm
    else:
        n = max(1, int(np.ceil(T / dt - 1e-9)))
        h = T / n
        for i in range(n):
            last = i == n - 1
            yield h, last or (i + 1) % save_every == 0, (T if last else None)


def run(u0: InitialData, p: ModelParams, cfg: SolverConfig) -> Trajectory:
    """Integrate from u0 to cfg.T, storing states and per-save diagnostics.

    Diagnostics: l2, hs, linf_dux = max|u_x|, blowup_integral (trapezoid in
    time over every step), energy_residual (over the last step before the
    save; 0 at t=0) and mass.

    Raises BlowupSuspected when ||u||_{H^s} exceeds hs_ceiling * ||u0||_{H^s}
    or when a Picard step fails even after halving; NaNEncountered on a
    non-finite state. Both carry the partial trajectory.
    """
    grid = u0.grid
    ops = _Ops(grid, p, cfg.dealias, cfg.nonlinear)
    dt = _resolve_dt(u0, cfg)
    U = ops.fwd(u0.u0.values)
    hs0 = ops.hs(U, cfg.s)
    traj = Trajectory(grid, p, mass0=u0.mass, hs0=hs0)
    ceiling = cfg.hs_ceiling * hs0 if hs0 > 0 else np.inf

    def step(U, h):
        if cfg.scheme == "etd2":
            return _etd2(ops, U, h)
        try:
            return _picard(ops, U, h, cfg.picard_tol, cfg.picard_max_iter, cfg.duhamel_nodes)[0]
        except NonContraction:
            try:
                V = _picard(ops, U, h / 2, cfg.picard_tol, cfg.picard_max_iter, cfg.duhamel_nodes)[0]
                return _picard(ops, V, h / 2, cfg.picard_tol, cfg.picard_max_iter,
                               cfg.duhamel_nodes)[0]
            except NonContraction as exc:
                raise _PicardFailed(str(exc)) from exc

    def dux_max(U):
        return float(np.max(np.abs(ops.inv(ops.D * U))))

    def record(t, U, integral, resid):
        vals = ops.inv(U)
        traj.states.append(State(t, RealField(grid, vals)))
        d = traj.diagnostics
        d["t"].append(t)
        d["l2"].append(ops.l2(U))
        d["hs"].append(ops.hs(U, cfg.s))
        d["linf_dux"].append(dux_max(U))
        d["blowup_integral"].append(integral)
        d["energy_residual"].append(resid)
        d["mass"].append(float(grid.dx * np.sum(vals)))

    t = 0.0
    integral = 0.0
    g_prev = dux_max(U)
    record(0.0, U, 0.0, 0.0)
    for h, save, t_mark in _schedule(cfg.T, dt, cfg.save_times, cfg.save_every):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                Un = step(U, h)
        except _PicardFailed as exc:
            traj.aborted, traj.abort_reason = True, f"non-contraction: {exc}"
            raise BlowupSuspected(traj.abort_reason, traj) from exc
        t_new = t_mark if t_mark is not None else t + h
        if not np.all(np.isfinite(Un)):
            traj.aborted, traj.abort_reason = True, f"non-finite state at t={t_new:g}"
            raise NaNEncountered(traj.abort_reason, traj)
        g_new = dux_max(Un)
        integral += 0.5 * h * (g_prev + g_new)
        traj.steps += 1
        hs_new = ops.hs(Un, cfg.s)
        over = hs_new > ceiling
        if save or over:
            r0 = ops.energy_rhs(U)[0]
            r1 = ops.energy_rhs(Un)[0]
            dE = 0.5 * (ops.l2(Un) ** 2 - ops.l2(U) ** 2) / h
            record(t_new, Un, integral, abs(dE - 0.5 * (r0 + r1)))
        U, t, g_prev = Un, t_new, g_new
        if over:
            traj.aborted = True
            traj.abort_reason = f"H^s norm {hs_new:.3e} exceeded ceiling {ceiling:.3e} at t={t:g}"
            raise BlowupSuspected(traj.abort_reason, traj)
    return traj


class _PicardFailed(Exception):
    pass


def energy_residual(s1: State, s2: State, p: ModelParams, nonlinear: bool = True) -> float:
    """|d/dt 1/2||u||^2 - RHS| with RHS = 1/2 int (Hu)^2 u_x - mu ||u_x||^2.

    The time derivative is the difference quotient over [s1.t, s2.t] and the
    right-hand side is averaged with the trapezoid rule; both are O(dt^2)
    accurate, so the residual is O(dt^2) for smooth solutions.
    """
    if not s2.t > s1.t:
        raise ValueError("states must be in increasing time order")
    ops = _Ops(s1.u.grid, p, dealias=False, nonlinear=nonlinear)
    U1, U2 = ops.fwd(s1.u.values), ops.fwd(s2.u.values)
    dE = 0.5 * (ops.l2(U2) ** 2 - ops.l2(U1) ** 2) / (s2.t - s1.t)
    return float(abs(dE - 0.5 * (ops.energy_rhs(U1)[0] + ops.energy_rhs(U2)[0])))


def blowup_monitor(traj: Trajectory, growth: float = 10.0) -> dict:
    """Check the blow-up criterion on a trajectory.

    For a completed run the verdict is ``consistent`` when the time integral of
    max|u_x| and the H^s norm are both finite. For a run aborted at the H^s
    ceiling it is ``consistent`` when both quantities grew by at least
    ``growth`` over the final quarter of the run; otherwise ``inconclusive``.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    t = traj.series("t")
    integ = traj.series("blowup_integral")
    hs = traj.series("hs")
    integral, hs_max = float(integ[-1]), float(np.max(hs))
    out = {"integral": integral, "hs_max": hs_max}
    if not traj.aborted:
        ok = np.isfinite(integral) and np.isfinite(hs_max)
        out.update(verdict="consistent" if ok else "inconclusive",
                   integral_growth=float("nan"), hs_growth=float("nan"))
        return out
    t_q = t[0] + 0.75 * (t[-1] - t[0])
    i = int(np.searchsorted(t, t_q, side="right")) - 1
    i = max(0, min(i, len(t) - 1))
    ig = integral / integ[i] if integ[i] > 0 else np.inf
    hg = hs[-1] / hs[i] if hs[i] > 0 else np.inf
    both = ig >= growth and hg >= growth
    out.update(verdict="consistent" if both else "inconclusive",
               integral_growth=float(ig), hs_growth=float(hg))
    return out
