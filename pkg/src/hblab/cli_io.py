"""Run configuration (YAML), snapshot files and named presets.

Config format: one YAML mapping, ``version: 1``. Sections and keys::

    model:    beta, mu
    grid:     L, N
    data:     kind, C0, gamma, amplitude, width, center, mass, seed, k
    solver:   scheme, dt, T, picard_tol, picard_max_iter, duhamel_nodes, s, C_cal,
              dealias, nonlinear, hs_ceiling
    outputs:  save_every, save_times, snapshot_dir, csv_path
    analysis: windows, times, gamma_for_gcheck

The flat shorthand ``{beta, mu, L, N, data: gaussian}`` is accepted and
expanded into sections. Unknown keys are rejected.

Snapshot format (little-endian)::

    magic   6 bytes  b"HBLAB1"
    version u32
    N       u64
    L, t, beta, mu   f64 each
    payload N x f64  values of u on x_j = -L + j 2L/N
"""

from __future__ import annotations

import copy
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .solver import InitialData, ModelParams, SolverConfig, State, make_initial
from .spectral_core import Grid, RealField

__all__ = [
    "ConfigError",
    "SnapshotError",
    "RunConfig",
    "Snapshot",
    "CONFIG_VERSION",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "parse_config",
    "load_config",
    "dump_config",
    "write_snapshot",
    "read_snapshot",
    "PRESETS",
    "preset_config",
]

CONFIG_VERSION = 1
SNAPSHOT_MAGIC = b"HBLAB1"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<6sIQdddd")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class SnapshotError(ValueError):
    pass


DEFAULTS = {
    "version": CONFIG_VERSION,
    "model": {"beta": 1.0, "mu": 1.0},
    "grid": {"L": 500.0, "N": 16384},
    "data": {"kind": "gaussian", "C0": 1.0, "gamma": 1.0, "amplitude": 1.0, "width": 1.0,
             "center": 0.0, "mass": None, "seed": 1e-6, "k": 1},
    "solver": {"scheme": "etd2", "dt": None, "T": 1.0, "picard_tol": 1e-12,
               "picard_max_iter": 50, "duhamel_nodes": 4, "s": 2.0, "C_cal": 1.0,
               "dealias": True, "nonlinear": True, "hs_ceiling": 1e3},
    "outputs": {"save_every": 1, "save_times": None, "snapshot_dir": "snapshots",
                "csv_path": None},
    "analysis": {"windows": [[50.0, 200.0]], "times": [], "gamma_for_gcheck": None},
}

_FLAT = {"beta": "model", "mu": "model", "L": "grid", "N": "grid"}
_DATA_KINDS = ("gaussian", "odd_gaussian", "algebraic", "cosine", "two_mode")


@dataclass(frozen=True)
class RunConfig:
    model: dict
    grid: dict
    data: dict
    solver: dict
    outputs: dict
    analysis: dict
    version: int = CONFIG_VERSION
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def model_params(self) -> ModelParams:
        return ModelParams(self.model["beta"], self.model["mu"])

    def make_grid(self) -> Grid:
        return Grid(self.grid["L"], self.grid["N"])

    def initial_data(self) -> InitialData:
        d = dict(self.data)
        kind = d.pop("kind")
        return make_initial(self.make_grid(), kind, **d)

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            dt=s["dt"], T=s["T"], scheme=s["scheme"], picard_tol=s["picard_tol"],
            picard_max_iter=s["picard_max_iter"], duhamel_nodes=s["duhamel_nodes"],
            dealias=s["dealias"], s=s["s"], C_cal=s["C_cal"], nonlinear=s["nonlinear"],
            hs_ceiling=s["hs_ceiling"], save_every=self.outputs["save_every"],
            save_times=self.outputs["save_times"],
        )

    def to_dict(self) -> dict:
        return copy.deepcopy({"version": self.version, "model": self.model, "grid": self.grid,
                              "data": self.data, "solver": self.solver, "outputs": self.outputs,
                              "analysis": self.analysis})


def _expand_flat(doc: dict) -> dict:
    out = {}
    for k, v in doc.items():
        if k in _FLAT:
            out.setdefault(_FLAT[k], {})
            if not isinstance(out[_FLAT[k]], dict):
                raise ConfigError(_FLAT[k], "expected a mapping")
            out[_FLAT[k]][k] = v
        elif k == "data" and isinstance(v, str):
            out.setdefault("data", {})["kind"] = v
        else:
            if k in out and isinstance(out[k], dict) and isinstance(v, dict):
                out[k].update(v)
            else:
                out[k] = v
    return out


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        p = f"{path}.{k}" if path else str(k)
        if k not in defaults:
            raise ConfigError(p, "unknown key")
        if isinstance(defaults[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(p, "expected a mapping")
            out[k] = _merge(defaults[k], v, p)
        else:
            out[k] = v
    return out


def _num(cfg, sec, key, kind=float, allow_none=False):
    v = cfg[sec][key]
    p = f"{sec}.{key}"
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(p, f"expected a number, got {v!r}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(p, f"expected an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
        if not np.isfinite(v):
            raise ConfigError(p, "must be finite")
    cfg[sec][key] = v
    return v


def _validate(cfg: dict) -> dict:
    if cfg["version"] != CONFIG_VERSION:
        raise ConfigError("version", f"unsupported config version {cfg['version']!r}")
    beta = _num(cfg, "model", "beta")
    mu = _num(cfg, "model", "mu")
    if not mu > 0:
        raise ConfigError("model.mu", "viscosity must satisfy mu > 0")
    L = _num(cfg, "grid", "L")
    N = _num(cfg, "grid", "N", int)
    try:
        Grid(L, N)
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    d = cfg["data"]
    if d["kind"] not in _DATA_KINDS:
        raise ConfigError("data.kind", f"must be one of {', '.join(_DATA_KINDS)}")
    for key in ("C0", "gamma", "amplitude", "width", "center", "seed"):
        _num(cfg, "data", key)
    _num(cfg, "data", "k", int)
    _num(cfg, "data", "mass", allow_none=True)
    if d["kind"] == "algebraic" and not d["gamma"] > 0:
        raise ConfigError("data.gamma", "algebraic data require gamma > 0 "
                          "(decay rate (1+|x|)^(-1-gamma) with gamma > 0)")
    if d["kind"] in ("gaussian", "odd_gaussian") and not d["width"] > 0:
        raise ConfigError("data.width", "must be positive")
    s = cfg["solver"]
    if s["scheme"] not in ("picard", "etd2"):
        raise ConfigError("solver.scheme", "must be 'picard' or 'etd2'")
    _num(cfg, "solver", "dt", allow_none=True)
    T = _num(cfg, "solver", "T")
    _num(cfg, "solver", "picard_tol")
    _num(cfg, "solver", "picard_max_iter", int)
    _num(cfg, "solver", "duhamel_nodes", int)
    sob = _num(cfg, "solver", "s")
    _num(cfg, "solver", "C_cal")
    _num(cfg, "solver", "hs_ceiling")
    for key in ("dealias", "nonlinear"):
        if not isinstance(s[key], bool):
            raise ConfigError(f"solver.{key}", "expected true or false")
    if not sob > 1.5:
        raise ConfigError("solver.s", f"Sobolev index must satisfy s > 3/2, got {sob}")
    o = cfg["outputs"]
    _num(cfg, "outputs", "save_every", int)
    if o["save_times"] is not None:
        if not isinstance(o["save_times"], list):
            raise ConfigError("outputs.save_times", "expected a list of times")
        o["save_times"] = [float(v) for v in o["save_times"]]
    a = cfg["analysis"]
    wins = a["windows"]
    if not isinstance(wins, list) or any(not isinstance(w, list) or len(w) != 2 for w in wins):
        raise ConfigError("analysis.windows", "expected a list of [x_lo, x_hi] pairs")
    for i, (lo, hi) in enumerate(wins):
        if not (1.0 <= lo < hi <= 0.4 * L):
            raise ConfigError(f"analysis.windows[{i}]", f"need 1 <= x_lo < x_hi <= 0.4 L = {0.4 * L:g}")
    a["windows"] = [[float(lo), float(hi)] for lo, hi in wins]
    if not isinstance(a["times"], list):
        raise ConfigError("analysis.times", "expected a list of times")
    a["times"] = [float(v) for v in a["times"]]
    _num(cfg, "analysis", "gamma_for_gcheck", allow_none=True)
    try:
        ModelParams(beta, mu)
        SolverConfig(dt=s["dt"], T=T, scheme=s["scheme"], picard_tol=s["picard_tol"],
                     picard_max_iter=s["picard_max_iter"], duhamel_nodes=s["duhamel_nodes"],
                     s=sob, C_cal=s["C_cal"], hs_ceiling=s["hs_ceiling"],
                     save_every=o["save_every"], save_times=o["save_times"])
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from None
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"YAML parse error: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("", "config must be a mapping")
    cfg = _validate(_merge(DEFAULTS, _expand_flat(doc)))
    return RunConfig(cfg["model"], cfg["grid"], cfg["data"], cfg["solver"], cfg["outputs"],
                     cfg["analysis"], cfg["version"], raw=doc)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


# --- snapshots ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Snapshot:
    N: int
    L: float
    t: float
    beta: float
    mu: float
    values: np.ndarray
    version: int = SNAPSHOT_VERSION

    def state(self) -> State:
        return State(self.t, RealField(Grid(self.L, self.N), self.values))

    @classmethod
    def from_state(cls, st: State, p: ModelParams) -> "Snapshot":
        return cls(st.u.grid.N, st.u.grid.L, st.t, p.beta, p.mu, np.asarray(st.u.values))


def write_snapshot(path, snap: Snapshot) -> None:
    vals = np.ascontiguousarray(snap.values, dtype="<f8")
    if vals.shape != (snap.N,):
        raise SnapshotError(f"payload has {vals.size} values, header says {snap.N}")
    head = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, snap.N, snap.L, snap.t, snap.beta, snap.mu)
    Path(path).write_bytes(head + vals.tobytes())


def read_snapshot(path) -> Snapshot:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path}: truncated header")
    magic, version, N, L, t, beta, mu = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    payload = raw[_HEADER.size:]
    if len(payload) != 8 * N:
        raise SnapshotError(f"{path}: payload has {len(payload)} bytes, expected {8 * N}")
    vals = np.frombuffer(payload, dtype="<f8").astype(float)
    return Snapshot(int(N), L, t, beta, mu, vals, version)


# --- presets ------------------------------------------------------------------

_PI = float(np.pi)

PRESETS = {
    "decay-demo": {
        "description": "Mass-1 Gaussian, beta=1, mu=1, L=1000, N=2^16, T=2: 1/x tail slope "
                       "and the weighted decay quantity g(t).",
        "command": "solve",
        "config": {"model": {"beta": 1.0, "mu": 1.0}, "grid": {"L": 1000.0, "N": 65536},
                   "data": {"kind": "gaussian", "mass": 1.0}, "solver": {"T": 2.0},
                   "outputs": {"save_times": [0.5, 1.0, 1.5, 2.0]},
                   "analysis": {"windows": [[50.0, 200.0]], "times": [0.5, 1.5],
                                "gamma_for_gcheck": 1.0}},
    },
    "profile-demo": {
        "description": "Same Gaussian run to t=pi: tail amplitude against -sin(beta t) M0 / pi "
                       "at pi/4, pi/2, 3pi/4 and the node t=pi.",
        "command": "solve",
        "config": {"model": {"beta": 1.0, "mu": 1.0}, "grid": {"L": 1000.0, "N": 65536},
                   "data": {"kind": "gaussian", "mass": 1.0}, "solver": {"T": _PI},
                   "outputs": {"save_times": [_PI / 4, _PI / 2, 3 * _PI / 4, _PI]},
                   "analysis": {"windows": [[50.0, 200.0]],
                                "times": [_PI / 4, _PI / 2, 3 * _PI / 4, _PI]}},
    },
    "beta-zero-contrast": {
        "description": "Heat-kernel contrast: the profile-demo datum with beta=0, where the "
                       "tail decays faster than any power (use sweep over beta in {0, 1}).",
        "command": "solve",
        "config": {"model": {"beta": 0.0, "mu": 1.0}, "grid": {"L": 1000.0, "N": 65536},
                   "data": {"kind": "gaussian", "mass": 1.0}, "solver": {"T": _PI / 2},
                   "outputs": {"save_times": [_PI / 2]},
                   "analysis": {"windows": [[50.0, 200.0]], "times": [_PI / 2]}},
    },
    "gamma-ladder": {
        "description": "Algebraic data C0 (2(1+x^2))^(-(1+gamma)/2), gamma=0.5; the decay "
                       "constant with weight (1+|x|)^min(1,gamma) (sweep over gamma).",
        "command": "solve",
        "config": {"model": {"beta": 1.0, "mu": 1.0}, "grid": {"L": 1000.0, "N": 32768},
                   "data": {"kind": "algebraic", "C0": 1.0, "gamma": 0.5}, "solver": {"T": 2.0},
                   "outputs": {"save_times": [0.5, 1.0, 1.5, 2.0]},
                   "analysis": {"windows": [[50.0, 200.0]], "times": [1.0],
                                "gamma_for_gcheck": 0.5}},
    },
    "blowup-watch": {
        "description": "Large two-mode datum 20 cos(2x) + 1e-6 cos(x) on [-pi, pi): mode 1 "
                       "grows until the H^s ceiling aborts the run.",
        "command": "solve",
        "config": {"model": {"beta": 1.0, "mu": 0.1}, "grid": {"L": _PI, "N": 16},
                   "data": {"kind": "two_mode", "amplitude": 20.0, "seed": 1e-6, "k": 1},
                   "solver": {"T": 10.0, "dt": 1e-3}, "outputs": {"save_every": 1},
                   "analysis": {"windows": [], "times": []}},
    },
    "kernel-cert": {
        "description": "Closed-form kernel K, HK, dK against the quadrature oracle on the "
                       "20 x 20 (t, x) grid for (beta, mu) in {(1,1), (3,0.5), (0,1)}.",
        "command": "kernel-table",
        "params": [[1.0, 1.0], [3.0, 0.5], [0.0, 1.0]],
        "t_grid": [1e-2, 10.0, 20],
        "x_grid": [1e-2, 200.0, 19],
    },
}


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    pre = PRESETS[name]
    if pre["command"] != "solve":
        raise ConfigError("preset", f"preset {name!r} is run by '{pre['command']}', not 'solve'")
    return parse_config(yaml.safe_dump(pre["config"]))
