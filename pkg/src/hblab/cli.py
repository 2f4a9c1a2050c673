"""Command-line entry point: ``hblab <subcommand>``.

Output root: ``--out`` if given, else ``$HBLAB_OUT``, else ``./hblab_out``.
Failures print one JSON object ``{"error": ..., "message": ..., "path": ...}``
on stderr and exit with status 2 (bad input) or 3 (run aborted).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import InsufficientTail, decay_check, profile_check, tail_fit
from .cli_io import (
    PRESETS,
    ConfigError,
    RunConfig,
    Snapshot,
    SnapshotError,
    dump_config,
    load_config,
    parse_config,
    preset_config,
    read_snapshot,
    write_snapshot,
)
from .kernel import KernelParams, evaluate
from .quadrature import QuadratureError
from .solver import (
    BlowupSuspected,
    ModelParams,
    NaNEncountered,
    Trajectory,
    blowup_monitor,
    run,
)
from .spectral_core import Grid

KERNEL_COLUMNS = ("t", "x", "K", "HK", "dK", "method", "abs_err_est")
DIAG_KEYS = ("t", "l2", "hs", "linf_dux", "blowup_integral", "mass", "energy_residual")


class CommandError(Exception):
    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path


def _out_root(args) -> Path:
    root = args.out or os.environ.get("HBLAB_OUT") or "hblab_out"
    return Path(root)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


# --- kernel-table -------------------------------------------------------------


def _log_grid(bounds, with_zero):
    lo, hi, n = float(bounds[0]), float(bounds[1]), int(bounds[2])
    pts = np.geomspace(lo, hi, n)
    return np.concatenate([[0.0], pts]) if with_zero else pts


def kernel_rows(params, ts, xs, methods):
    for beta, mu in params:
        p = KernelParams(beta, mu)
        for t in ts:
            for x in xs:
                for m in methods:
                    e = evaluate(t, x, p, m)
                    yield {"beta": beta, "mu": mu, "t": e.t, "x": e.x, "K": e.value_K,
                           "HK": e.value_HK, "dK": e.value_dK, "method": e.method,
                           "abs_err_est": e.abs_err_est}


def cmd_kernel_table(args):
    if args.preset:
        pre = PRESETS.get(args.preset)
        if pre is None or pre["command"] != "kernel-table":
            raise CommandError(f"preset {args.preset!r} is not a kernel-table preset", "preset")
        params = pre["params"]
        ts = _log_grid(pre["t_grid"], False)
        xs = _log_grid(pre["x_grid"], True)
        methods = ["closed_form", "oracle"]
    else:
        params = [[args.beta, args.mu]]
        ts = np.asarray(args.t, dtype=float) if args.t else _log_grid(args.t_grid, False)
        xs = np.asarray(args.x, dtype=float) if args.x else _log_grid(args.x_grid, True)
        methods = ["closed_form", "oracle"] if args.method == "both" else [args.method]
    cols = KERNEL_COLUMNS if len(params) == 1 else ("beta", "mu") + KERNEL_COLUMNS
    out = _out_root(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (args.csv or "kernel_table.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in kernel_rows(params, ts, xs, methods):
            w.writerow([_fmt(row[c]) for c in cols])
    print(json.dumps({"written": str(path)}))
    return 0


# --- solve ----------------------------------------------------------------------


def _diag_rows(traj: Trajectory):
    d = traj.diagnostics
    for i in range(len(traj)):
        yield {k: float(d[k][i]) for k in DIAG_KEYS}


def _write_run(traj: Trajectory, cfg: RunConfig, outdir: Path, meta: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    snapdir = outdir / cfg.outputs["snapshot_dir"]
    snapdir.mkdir(parents=True, exist_ok=True)
    for i, st in enumerate(traj.states):
        write_snapshot(snapdir / f"snap_{i:05d}.hbl", Snapshot.from_state(st, traj.params))
    with open(outdir / "diagnostics.jsonl", "w") as fh:
        for row in _diag_rows(traj):
            fh.write(json.dumps(row) + "\n")
    (outdir / "config.resolved.yaml").write_text(dump_config(cfg))
    (outdir / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def solve_config(cfg: RunConfig, outdir: Path) -> dict:
    """Run one configuration into ``outdir``; returns a summary dict."""
    u0 = cfg.initial_data()
    p = cfg.model_params()
    scfg = cfg.solver_config()
    t0 = time.time()
    status, message = "completed", ""
    try:
        traj = run(u0, p, scfg)
    except (BlowupSuspected, NaNEncountered) as exc:
        traj = exc.trajectory
        status, message = type(exc).__name__, str(exc)
    mon = blowup_monitor(traj)
    meta = {"version": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "wall_seconds": time.time() - t0,
            "started_unix": t0, "status": status, "message": message,
            "steps": traj.steps, "monitor": mon}
    _write_run(traj, cfg, outdir, meta)
    summary = {"status": status, "message": message, "t_final": float(traj.times[-1]),
               "mass0": u0.mass, "verdict": mon["verdict"], "traj": traj}
    return summary


def cmd_solve(args):
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    else:
        raise CommandError("solve needs --config PATH or --preset NAME", "config")
    name = args.name or (args.preset or Path(args.config).stem)
    outdir = _out_root(args) / name
    res = solve_config(cfg, outdir)
    print(json.dumps({"run_dir": str(outdir), "status": res["status"],
                      "t_final": res["t_final"], "verdict": res["verdict"]}))
    if res["status"] != "completed":
        _emit_error(res["status"], res["message"], "solver")
        return 3
    return 0


# --- snapshot analysis ---------------------------------------------------------


def _collect_snapshots(paths):
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            sub = p / "snapshots" if (p / "snapshots").is_dir() else p
            files.extend(sorted(sub.glob("*.hbl")))
        else:
            files.append(p)
    if not files:
        raise CommandError("no snapshot files found", "snapshots")
    return files


def cmd_tail_fit(args):
    files = _collect_snapshots(args.snapshots)
    out = _out_root(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (args.csv or "tail_fit.csv")
    cols = ("file", "t", "side", "x_lo", "x_hi", "slope", "amplitude", "r2", "n_used", "below_floor")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for f in files:
            st = read_snapshot(f).state()
            if st.t == 0 and args.skip_initial:
                continue
            try:
                fit = tail_fit(st.u, tuple(args.window), args.side)
                row = [f.name, st.t, fit.side, fit.window[0], fit.window[1], fit.slope,
                       fit.amplitude, fit.r2, fit.n_used, fit.below_floor]
            except InsufficientTail as exc:
                row = [f.name, st.t, args.side, args.window[0], args.window[1], "nan", "nan",
                       "nan", 0, f"insufficient: {exc}"]
            w.writerow([_fmt(v) for v in row])
    print(json.dumps({"written": str(path)}))
    return 0


def _trajectory_from_snapshots(files) -> Trajectory:
    snaps = sorted((read_snapshot(f) for f in files), key=lambda s: s.t)
    s0 = snaps[0]
    traj = Trajectory(Grid(s0.L, s0.N), ModelParams(s0.beta, s0.mu))
    for s in snaps:
        if (s.N, s.L, s.beta, s.mu) != (s0.N, s0.L, s0.beta, s0.mu):
            raise CommandError("snapshots come from different runs", "snapshots")
        traj.states.append(s.state())
    return traj


def cmd_profile_check(args):
    files = _collect_snapshots(args.snapshots)
    traj = _trajectory_from_snapshots(files)
    if args.mass is not None:
        M0 = args.mass
    elif traj.states[0].t == 0:
        u0 = traj.states[0].u
        M0 = float(u0.grid.dx * np.sum(u0.values))
    else:
        raise CommandError("no t=0 snapshot; pass --mass", "mass")
    times = args.times or [s.t for s in traj.states if s.t > 0]
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        reps = profile_check(traj, M0, traj.params, times, tuple(args.window),
                             wrap_correction=args.wrap_correction)
    out = _out_root(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (args.csv or "profile_check.csv")
    cols = ("t", "measured_amplitude", "predicted", "nonlinear_correction", "relative_gap",
            "absolute_gap", "status", "passed")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in reps:
            w.writerow([_fmt(getattr(r, c)) for c in cols])
    print(json.dumps({"written": str(path), "mass0": M0}))
    return 0


# --- sweep -----------------------------------------------------------------------


def _sweep_entry(job):
    idx, cfg_dict, outdir, window = job
    cfg = parse_config(yaml.safe_dump(cfg_dict))
    res = solve_config(cfg, Path(outdir))
    traj = res["traj"]
    st = traj.states[-1]
    row = {"index": idx, "beta": cfg.model["beta"], "gamma": cfg.data["gamma"],
           "N": cfg.grid["N"], "L": cfg.grid["L"], "status": res["status"],
           "t_final": st.t, "verdict": res["verdict"]}
    try:
        fit = tail_fit(st.u, window, "symmetric")
        row.update(tail_slope=fit.slope, tail_amplitude=fit.amplitude, below_floor=fit.below_floor)
    except (InsufficientTail, ValueError) as exc:
        row.update(tail_slope=float("nan"), tail_amplitude=float("nan"), below_floor=str(exc))
    g = cfg.data["gamma"] if cfg.data["kind"] == "algebraic" else np.inf
    row["C1"] = decay_check(traj, g).C1
    return row


SWEEP_COLUMNS = ("index", "beta", "gamma", "N", "L", "status", "t_final", "verdict",
                 "tail_slope", "tail_amplitude", "below_floor", "C1")


def cmd_sweep(args):
    if args.preset:
        base = preset_config(args.preset)
    elif args.config:
        base = load_config(args.config)
    else:
        raise CommandError("sweep needs --config PATH or --preset NAME", "config")
    axes = {"beta": args.beta or [base.model["beta"]],
            "gamma": args.gamma or [base.data["gamma"]],
            "N": args.N or [base.grid["N"]],
            "L": args.L or [base.grid["L"]]}
    window = tuple(args.window) if args.window else tuple(base.analysis["windows"][0])
    root = _out_root(args) / (args.name or "sweep")
    jobs = []
    for idx, (b, g, n, L) in enumerate(itertools.product(*axes.values())):
        d = base.to_dict()
        d["model"]["beta"], d["data"]["gamma"], d["grid"]["N"], d["grid"]["L"] = b, g, n, L
        d["analysis"]["windows"] = [list(window)]
        parse_config(yaml.safe_dump(d))  # validate before launching anything
        jobs.append((idx, d, str(root / f"run_{idx:03d}"), window))
    if args.workers <= 1:
        rows = [_sweep_entry(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            rows = list(ex.map(_sweep_entry, jobs))
    rows.sort(key=lambda r: r["index"])
    root.mkdir(parents=True, exist_ok=True)
    path = root / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
    print(json.dumps({"written": str(path), "runs": len(rows)}))
    return 0


# --- presets -----------------------------------------------------------------------


def cmd_presets(args):
    if args.show:
        if args.show not in PRESETS:
            raise CommandError(f"unknown preset {args.show!r}", "preset")
        print(yaml.safe_dump({args.show: PRESETS[args.show]}, sort_keys=False), end="")
        return 0
    for name, pre in PRESETS.items():
        print(f"{name:20s} [{pre['command']}] {pre['description']}")
    return 0


# --- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output root (default $HBLAB_OUT or ./hblab_out)")
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--preset", help="named preset (see 'presets')")
    common.add_argument("--workers", type=int, default=1, help="concurrent runs for sweep")

    ap = argparse.ArgumentParser(prog="hblab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel-table", parents=[common], help="CSV of K, HK, dK")
    k.add_argument("--beta", type=float, default=1.0)
    k.add_argument("--mu", type=float, default=1.0)
    k.add_argument("--t", type=float, nargs="+")
    k.add_argument("--x", type=float, nargs="+")
    k.add_argument("--t-grid", type=float, nargs=3, default=[1e-2, 10.0, 20],
                   metavar=("LO", "HI", "N"), help="log-spaced t grid")
    k.add_argument("--x-grid", type=float, nargs=3, default=[1e-2, 200.0, 19],
                   metavar=("LO", "HI", "N"), help="log-spaced x grid, 0 prepended")
    k.add_argument("--method", choices=("closed_form", "oracle", "both"), default="closed_form")
    k.add_argument("--csv", help="file name inside the output root")
    k.set_defaults(func=cmd_kernel_table)

    s = sub.add_parser("solve", parents=[common], help="run one configuration")
    s.add_argument("--name", help="run directory name inside the output root")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("tail-fit", parents=[common], help="tail fits of snapshots")
    t.add_argument("snapshots", nargs="+", help="snapshot files or run directories")
    t.add_argument("--window", type=float, nargs=2, default=[50.0, 200.0])
    t.add_argument("--side", choices=("left", "right", "symmetric"), default="symmetric")
    t.add_argument("--skip-initial", action="store_true")
    t.add_argument("--csv")
    t.set_defaults(func=cmd_tail_fit)

    pc = sub.add_parser("profile-check", parents=[common], help="1/x amplitude vs prediction")
    pc.add_argument("snapshots", nargs="+", help="snapshot files or a run directory")
    pc.add_argument("--window", type=float, nargs=2, default=[50.0, 200.0])
    pc.add_argument("--times", type=float, nargs="+")
    pc.add_argument("--mass", type=float)
    pc.add_argument("--wrap-correction", action="store_true")
    pc.add_argument("--csv")
    pc.set_defaults(func=cmd_profile_check)

    sw = sub.add_parser("sweep", parents=[common], help="parameter grid over beta, gamma, N, L")
    sw.add_argument("--beta", type=float, nargs="+")
    sw.add_argument("--gamma", type=float, nargs="+")
    sw.add_argument("--N", type=int, nargs="+")
    sw.add_argument("--L", type=float, nargs="+")
    sw.add_argument("--window", type=float, nargs=2)
    sw.add_argument("--name")
    sw.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("presets", parents=[common], help="list named experiments")
    pr.add_argument("--show", metavar="NAME")
    pr.set_defaults(func=cmd_presets)
    return ap


def _emit_error(kind, message, path=""):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "path": path}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        _emit_error("UsageError", "--workers must be >= 1", "workers")
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        _emit_error("ConfigError", exc.message, exc.path)
    except CommandError as exc:
        _emit_error("CommandError", str(exc), exc.path)
    except SnapshotError as exc:
        _emit_error("SnapshotError", str(exc), "snapshots")
    except (OSError, ValueError, QuadratureError) as exc:
        _emit_error(type(exc).__name__, str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
