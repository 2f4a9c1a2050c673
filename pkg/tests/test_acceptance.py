"""Acceptance criteria 1-11, each at its stated tolerance and runtime budget.

Every criterion prints one PASS/FAIL line in the "acceptance criteria"
section of the pytest terminal summary. Expensive solver runs are shared
through module-scoped fixtures; their wall time is charged to every
criterion that uses them.
"""

import time
import warnings

import numpy as np
import pytest

from conftest import criterion
from hblab.analysis import (
    SkippedNearNode,
    decay_check,
    decay_drift,
    g_series,
    gronwall_mass,
    phi,
    tail_fit,
    weighted_diagnostics,
)
from hblab.cli_io import PRESETS, preset_config
from hblab.kernel import KernelParams, check_bounds, evaluate, tail_constant
from hblab.solver import (
    BlowupSuspected,
    ModelParams,
    SolverConfig,
    State,
    blowup_monitor,
    default_horizon,
    make_initial,
    picard_step,
    run,
    semigroup_apply,
)
from hblab.spectral_core import Grid, fft_forward, fft_inverse, norms

PI = np.pi
P11 = ModelParams(1.0, 1.0)
KERNEL_PAIRS = [(1.0, 1.0), (3.0, 0.5), (0.0, 1.0)]
PROFILE_TIMES = (PI / 4, PI / 2, 3 * PI / 4)
WINDOW = (50.0, 200.0)

# every trajectory produced here, for the "all runs" clauses of criteria 4 and 9
RUNS = {}


def _timed(name, fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def _register(name, traj, initial):
    RUNS[name] = (traj, initial)
    return traj


def _l2(a, b, dx):
    return float(np.sqrt(dx * np.sum((a - b) ** 2)))


# --- shared runs -----------------------------------------------------------------


@pytest.fixture(scope="module")
def gaussian_1000():
    """Mass-1 Gaussian, beta=1, mu=1, L=1000, N=2^16, saved on the grids of criteria 6-8, to t=pi."""
    g = Grid(1000.0, 2**16)
    d = make_initial(g, "gaussian", mass=1.0)
    ts = tuple(sorted({0.5, 1.0, 1.5, 2.0, *PROFILE_TIMES, PI}))
    traj, secs = _timed("gaussian_1000", lambda: run(d, P11, SolverConfig(T=PI, save_times=ts)))
    return _register("gaussian_L1000", traj, d), d, secs


@pytest.fixture(scope="module")
def gaussian_500():
    g = Grid(500.0, 2**15)
    d = make_initial(g, "gaussian", mass=1.0)
    cfg = SolverConfig(T=PI / 2, save_times=(PI / 2,))
    traj, secs = _timed("gaussian_500", lambda: run(d, P11, cfg))
    return _register("gaussian_L500", traj, d), d, secs


def _odd_run(L, N):
    d = make_initial(Grid(L, N), "odd_gaussian")
    cfg = SolverConfig(T=PI / 2, save_times=(PI / 4, PI / 2))
    traj, secs = _timed(f"odd_{L}", lambda: run(d, P11, cfg))
    return _register(f"odd_L{int(L)}", traj, d), d, secs


@pytest.fixture(scope="module")
def odd_1000():
    return _odd_run(1000.0, 2**16)


@pytest.fixture(scope="module")
def odd_500():
    return _odd_run(500.0, 2**15)


@pytest.fixture(scope="module")
def algebraic_pair():
    ts = tuple(np.round(np.arange(1, 21) * 0.1, 10))
    out, total = {}, 0.0
    for N in (2**15, 2**16):
        d = make_initial(Grid(1000.0, N), "algebraic", C0=1.0, gamma=0.5)
        traj, secs = _timed(f"alg_{N}", lambda: run(d, P11, SolverConfig(T=2.0, save_times=ts)))
        out[N] = _register(f"algebraic_N{N}", traj, d)
        total += secs
    return out, total


@pytest.fixture(scope="module")
def benchmark():
    """Small Gaussian benchmark: beta=1, mu=0.1, amplitude 0.5, L=200."""
    p = ModelParams(1.0, 0.1)

    def datum(N):
        return make_initial(Grid(200.0, N), "gaussian", amplitude=0.5)

    return p, datum


# --- criteria ----------------------------------------------------------------------


class TestAcceptance:
    def test_c01_kernel_certification(self):
        pre = PRESETS["kernel-cert"]
        ts = np.geomspace(*pre["t_grid"][:2], int(pre["t_grid"][2]))
        xs = np.concatenate([[0.0], np.geomspace(*pre["x_grid"][:2], int(pre["x_grid"][2]))])
        assert [list(p) for p in KERNEL_PAIRS] == pre["params"] and ts.size == xs.size == 20
        with criterion(1, "kernel closed forms vs quadrature oracle") as info:
            start = time.perf_counter()
            worst, worst_rel = 0.0, 0.0
            for beta, mu in KERNEL_PAIRS:
                p = KernelParams(beta, mu)
                for t in ts:
                    for x in np.concatenate([xs, -xs[1:]]):
                        c = evaluate(t, x, p, "closed_form")
                        o = evaluate(t, x, p, "oracle")
                        for k in ("value_K", "value_HK", "value_dK"):
                            cv, ov = getattr(c, k), getattr(o, k)
                            tol = 1e-8 * abs(ov) + 1e-12
                            worst = max(worst, abs(cv - ov) / tol)
                            if abs(ov) > 1e-6:
                                worst_rel = max(worst_rel, abs(cv - ov) / abs(ov))
            secs = time.perf_counter() - start
            info["detail"] = f"max |err|/(1e-8|o|+1e-12) = {worst:.3g}, max rel (|o|>1e-6) = {worst_rel:.2g}"
            assert worst <= 1.0, info["detail"]
            assert secs <= 60.0, f"runtime {secs:.1f}s"

    def test_c02_kernel_tail_law(self):
        with criterion(2, "kernel 1/x tail law") as info:
            start = time.perf_counter()
            p = KernelParams(1.0, 1.0)
            mid = tail_constant(PI / 2, p, window=(50, 400))
            node = tail_constant(PI, p, window=(50, 400))
            heat = tail_constant(PI / 2, KernelParams(0.0, 1.0), window=(50, 400))
            pred = -np.sin(PI / 2) / PI
            info["detail"] = (f"slope(pi/2) = {mid.slope:.4f}, amp gap = {abs(mid.amplitude / pred - 1):.2e}, "
                              f"slope(pi) = {node.slope}, slope(beta=0) = {heat.slope}")
            assert abs(mid.slope + 1.0) <= 0.03
            assert abs(mid.amplitude - pred) <= 0.02 * abs(pred)
            assert node.slope <= -2.0
            assert heat.slope < -4.0
            assert time.perf_counter() - start <= 30.0

    def test_c03_kernel_sup_bound(self):
        with criterion(3, "kernel sup constant stable under x-range doubling") as info:
            start = time.perf_counter()
            ts = np.geomspace(1e-2, 10, 60)
            gaps = []
            for beta, mu in KERNEL_PAIRS:
                p = KernelParams(beta, mu)
                q = [check_bounds(p, ts, np.concatenate([[0.0], np.geomspace(1e-3, X, 2000)])).sup_Q
                     for X in (500.0, 1000.0)]
                assert np.all(np.isfinite(q))
                gaps.append(abs(q[1] - q[0]) / q[0])
            info["detail"] = "relative change " + ", ".join(f"{g:.1e}" for g in gaps)
            assert max(gaps) < 0.01
            assert time.perf_counter() - start <= 60.0

    def test_c04_exact_structure(self, gaussian_1000, gaussian_500, odd_1000, odd_500,
                                 algebraic_pair, benchmark):
        with criterion(4, "exact-structure solver tests") as info:
            start = time.perf_counter()
            # (a) single cosine: N(u) = 0 and the mode rotates and decays
            g = Grid(PI, 64)
            p = ModelParams(1.0, 0.1)
            d = make_initial(g, "cosine", amplitude=1.5, k=3)
            errs_a = []
            for scheme in ("etd2", "picard"):
                tr = _register(f"cosine_{scheme}", run(d, p, SolverConfig(dt=0.01, T=1.0, scheme=scheme)), d)
                exact = 1.5 * np.exp(-p.mu * 9.0) * np.cos(3 * g.x + p.beta)
                errs_a.append(np.max(np.abs(tr.states[-1].u.values - exact)))
            # (c) linear runs equal one semigroup application for any dt
            pb, datum = benchmark
            d0 = datum(2**13)
            once = fft_inverse(semigroup_apply(fft_forward(d0.u0), 1.0, pb)).values
            errs_c = []
            for dt in (0.5, 0.1, 0.037, 0.01):
                tr = run(d0, pb, SolverConfig(dt=dt, T=1.0, nonlinear=False))
                _register(f"linear_dt{dt}", tr, d0)
                errs_c.append(np.max(np.abs(tr.states[-1].u.values - once)) / np.max(np.abs(once)))
            # (b) mass on every run of this module so far
            drift = max(float(np.max(np.abs(tr.series("mass") - ini.mass))) for tr, ini in RUNS.values())
            info["detail"] = (f"cosine err {max(errs_a):.1e}, linear vs semigroup {max(errs_c):.1e}, "
                              f"mass drift {drift:.1e} over {len(RUNS)} runs")
            assert max(errs_a) <= 1e-10
            assert max(errs_c) <= 1e-13
            assert drift <= 1e-10
            assert time.perf_counter() - start <= 60.0

    def test_c05_convergence_orders(self, benchmark):
        with criterion(5, "ETD2 and Picard second order, Picard iterations") as info:
            start = time.perf_counter()
            p, datum = benchmark
            d = datum(2**13)
            T = 1.0
            orders = {}
            for scheme in ("etd2", "picard"):
                ref = run(d, p, SolverConfig(dt=T / 1024, T=T, scheme=scheme)).states[-1].u.values
                errs = []
                for n in (8, 16, 32):
                    tr = _register(f"order_{scheme}_{n}", run(d, p, SolverConfig(dt=T / n, T=T, scheme=scheme)), d)
                    errs.append(_l2(tr.states[-1].u.values, ref, d.grid.dx))
                orders[scheme] = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
            cfg = SolverConfig()
            dt = default_horizon(d, cfg) / 8
            st, iters = State(0.0, d.u0), []
            for _ in range(10):
                st, it = picard_step(st, dt, p, cfg)
                iters.append(it)
            info["detail"] = (f"etd2 {np.round(orders['etd2'], 3).tolist()}, picard "
                              f"{np.round(orders['picard'], 3).tolist()}, Picard iters <= {max(iters)}")
            for o in orders.values():
                assert np.all(np.abs(o - 2.0) <= 0.2)
            assert max(iters) <= 8
            assert time.perf_counter() - start <= 300.0

    def test_c06_decay_law(self, gaussian_1000, algebraic_pair):
        traj, d, secs_g = gaussian_1000
        alg, secs_a = algebraic_pair
        with criterion(6, "tail slope, bounded g(t), grid-stable decay constant",
                       extra_seconds=secs_g + secs_a) as info:
            slopes = []
            for t in (0.5, 1.5):
                assert abs(np.sin(t)) >= 0.3
                slopes.append(tail_fit(traj.state_at(t).u, WINDOW, "symmetric").slope)
            gs = g_series(traj, np.inf)
            r15, r16 = decay_check(alg[2**15], 0.5), decay_check(alg[2**16], 0.5)
            drift = decay_drift(r15, r16)
            ga = g_series(alg[2**16], 0.5)
            info["detail"] = (f"slopes {np.round(slopes, 4).tolist()}, g bounded {gs.bounded} "
                              f"(max {gs.g.max():.3f}), C1(gamma=0.5) = {r16.C1:.5f}, drift {drift:.1e}")
            assert all(abs(s + 1.0) <= 0.1 for s in slopes)
            assert gs.bounded and ga.bounded
            assert np.isfinite(r16.C1) and drift <= 0.05
            assert secs_g + secs_a <= 600.0

    def test_c07_tail_amplitude(self, gaussian_1000, odd_1000):
        traj, d, secs_g = gaussian_1000
        otraj, od, secs_o = odd_1000
        with criterion(7, "1/x tail amplitude -sin(beta t) M0 / pi", extra_seconds=secs_g + secs_o) as info:
            start = time.perf_counter()
            hs_sup = float(np.max(traj.series("hs")))
            gaps, corr = [], []
            for t in PROFILE_TIMES:
                r = phi(traj, d.mass, P11, t, WINDOW)
                assert r.status == "compared"
                gaps.append(r.relative_gap)
                corr.append(abs(r.nonlinear_correction))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SkippedNearNode)
                node = phi(traj, d.mass, P11, PI, WINDOW)
            oz = phi(otraj, od.mass, P11, PI / 2, WINDOW)
            oslope = tail_fit(otraj.state_at(PI / 2).u, WINDOW, "symmetric").slope
            info["detail"] = (f"gaps {np.round(gaps, 4).tolist()}, correction {max(corr):.1e}, "
                              f"|amp(pi)| {abs(node.measured_amplitude):.1e}, odd amp "
                              f"{abs(oz.measured_amplitude):.1e} slope {oslope:.2f}")
            assert max(gaps) <= 0.05
            assert max(corr) <= 1e-8 * (1.0 + hs_sup**2)
            assert abs(node.measured_amplitude) <= 1e-3
            assert oz.status == "zero_mass" and abs(oz.measured_amplitude) <= 1e-3
            assert oslope <= -1.5
            assert time.perf_counter() - start + secs_g + secs_o <= 600.0

    def test_c08_weighted_dichotomy(self, gaussian_1000, gaussian_500, odd_1000, odd_500):
        secs = sum(f[2] for f in (gaussian_1000, gaussian_500, odd_1000, odd_500))
        with criterion(8, "|| |x| u ||_2 grows like sqrt(L) only with mass", extra_seconds=secs) as info:
            def xu(traj):
                w = weighted_diagnostics(traj)
                return float(w["xu_l2"][np.argmin(np.abs(w["t"] - PI / 2))])

            ratio_m = xu(gaussian_1000[0]) / xu(gaussian_500[0])
            ratio_0 = xu(odd_1000[0]) / xu(odd_500[0])
            info["detail"] = f"mass-1 ratio {ratio_m:.5f} (sqrt 2 = 1.41421), zero-mass ratio {ratio_0:.5f}"
            assert abs(ratio_m - np.sqrt(2)) <= 0.1 * np.sqrt(2)
            assert abs(ratio_0 - 1.0) <= 0.05
            assert secs <= 600.0

    def test_c09_blowup_criterion(self, gaussian_1000, gaussian_500, odd_1000, odd_500, algebraic_pair):
        with criterion(9, "blow-up criterion consistency") as info:
            start = time.perf_counter()
            verdicts = {name: blowup_monitor(tr)["verdict"] for name, (tr, _) in RUNS.items()}
            cfg = preset_config("blowup-watch")
            with pytest.raises(BlowupSuspected) as ei:
                run(cfg.initial_data(), cfg.model_params(), cfg.solver_config())
            traj = ei.value.trajectory
            mon = blowup_monitor(traj)
            info["detail"] = (f"{sum(v == 'consistent' for v in verdicts.values())}/{len(verdicts)} completed runs "
                              f"consistent; abort at t={traj.times[-1]:.3f}, growth in final quarter "
                              f"integral x{mon['integral_growth']:.0f}, H^s x{mon['hs_growth']:.0f}")
            assert all(v == "consistent" for v in verdicts.values())
            assert "ceiling" in traj.abort_reason
            assert mon["verdict"] == "consistent"
            assert mon["integral_growth"] >= 10 and mon["hs_growth"] >= 10
            assert time.perf_counter() - start <= 300.0

    def test_c10_gronwall_constant(self):
        with criterion(10, "singular Gronwall mass equals pi") as info:
            start = time.perf_counter()
            val = gronwall_mass()
            secs = time.perf_counter() - start
            info["detail"] = f"|value - pi| = {abs(val - PI):.1e} in {secs * 1e3:.1f} ms"
            assert abs(val - PI) <= 1e-10
            assert secs <= 1.0

    def test_c11_uniqueness_proxy(self, benchmark):
        with criterion(11, "resolution and scheme independence of the endpoint") as info:
            start = time.perf_counter()
            p, datum = benchmark
            ends = {}
            for N in (2**13, 2**14):
                d = datum(N)
                for scheme in ("etd2", "picard"):
                    tr = _register(f"unique_{N}_{scheme}", run(d, p, SolverConfig(T=1.0, scheme=scheme)), d)
                    v = tr.states[-1].u.values
                    ends[(N, scheme)] = v if N == 2**13 else v[::2]
            dx = datum(2**13).grid.dx
            keys = list(ends)
            gap = max(_l2(ends[a], ends[b], dx) for a in keys for b in keys)
            size = norms(datum(2**13).u0)["l2"]
            info["detail"] = f"max pairwise L2 gap {gap:.1e} (||u0|| = {size:.3f})"
            assert gap <= 1e-5
            assert time.perf_counter() - start <= 300.0


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
