"""The acceptance suite: eleven end-to-end checks with fixed tolerances.

Each check returns a :class:`Check`; ``run_all`` prints one PASS/FAIL line
per check.  Used by ``tests/test_acceptance.py`` and ``lvcoop verify``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analyze import proportionality_deficit, scaling_residual, universal_bound_statistic
from .coefficients import CoefficientField
from .ensemble import bound_member, generate
from .integrate import StepControls, evolve
from .model import ProblemSpec, proportionality_constant
from .periodic import (PeriodicControls, adjoint_weighted_growth, default_guess,
                       find_periodic_orbit, resimulate)
from .spectral import (adjoint_periodic_eigenpair, discrete_eigenvalue_1d,
                       periodic_linear_solve, principal_eigenvalue)
from .state import State
from .threshold import bisect_threshold


@dataclass
class Check:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    values: dict = field(default_factory=dict)

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f} s)"


def _timed(number, title, fn: Callable[[], tuple]):
    t0 = time.perf_counter()
    passed, detail, values = fn()
    return Check(number, title, bool(passed), detail, time.perf_counter() - t0, values)


# 1 -------------------------------------------------------------------------
RATE_SETS = [(1.0, 1.0, 3.0, 3.0), (0.5, 1.0, 2.0, 3.0), (1.0, 1.5, 2.5, 2.0),
             (1.2, 0.8, 3.0, 2.5), (0.8, 0.8, 1.5, 2.0)]


def check_blowup_rate(n=512, amplitude=40.0):
    def run():
        slopes, drifts = [], []
        for b1, b2, c1, c2 in RATE_SETS:
            spec = ProblemSpec.constant(0.0, 0.0, b1, b2, c1, c2)
            grid = spec.grid(n)
            p = amplitude * np.sin(np.pi * grid.mesh[0])
            T = []
            for ctl in (StepControls(dt_init=1e-4, dt_max=1e-4, theta=0.05),
                        StepControls(dt_init=5e-5, dt_max=5e-5, theta=0.025)):
                out = evolve(spec, grid, State(p, p.copy()), 1.0, ctl)
                if out.kind != "BlowUp" or out.rate_fit is None:
                    return False, f"set {(b1, b2, c1, c2)} did not blow up ({out.kind})", {}
                slopes.append(out.rate_fit.slope)
                T.append(out.T_est)
            drifts.append(abs(T[0] - T[1]) / T[1])
        ok = all(-1.15 <= s <= -0.85 for s in slopes) and max(drifts) < 0.01
        return ok, (f"slopes in [{min(slopes):.4f}, {max(slopes):.4f}], "
                    f"max T_est drift {max(drifts):.2e}"), {"slopes": slopes, "drifts": drifts}
    return _timed(1, "blow-up rate", run)


# 2 -------------------------------------------------------------------------
def check_homogeneous_oracle():
    def run():
        spec = ProblemSpec.constant(0.0, 0.0, 1.0, 1.0, 3.0, 3.0, bc="neumann")
        grid = spec.grid(4)
        one = np.ones(grid.shape)
        ctl = StepControls(dt_init=5e-5, dt_max=5e-5)
        out = evolve(spec, grid, State(one, one.copy()), 1.0, ctl, output_times=(0.4,))
        u = float(np.max(out.trajectory.snapshot_at(0.4).u))
        err = abs(u - 1.0 / (1.0 - 0.8)) / 5.0
        dT = abs(out.T_est - 0.5)
        return (out.kind == "BlowUp" and err < 1e-3 and dT < 5e-3,
                f"rel. error at t=0.4 {err:.2e}, |T_est-0.5| {dT:.2e}", {"err": err, "dT": dT})
    return _timed(2, "homogeneous oracle", run)


# 3 -------------------------------------------------------------------------
def _deficits(out, K):
    return np.array([proportionality_deficit(s, K) for s in out.trajectory.snapshots])


def check_proportionality(runs=10, seed=3):
    def run():
        rng = np.random.default_rng(seed)
        worst_rise, finals = 0.0, []
        ok = True
        for _ in range(runs):
            b1, b2 = rng.uniform(0.5, 1.5, 2)
            c1, c2 = rng.uniform(1.7, 4.0, 2)
            a = rng.uniform(0.0, 0.5)
            K = proportionality_constant(b1, b2, c1, c2)
            while True:
                u0, v0 = rng.uniform(0.5, 3.0, 2)
                if abs(u0 - K * v0) / (u0 + K * v0) > 0.2:
                    break
            spec = ProblemSpec.constant(a, a, b1, b2, c1, c2, bc="neumann")
            grid = spec.grid(2)
            ctl = StepControls(dt_init=1e-4, dt_max=1e-4, snapshot_every=1)
            out = evolve(spec, grid, State(np.full(2, u0), np.full(2, v0)), 10.0, ctl)
            d = _deficits(out, K)
            norms = np.array([float(np.max(s.u + s.v)) for s in out.trajectory.snapshots])
            rise = float(np.max(np.diff(d))) if len(d) > 1 else 0.0
            worst_rise = max(worst_rise, rise)
            below = d[norms <= 1e3]
            finals.append(float(below.min()))
            ok &= out.kind == "BlowUp" and rise <= 1e-14 and below.min() < 0.05
        return ok, (f"max one-step increase {worst_rise:.1e}, worst deficit before "
                    f"norm 1e3: {max(finals):.2e}"), {"finals": finals}
    return _timed(3, "proportionality", run)


# 4 -------------------------------------------------------------------------
MANIFOLD_SETS = [(0.0, 1.0, 1.0, 3.0, 3.0), (0.5, 1.0, 1.0, 3.0, 1.0), (-0.5, 0.5, 1.5, 2.0, 3.0),
                 (1.0, 1.2, 0.7, 2.5, 1.8), (-1.0, 0.6, 0.9, 3.5, 2.2)]


def check_invariant_manifold(n=128, amplitude=30.0):
    def run():
        worst = 0.0
        for a, b1, b2, c1, c2 in MANIFOLD_SETS:
            spec = ProblemSpec.constant(a, a, b1, b2, c1, c2)
            K = proportionality_constant(b1, b2, c1, c2)
            grid = spec.grid(n)
            v0 = amplitude * np.sin(np.pi * grid.mesh[0])
            ctl = StepControls(dt_init=1e-4, dt_max=1e-4, snapshot_every=1)
            out = evolve(spec, grid, State(K * v0, v0), 1.0, ctl)
            worst = max(worst, float(np.max(_deficits(out, K))))
        return worst < 1e-6, f"max deficit {worst:.2e}", {"worst": worst}
    return _timed(4, "invariant manifold", run)


# 5 -------------------------------------------------------------------------
def check_universal_bound(members=32, seed=7, grids=(128, 256)):
    def run():
        ens = generate(seed, members)
        c = {}
        for n in grids:
            rows = [bound_member(m, n) for m in ens]
            c[n] = max(r["c_emp"] for r in rows)
        a, b = (c[g] for g in grids)
        change = abs(b - a) / a
        ok = all(math.isfinite(v) and v > 0 for v in c.values()) and change < 0.10
        return ok, f"C_emp {a:.6g} (N={grids[0]}) vs {b:.6g} (N={grids[1]}), change {change:.2%}", c
    return _timed(5, "universal bound statistic", run)


# 6 -------------------------------------------------------------------------
def check_eigenvalues(n=200):
    def run():
        spec = ProblemSpec.constant()
        grid = spec.grid(n)
        eig = principal_eigenvalue(grid)
        rel_pi = abs(eig.value - math.pi ** 2) / math.pi ** 2
        closed = abs(eig.value - discrete_eigenvalue_1d(n, 1.0))
        per = adjoint_periodic_eigenpair(grid, 1.0)
        rel_t = abs(per.value - eig.value) / eig.value
        ok = rel_pi < 5e-4 and closed < 1e-8 and rel_t < 1e-8 and per.residual < 1e-6
        return ok, (f"|L-pi^2|/pi^2 {rel_pi:.2e}, |L-closed| {closed:.1e}, "
                    f"LT rel {rel_t:.1e}, residual {per.residual:.1e}"), {}
    return _timed(6, "eigenvalues", run)


# 7 -------------------------------------------------------------------------
def check_periodic_linear(n=256, dt=1e-4, period=1.0):
    def run():
        grid = ProblemSpec.constant().grid(n)
        x = grid.mesh[0]
        nt = int(round(period / dt))
        zero = periodic_linear_solve(grid, 0.0, period, nt)
        e0 = float(np.max(np.abs(zero.w)))
        steady = periodic_linear_solve(grid, np.sin(np.pi * x), period, nt)
        e1 = float(np.max(np.abs(steady.w - np.sin(np.pi * x) / math.pi ** 2)))
        om = 2 * math.pi / period
        sol = periodic_linear_solve(grid, lambda x, t: np.sin(np.pi * x) * np.cos(om * t),
                                    period, nt)
        tt = sol.times[:, None]
        exact = (np.sin(np.pi * x)[None, :] * (math.pi ** 2 * np.cos(om * tt) + om * np.sin(om * tt))
                 / (math.pi ** 4 + om ** 2))
        e2 = float(np.max(np.abs(sol.w - exact)))
        rng = np.random.default_rng(5)
        f1, f2 = rng.standard_normal((2, 100) + grid.shape)
        al, be = 0.7, -1.3
        w12 = periodic_linear_solve(grid, al * f1 + be * f2, period, 100).w
        w1 = periodic_linear_solve(grid, f1, period, 100).w
        w2 = periodic_linear_solve(grid, f2, period, 100).w
        lin = float(np.max(np.abs(w12 - (al * w1 + be * w2)))) / float(np.max(np.abs(w12)))
        ok = max(e0, e1, e2) < 1e-3 and lin < 1e-12
        return ok, (f"errors zero {e0:.1e}, steady {e1:.1e}, cos {e2:.1e}; "
                    f"linearity {lin:.1e}"), {}
    return _timed(7, "periodic linear solve", run)


# 8 / 9 ---------------------------------------------------------------------
def periodic_test_problem():
    a = CoefficientField.expression("-1 + 0.5*sin(2*pi*t)", "a1")
    return ProblemSpec.constant(-1.0, -1.0, 1.0, 1.0, 3.0, 3.0, period=1.0).with_coefficients(
        a1=a, a2=a)


def check_periodic_orbit(n=64, nt=200):
    def run():
        spec = periodic_test_problem()
        grid = spec.grid(n)
        ctl = PeriodicControls(nt=nt)
        orbit = find_periodic_orbit(spec, grid, controls=ctl)
        if not orbit.converged:
            return False, f"search ended with status {orbit.status}", {}
        r3 = resimulate(spec, grid, orbit, 3, ctl)
        ok = orbit.residual < 1e-6 and orbit.positivity_margin > 0 and r3 < 3 * orbit.residual
        return ok, (f"residual {orbit.residual:.2e}, margin {orbit.positivity_margin:.3g}, "
                    f"3-period residual {r3:.2e} (limit {3 * orbit.residual:.2e})"), \
            {"residual": orbit.residual, "r3": r3}
    return _timed(8, "periodic orbit", run)


def check_homotopy_endpoint(n=64, nt=200, searches=20, seed=11):
    def run():
        spec = periodic_test_problem()
        grid = spec.grid(n)
        ctl = PeriodicControls(nt=nt)
        base = default_guess(spec, grid)
        x = grid.mesh[0]
        rng = np.random.default_rng(seed)
        statuses = []
        for _ in range(searches):
            beta = 10.0 ** rng.uniform(-2, 1)
            bump = 1.0 + 0.5 * rng.uniform(-1, 1) * np.sin(2 * np.pi * x) ** 2
            guess = State(beta * base.u * bump, beta * base.v * (2.0 - bump))
            statuses.append(find_periodic_orbit(spec, grid, guess, lam=0.0, controls=ctl).status)
        growth = [adjoint_weighted_growth(spec, grid, State(s * base.u, s * base.v),
                                          controls=ctl)[0] for s in (1e-3, 1e-2, 1e-1)]
        ok = all(s in ("diverged", "trivial") for s in statuses) and all(g > 1 for g in growth)
        counts = {s: statuses.count(s) for s in sorted(set(statuses))}
        return ok, f"statuses {counts}, adjoint growth factors {[round(float(g), 4) for g in growth]}", \
            {"statuses": statuses, "growth": growth}
    return _timed(9, "homotopy endpoint", run)


# 10 ------------------------------------------------------------------------
def check_threshold(grids=(128, 256), lo=0.1, hi=50.0, tol=1e-3, horizon=2.0):
    def run():
        spec = ProblemSpec.constant(0.0, 0.0, 1.0, 1.0, 3.0, 3.0)
        stats, widths, mono = {}, [], True
        for n in grids:
            res = bisect_threshold(spec, spec.grid(n), lo, hi, tol, horizon)
            stats[n] = res.statistic.c_emp
            widths.append(res.width)
            mono &= res.audit()[0]
        a, b = (stats[g] for g in grids)
        change = abs(b - a) / a
        ok = max(widths) <= tol and mono and change < 0.10
        return ok, (f"width {max(widths):.2e}, monotone {mono}, statistic {a:.5g} vs {b:.5g} "
                    f"(change {change:.2%})"), stats
    return _timed(10, "threshold", run)


# 11 ------------------------------------------------------------------------
def check_scaling(n=512, lam=2.0):
    def run():
        spec = ProblemSpec.constant(0.0, 0.0, 1.0, 1.0, 3.0, 3.0, extents=((-6.0, 6.0),),
                                    bc="whole_space")
        res = []
        for m in (n, 2 * n):
            grid = spec.grid(m)
            p = 2.0 * np.exp(-grid.mesh[0] ** 2 / 0.5)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res.append(scaling_residual(spec, grid, State(p, p.copy()), 0.02, 0.2, lam, 1e-4))
        ratio = res[0] / res[1]
        return res[0] < 1e-2 and ratio >= 3.5, \
            f"residual {res[0]:.2e} (N={n}), {res[1]:.2e} (N={2 * n}), ratio {ratio:.2f}", {}
    return _timed(11, "scaling invariance", run)


CHECKS = [check_blowup_rate, check_homogeneous_oracle, check_proportionality,
          check_invariant_manifold, check_universal_bound, check_eigenvalues,
          check_periodic_linear, check_periodic_orbit, check_homotopy_endpoint,
          check_threshold, check_scaling]


def run_all(select=None, echo=print):
    results = []
    for k, fn in enumerate(CHECKS, start=1):
        if select and k not in select:
            continue
        res = fn()
        if echo:
            echo(res.line())
        results.append(res)
    return results
