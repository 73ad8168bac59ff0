"""Quantitative checks on trajectories: blow-up rates, the universal bound
statistic, proportionality of components, scaling invariance, ODE oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .errors import DataError, DomainError, ParameterError
from .grid import Grid, inverse_square_distance
from .model import ProblemSpec, ScalingParams, proportionality_constant, reduced_constant, rescale_state
from .state import State

REGIMES = {(1, 1), (1, 0), (0, 1)}


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    window: tuple          # (t_first, t_last) of the fitted samples
    n_samples: int
    T_est: float


def _r2(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return coef, 0.0
    return coef, max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)


def fit_blowup_rate(times, norms, window_decades=1.0, min_samples=10) -> RateFit:
    """Fit log ||u+v|| = slope * log(T - t) + b over the final decade of norms.

    The blow-up time T is chosen to maximise the coefficient of determination.
    """
    t = np.asarray(times, dtype=float)
    m = np.asarray(norms, dtype=float)
    ok = np.isfinite(m) & (m > 0)
    t, m = t[ok], m[ok]
    if len(t) < min_samples:
        raise DataError(f"need at least {min_samples} samples, got {len(t)}")
    top = m[-1]
    if top / np.min(m) < 10.0 ** window_decades:
        raise DataError("norm series spans less than one decade of growth")
    # last contiguous stretch above top / 10^decades
    below = np.nonzero(m < top / 10.0 ** window_decades)[0]
    start = below[-1] + 1 if below.size else 0
    tw, mw = t[start:], m[start:]
    tw, idx = np.unique(tw, return_index=True)
    mw = mw[idx]
    if len(tw) < min_samples:
        raise DataError(f"final decade holds only {len(tw)} samples")
    y = np.log(mw)
    t_last = tw[-1]
    span = max(tw[-1] - tw[0], 1e-300)

    def neg_r2(log_delta):
        x = np.log(t_last + math.exp(log_delta) - tw)
        return -_r2(x, y)[1]

    # the offset T - t_last must stay resolvable next to t_last
    lo = math.log(max(span * 1e-10, 64.0 * math.ulp(t_last)))
    hi = math.log(span * 10.0)
    grid = np.linspace(lo, hi, 241)
    vals = np.array([neg_r2(g) for g in grid])
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(neg_r2, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    best = res.x if res.fun <= vals[k] else grid[k]
    T = t_last + math.exp(best)
    coef, r2 = _r2(np.log(T - tw), y)
    return RateFit(slope=float(coef[0]), intercept=float(coef[1]), r2=float(r2),
                   window=(float(tw[0]), float(tw[-1])), n_samples=len(tw), T_est=float(T))


@dataclass
class BoundReport:
    c_emp: float
    argmax: tuple                 # (t, x...) where the supremum was attained
    regime: tuple
    T: float
    n_samples: int
    excluded_points: int = 0
    per_refinement: dict = field(default_factory=dict)
    note: str = "empirical lower bound for the universal constant"

    def as_dict(self):
        return {"c_emp": self.c_emp, "argmax": list(self.argmax), "regime": list(self.regime),
                "T": self.T, "n_samples": self.n_samples, "excluded_points": self.excluded_points,
                "per_refinement": self.per_refinement, "note": self.note}


def _time_terms(t, T, C1):
    with np.errstate(divide="ignore"):
        inv_t = np.where(t > 0, 1.0 / t, np.inf)
        tail = 0.0 if math.isinf(T) else np.where(T - t > 0, 1.0 / (T - t), np.inf)
    return C1 + inv_t + tail


def universal_bound_statistic(trajectory, T, regime=(1, 0), grid: Optional[Grid] = None,
                              t0=0.0) -> BoundReport:
    """sup of (u+v) / (C1 + 1/t + 1/(T-t) + C2 dist^-2) over samples with 0 < t < T.

    Times are measured from ``t0``.  ``T = inf`` drops the (T-t) term.  When
    C2 = 0 the spatial supremum reduces to ||u+v||, so the per-step norm
    series is used in addition to the snapshots.  In the (0, 1) regime nodes
    within 2h of the boundary are excluded.
    """
    regime = tuple(int(c) for c in regime)
    if regime not in REGIMES:
        raise ParameterError(f"regime must be one of {sorted(REGIMES)}")
    C1, C2 = regime
    grid = grid or trajectory.grid
    snaps = list(trajectory.snapshots)
    times = np.asarray(trajectory.times, dtype=float) - t0
    if not snaps and len(times) == 0:
        raise DataError("empty trajectory")
    T = math.inf if T is None else float(T) - (0.0 if math.isinf(T) else t0)

    best, where, n = 0.0, (math.nan,), 0
    if C2 == 0 and len(times):
        ok = (times > 0) & (times < T)
        if np.any(ok):
            vals = np.asarray(trajectory.sup_sum)[ok] / _time_terms(times[ok], T, C1)
            k = int(np.argmax(vals))
            n += int(np.sum(ok))
            if vals[k] > best:
                best = float(vals[k])
                where = (float(times[ok][k]),)

    excluded = 0
    if C2:
        dist2 = inverse_square_distance(grid)
        mask = np.ones(grid.shape, dtype=bool)
        if grid.bc != "whole_space" and C1 == 0:
            h = min(grid.spacing)
            from .grid import boundary_distance
            mask = boundary_distance(grid) >= 2.0 * h * (1.0 - 1e-12)
            excluded = int(mask.size - mask.sum())
    for s in snaps:
        ts = s.t - t0
        if not (0 < ts < T):
            continue
        n += 1
        total = s.u + s.v
        denom = _time_terms(np.asarray(ts), T, C1)
        if C2:
            ratio = np.where(mask, total / (denom + dist2), 0.0)
        else:
            ratio = total / denom
        k = int(np.argmax(ratio))
        if ratio.flat[k] > best:
            best = float(ratio.flat[k])
            where = (float(ts),) + tuple(float(ax.flat[k]) for ax in grid.mesh)
    return BoundReport(c_emp=best, argmax=where, regime=regime, T=T, n_samples=n,
                       excluded_points=excluded)


def proportionality_deficit(state: State, K):
    """||u - K v|| / ||u + K v|| in the sup norm."""
    den = float(np.max(np.abs(state.u + K * state.v)))
    if den == 0.0:
        raise DataError("proportionality deficit undefined for the zero state")
    return float(np.max(np.abs(state.u - K * state.v))) / den


def scaling_residual(spec: ProblemSpec, grid: Grid, state0: State, t1, t2, lam, dt,
                     x0=None):
    """Relative mismatch between rescale-then-evolve and evolve-then-rescale.

    The original run uses fixed steps ``dt`` on ``grid``; the rescaled one
    uses ``dt / lam^2`` on the same grid for the rescaled duration
    ``(t2 - t1) / lam^2``.
    """
    from .integrate import Stepper

    if not spec.scale_invariant:
        raise ParameterError("scaling residual requires a1 = a2 = 0 and constant b, c")
    if not 0 <= t1 < t2:
        raise ParameterError("need 0 <= t1 < t2")
    x0 = tuple(x0) if x0 is not None else (0.0,) * grid.dim
    stepper = Stepper(spec, grid)
    n1 = int(round((t1 - state0.t) / dt))
    n2 = int(round((t2 - t1) / dt))
    s1 = stepper.propagate(state0, t1 - state0.t, n1) if n1 > 0 else state0
    s2 = stepper.propagate(s1, t2 - t1, n2)
    p = ScalingParams(lam=lam, x0=x0, t0=t1, q=spec.q, r=spec.r)
    if lam == 1.0 and all(c == 0.0 for c in x0):
        return 0.0
    r1 = rescale_state(s1, p, spec, grid)
    ref = rescale_state(s2, p, spec, grid)
    evolved = stepper.propagate(r1, (t2 - t1) / lam ** 2, n2)
    num = max(float(np.max(np.abs(evolved.u - ref.u))), float(np.max(np.abs(evolved.v - ref.v))))
    den = max(float(np.max(np.abs(ref.u))), float(np.max(np.abs(ref.v))))
    return num / den


# -- ODE oracle -------------------------------------------------------------

def homogeneous_blowup_time(c, u0, p):
    """Blow-up time of u' = c u^p from u0 > 0 (inf if c <= 0)."""
    if c <= 0 or u0 <= 0:
        return math.inf
    return 1.0 / ((p - 1.0) * c * u0 ** (p - 1.0))


def ode_oracle(b1, b2, c1, c2, u0, v0, t, q=1.0, r=1.0, a1=0.0, a2=0.0, rtol=1e-12, atol=1e-14):
    """Solution of the spatially homogeneous reaction system at time ``t``.

    On the invariant manifold u0 = K v0 (r = 1, a1 = a2) the closed form
    u(t) = u0 (1 - (p-1) c u0^(p-1) t)^(-1/(p-1)) is used.  Otherwise an
    embedded Runge-Kutta method (DOP853) at tolerance ``rtol`` integrates the
    system.  Raises DomainError when t is at or beyond the blow-up time.
    """
    if u0 < 0 or v0 < 0:
        raise ParameterError("initial data must be nonnegative")
    if u0 == 0 and v0 == 0:
        return 0.0, 0.0
    p = q + r
    if r == 1.0 and a1 == a2 == 0.0 and u0 > 0 and v0 > 0:
        K = proportionality_constant(b1, b2, c1, c2, q)
        if math.isclose(u0, K * v0, rel_tol=1e-15, abs_tol=0.0):
            c = reduced_constant(b1, c1, K, q)
            T = homogeneous_blowup_time(c, u0, p)
            if t >= T:
                raise DomainError(f"t = {t} is beyond the blow-up time T = {T}", T)
            factor = 1.0 - (p - 1.0) * c * u0 ** (p - 1.0) * t
            u = u0 * factor ** (-1.0 / (p - 1.0))
            return u, u / K

    def rhs(_, y):
        u, v = max(y[0], 0.0), max(y[1], 0.0)
        return [a1 * u + u ** r * (c1 * v ** q - b1 * u ** q),
                a2 * v + v ** r * (c2 * u ** q - b2 * v ** q)]

    big = 1e150

    def escape(_, y):
        return big - (y[0] + y[1])
    escape.terminal = True

    rtol = max(rtol, 100 * np.finfo(float).eps)    # DOP853's floor
    sol = solve_ivp(rhs, (0.0, t), [u0, v0], method="DOP853", rtol=rtol, atol=atol,
                    events=escape, dense_output=False)
    if sol.status == 1 or not sol.success:
        T = float(sol.t[-1])
        raise DomainError(f"solution blows up before t = {t} (near T = {T:.12g})", T)
    return float(sol.y[0, -1]), float(sol.y[1, -1])
