"""Positive T-periodic solutions of the Dirichlet problem.

Two formulations are provided:

* the Poincare map P: state at phase 0 -> state after one period, for the
  homotopy family

      u_t - Lap u = lam u(a1 - b1 u + c1 v) + (1 - lam)(Lambda u + K^3 v^2)
      v_t - Lap v = lam v(a2 - b2 v + c2 u) + (1 - lam)(Lambda v + u^2)

  with K = (c1 + b2)/(c2 + b1) and Lambda = Lambda_1^T + 1;
* the compact operator  T(u, v) = (K(u(a1 - b1 u + c1 v)), K(v(...)))
  where K is the periodic linear solve followed by the positive part.

With ``source="scheme"`` the reaction source fed to the periodic solve is
discretised exactly as the time stepper does, so both formulations share
their fixed points up to solver tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse.linalg as spla
from scipy.optimize import root

from .errors import ParameterError
from .grid import Grid
from .integrate import Homotopy, Stepper
from .model import COEFFICIENT_NAMES, ProblemSpec
from .spectral import adjoint_periodic_eigenpair, periodic_linear_solve, principal_eigenvalue
from .state import State

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeriodicControls:
    nt: int = 200                  # steps per period
    tol: float = 1e-10            # relative periodicity residual
    max_iter: int = 40
    damping: float = 0.5          # theta of the damped fixed-point iteration
    gmres_tol: float = 1e-8
    gmres_restart: int = 60
    fd_eps: float = 1e-7          # FD step relative to ||x||
    blow_cap: float = 1e6
    nontrivial: float = 1e-4      # relative to the coefficient scale
    n_phase: int = 8              # exported phase samples


@dataclass
class PeriodicOrbit:
    lam: float
    period: float
    status: str                    # converged | trivial | diverged | max_iter | stalled
    method: str
    residual: float = math.nan
    positivity_margin: float = math.nan
    sup_norm: float = math.nan
    history: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    u: Optional[np.ndarray] = None     # (nt + 1,) + grid.shape over one period
    v: Optional[np.ndarray] = None
    iterations: int = 0
    map_evaluations: int = 0

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def nontrivial(self):
        return self.status == "converged" and self.positivity_margin > 0

    @property
    def initial(self):
        return State(self.u[0].copy(), self.v[0].copy(), 0.0)

    def manifest(self):
        return {"lam": self.lam, "T": self.period, "status": self.status, "method": self.method,
                "residual": self.residual, "positivity_margin": self.positivity_margin,
                "sup_norm": self.sup_norm, "iterations": self.iterations,
                "map_evaluations": self.map_evaluations}


def coefficient_scale(spec: ProblemSpec, grid: Grid, nt=16):
    """max over coefficients and sampled times of sup |coefficient|."""
    period = spec.period or 1.0
    s = spec.sampler(grid)
    scale = 0.0
    for k in range(nt):
        c = s(k * period / nt)
        scale = max(scale, *(float(np.max(np.abs(c[n]))) for n in COEFFICIENT_NAMES))
    return scale


def homotopy_gain(grid: Grid, period):
    """Lambda = Lambda_1^T + 1."""
    return adjoint_periodic_eigenpair(grid, period).value + 1.0


class PoincareMap:
    """One-period propagator of the homotopy system with fixed steps T/nt."""

    def __init__(self, spec: ProblemSpec, grid: Grid, lam=1.0, period=None,
                 controls: PeriodicControls = None, Lambda=None, check=True):
        self.controls = controls or PeriodicControls()
        self.period = float(period if period is not None else spec.period or math.nan)
        if not self.period > 0:
            raise ParameterError("a period is required (problem period or explicit argument)")
        if grid.bc != "dirichlet":
            raise ParameterError("periodic solutions are computed for the Dirichlet problem")
        self.spec, self.grid, self.lam = spec, grid, float(lam)
        if check:
            lam1 = principal_eigenvalue(grid).value
            s = spec.sampler(grid)
            for k in range(32):
                c = s(k * self.period / 32)
                amax = max(float(np.max(c["a1"])), float(np.max(c["a2"])))
                if amax >= lam1:
                    raise ParameterError(f"need a1, a2 < Lambda_1 = {lam1:.6g}; found {amax:.6g}")
        self.Lambda = homotopy_gain(grid, self.period) if Lambda is None else Lambda
        self.stepper = Stepper(spec, grid, Homotopy(self.lam, self.Lambda))
        self.n = grid.size
        self.evaluations = 0

    @property
    def dt(self):
        return self.period / self.controls.nt

    def pack(self, u, v):
        return np.concatenate([np.ravel(u), np.ravel(v)])

    def unpack(self, x):
        return x[:self.n].reshape(self.grid.shape), x[self.n:].reshape(self.grid.shape)

    def trajectory(self, u, v, periods=1):
        """All states over ``periods`` periods starting at phase 0."""
        record = [State(np.asarray(u, float), np.asarray(v, float), 0.0)]
        s = record[0]
        nt = self.controls.nt
        for k in range(periods * nt):
            s = self.stepper.advance(s, self.dt)
            s.t = (k + 1) * self.dt
            if not s.finite or s.sup > self.controls.blow_cap:
                s.meta["diverged"] = True
                record.append(s)
                break
            record.append(s)
        self.evaluations += periods
        return record

    def __call__(self, x):
        """P(x) as a packed vector, or None when the orbit blows up within the period."""
        u, v = self.unpack(x)
        s = State(u, v, 0.0)
        for k in range(self.controls.nt):
            s = self.stepper.advance(s, self.dt)
            s.t = (k + 1) * self.dt
            if not s.finite or s.sup > self.controls.blow_cap:
                self.evaluations += 1
                return None
        self.evaluations += 1
        return self.pack(s.u, s.v)


def poincare_map(spec: ProblemSpec, grid: Grid, state0: State, lam=1.0, period=None,
                 controls: PeriodicControls = None) -> State:
    """State after exactly one period; ``meta['diverged']`` flags blow-up."""
    pm = PoincareMap(spec, grid, lam, period, controls)
    out = pm(pm.pack(state0.u, state0.v))
    if out is None:
        s = State(np.full(grid.shape, np.nan), np.full(grid.shape, np.nan), state0.t + pm.period)
        s.meta["diverged"] = True
        return s
    u, v = pm.unpack(out)
    return State(u, v, state0.t + pm.period)


def scheme_source(stepper: Stepper, U, V, dt):
    """Per-step reaction sources (R(u_k) - u_k)/dt reproducing the stepper exactly.

    Returns an array of shape (nt, 2) + grid.shape.
    """
    out = np.empty((len(U) - 1, 2) + U.shape[1:])
    for k in range(len(U) - 1):
        ru, rv = stepper.react(U[k], V[k], k * dt, dt)
        out[k, 0] = (ru - U[k]) / dt
        out[k, 1] = (rv - V[k]) / dt
    return out


class TOperator:
    """Space-time fixed-point operator (u, v) -> (K(f_u)^+, K(f_v)^+).

    Inputs and outputs are arrays of shape (nt + 1,) + grid.shape sampled at
    t_k = k T / nt; only the first nt samples enter the source.
    """

    def __init__(self, spec: ProblemSpec, grid: Grid, lam=1.0, period=None, nt=200,
                 source="scheme", Lambda=None):
        if grid.bc != "dirichlet":
            raise ParameterError("the operator T is posed with Dirichlet conditions")
        if source not in ("scheme", "pointwise"):
            raise ParameterError(f"unknown source discretisation {source!r}")
        self.period = float(period if period is not None else spec.period)
        self.nt = int(nt)
        self.dt = self.period / self.nt
        self.grid, self.lam, self.source = grid, float(lam), source
        if self.lam < 1.0 and Lambda is None:
            Lambda = homotopy_gain(grid, self.period)
        self.Lambda = Lambda or 0.0
        self.stepper = Stepper(spec, grid, Homotopy(self.lam, self.Lambda))
        self.evaluations = 0

    def sources(self, U, V):
        if self.source == "scheme":
            return scheme_source(self.stepper, U, V, self.dt)
        out = np.empty((self.nt, 2) + self.grid.shape)
        for k in range(self.nt):
            t = (k + 1) * self.dt
            out[k, 0], out[k, 1] = self.stepper.reaction.net(U[k + 1], V[k + 1], t)
        return out

    def __call__(self, U, V):
        U, V = np.asarray(U, float), np.asarray(V, float)
        if len(U) != self.nt + 1 or len(V) != self.nt + 1:
            raise ParameterError(f"expected {self.nt + 1} time samples, got {len(U)}")
        sol = periodic_linear_solve(self.grid, self.sources(U, V), self.period, self.nt,
                                    solver=self.stepper.diffusion)
        self.evaluations += 1
        w = sol.positive_part
        return w[:, 0], w[:, 1]

    # packed form over the nt independent samples, used by the Newton solver
    def pack(self, U, V):
        return np.concatenate([np.ravel(U[:-1]), np.ravel(V[:-1])])

    def unpack(self, x):
        shape = (self.nt,) + self.grid.shape
        m = int(np.prod(shape))
        U, V = x[:m].reshape(shape), x[m:].reshape(shape)
        return np.concatenate([U, U[:1]]), np.concatenate([V, V[:1]])

    def packed(self, x):
        return self.pack(*self(*self.unpack(x)))


def apply_T_operator(spec: ProblemSpec, grid: Grid, U, V, lam=1.0, period=None, source="scheme",
                     Lambda=None):
    """Apply T to space-time fields U, V of shape (nt + 1,) + grid.shape.

    ``source="scheme"`` uses the stepper's reaction discretisation;
    ``source="pointwise"`` evaluates the reaction at t[k+1] directly.
    Returns (U', V') = (w^+, z^+) over the same time grid.
    """
    op = TOperator(spec, grid, lam, period, len(U) - 1, source, Lambda)
    return op(U, V)


def default_guess(spec: ProblemSpec, grid: Grid, beta=None, period=None):
    """beta * (phi_1, phi_1 / Kbar) with beta from a one-mode balance.

    Projecting the steady problem onto phi_1 along u = K v gives
    beta = (Lambda_1 - abar) <phi_1^2> / (c <phi_1^3>), c = c1/K - b1.
    """
    eig = principal_eigenvalue(grid)
    phi = eig.vector
    period = period or spec.period or 1.0
    s = spec.sampler(grid)
    cs = [s(k * period / 16) for k in range(16)]
    mean = {n: float(np.mean([np.mean(c[n]) for c in cs])) for n in COEFFICIENT_NAMES}
    K = (mean["c1"] + mean["b2"]) / (mean["c2"] + mean["b1"])
    if beta is None:
        c = mean["c1"] / K - mean["b1"]
        abar = 0.5 * (mean["a1"] + mean["a2"])
        beta = (eig.value - abar) * np.sum(phi ** 2) / (max(c, 1e-12) * np.sum(phi ** 3))
    return State(beta * phi, beta * phi / K, 0.0)


def steady_state(spec: ProblemSpec, grid: Grid, dt, guess: State, t=0.0, tol=1e-13):
    """Fixed point of the one-step map with coefficients frozen at time ``t``.

    Independent oracle for autonomous problems: scipy's hybrid Powell solver
    on U - S_dt(U) = 0.
    """
    stepper = Stepper(spec, grid)
    n = grid.size

    def resid(x):
        u, v = x[:n].reshape(grid.shape), x[n:].reshape(grid.shape)
        s = stepper.advance(State(np.abs(u), np.abs(v), t), dt)
        return np.concatenate([(s.u - u).ravel(), (s.v - v).ravel()]) / dt

    sol = root(resid, np.concatenate([guess.u.ravel(), guess.v.ravel()]), method="hybr",
               tol=tol)
    x = np.abs(sol.x)
    return State(x[:n].reshape(grid.shape), x[n:].reshape(grid.shape), t), sol.success


def _orbit_from(pm: PoincareMap, x, status, method, history, iterations):
    u, v = pm.unpack(x)
    orbit = PeriodicOrbit(lam=pm.lam, period=pm.period, status=status, method=method,
                          history=history, iterations=iterations)
    traj = pm.trajectory(u, v)
    if traj[-1].meta.get("diverged"):
        orbit.status = "diverged"
        orbit.map_evaluations = pm.evaluations
        return orbit
    U = np.stack([s.u for s in traj])
    V = np.stack([s.v for s in traj])
    scale = max(float(np.max(U)), float(np.max(V)), 1e-300)
    orbit.u, orbit.v = U, V
    orbit.residual = max(float(np.max(np.abs(U[-1] - U[0]))),
                         float(np.max(np.abs(V[-1] - V[0])))) / scale
    orbit.sup_norm = float(np.max(U + V))
    orbit.positivity_margin = float(min(np.min(U), np.min(V)))
    nt, m = pm.controls.nt, min(pm.controls.n_phase, pm.controls.nt)
    orbit.snapshots = [traj[(k * nt) // m] for k in range(m)]
    orbit.map_evaluations = pm.evaluations
    return orbit


def _rel_residual(x, px):
    return float(np.max(np.abs(px - x))) / max(float(np.max(np.abs(x))), 1e-300)


@dataclass
class _NKResult:
    x: np.ndarray
    status: str
    history: list
    iterations: int


def newton_krylov(G, x, tol, max_iter, small=0.0, blow_cap=math.inf, fd_eps=1e-7,
                  gmres_tol=1e-8, restart=60) -> _NKResult:
    """Matrix-free Newton for x = G(x) on the nonnegative cone.

    ``G`` returns None where it is undefined (blow-up).  Directional
    derivatives use a forward difference with step fd_eps * ||x||; steps are
    globalised by backtracking on ||G(x) - x||_2 and clipped at zero.
    """
    history = []
    gx = G(x)
    if gx is None:
        return _NKResult(x, "diverged", history, 0)
    for it in range(1, max_iter + 1):
        F = gx - x
        xnorm = float(np.max(np.abs(x)))
        res = float(np.max(np.abs(F))) / max(xnorm, 1e-300)
        history.append(res)
        if xnorm <= small:
            return _NKResult(x, "trivial", history, it)
        if res <= tol:
            return _NKResult(x, "converged", history, it)

        def jv(w, x=x, gx=gx, xnorm=xnorm):
            wn = float(np.max(np.abs(w)))
            if wn == 0.0:
                return np.zeros_like(w)
            eps = fd_eps * xnorm / wn
            gw = G(x + eps * w)
            if gw is None:
                raise FloatingPointError("map undefined along Krylov direction")
            return (gw - gx) / eps - w

        J = spla.LinearOperator((len(x), len(x)), matvec=jv, dtype=float)
        try:
            delta, _ = spla.gmres(J, -F, rtol=gmres_tol, atol=0.0,
                                  restart=min(restart, len(x)), maxiter=1)
        except FloatingPointError:
            return _NKResult(x, "stalled", history, it)
        if not np.all(np.isfinite(delta)):
            return _NKResult(x, "stalled", history, it)
        f2 = float(np.linalg.norm(F))
        step = 1.0
        for _ in range(20):
            xt = np.maximum(x + step * delta, 0.0)
            gt = G(xt)
            if gt is not None and np.linalg.norm(gt - xt) < (1.0 - 1e-4 * step) * f2:
                x, gx = xt, gt
                break
            step *= 0.5
        else:
            return _NKResult(x, "stalled", history, it)
        if float(np.max(x)) > blow_cap:
            return _NKResult(x, "diverged", history, it)
    return _NKResult(x, "max_iter", history, max_iter)


def _orbit_from(pm: PoincareMap, x, status, method, history, iterations):
    u, v = pm.unpack(x)
    orbit = PeriodicOrbit(lam=pm.lam, period=pm.period, status=status, method=method,
                          history=history, iterations=iterations)
    traj = pm.trajectory(u, v)
    if traj[-1].meta.get("diverged"):
        orbit.status = "diverged"
        orbit.map_evaluations = pm.evaluations
        return orbit
    U = np.stack([s.u for s in traj])
    V = np.stack([s.v for s in traj])
    scale = max(float(np.max(U)), float(np.max(V)), 1e-300)
    orbit.u, orbit.v = U, V
    orbit.residual = max(float(np.max(np.abs(U[-1] - U[0]))),
                         float(np.max(np.abs(V[-1] - V[0])))) / scale
    orbit.sup_norm = float(np.max(U + V))
    orbit.positivity_margin = float(min(np.min(U), np.min(V)))
    nt, m = pm.controls.nt, min(pm.controls.n_phase, pm.controls.nt)
    orbit.snapshots = [traj[(k * nt) // m] for k in range(m)]
    orbit.map_evaluations = pm.evaluations
    return orbit


def find_periodic_orbit(spec: ProblemSpec, grid: Grid, guess: Optional[State] = None, lam=1.0,
                        method="newton-krylov", period=None,
                        controls: PeriodicControls = None, Lambda=None) -> PeriodicOrbit:
    """Solve P(x) = x by damped fixed-point iteration or matrix-free Newton-Krylov.

    Newton-Krylov runs in two stages.  Positive orbits are typically strongly
    unstable (Floquet multipliers ~ e^{10} for the standard test), so single
    shooting from a rough guess blows up within one period.  The first stage
    therefore solves the space-time fixed-point problem X = T(X), which is
    defined for every input; the second polishes the phase-0 state with
    Newton on the Poincare map.

    When Newton stalls (no descent along the Krylov step) the damped
    iteration takes over from the last iterate, so the outcome is settled by
    the dynamics of the map.

    Failures are reported through ``status`` rather than raised:
    ``trivial`` (collapsed to zero), ``diverged`` (blow-up inside a period or
    unbounded iterates), ``max_iter`` and ``stalled``.
    """
    controls = controls or PeriodicControls()
    pm = PoincareMap(spec, grid, lam, period, controls, Lambda)
    guess = guess or default_guess(spec, grid, period=pm.period)
    small = controls.nontrivial * max(coefficient_scale(spec, grid), 1e-300)
    x = pm.pack(np.maximum(guess.u, 0.0), np.maximum(guess.v, 0.0))
    if method == "damped-fixed-point":
        return _damped(pm, x, small)
    if method != "newton-krylov":
        raise ParameterError(f"unknown method {method!r}")

    history = []
    x0 = pm(x)
    if x0 is None:
        top = TOperator(spec, grid, lam, pm.period, controls.nt, Lambda=pm.Lambda)
        U = np.broadcast_to(guess.u, (controls.nt + 1,) + grid.shape)
        V = np.broadcast_to(guess.v, (controls.nt + 1,) + grid.shape)
        st = newton_krylov(top.packed, top.pack(U, V), tol=max(controls.tol, 1e-10),
                           max_iter=controls.max_iter, small=small, blow_cap=controls.blow_cap,
                           fd_eps=controls.fd_eps, gmres_tol=controls.gmres_tol,
                           restart=controls.gmres_restart)
        history.extend(st.history)
        U, V = top.unpack(st.x)
        x = pm.pack(U[0], V[0])
        if st.status == "stalled":
            return _fallback(pm, x, small, history)
        if st.status != "converged":
            return _orbit_from(pm, x, st.status, "newton-krylov", history, st.iterations)
    res = newton_krylov(pm, x, controls.tol, controls.max_iter, small, controls.blow_cap,
                        controls.fd_eps, controls.gmres_tol, controls.gmres_restart)
    history.extend(res.history)
    if res.status == "stalled":
        return _fallback(pm, res.x, small, history)
    return _orbit_from(pm, res.x, res.status, "newton-krylov", history,
                       len(history))


def _fallback(pm, x, small, history):
    # No descent direction: let the map itself decide between decay and blow-up.
    orbit = _damped(pm, x, small)
    orbit.history = history + orbit.history
    orbit.method = "newton-krylov"
    orbit.iterations = len(orbit.history)
    return orbit


def _damped(pm, x, small):
    c = pm.controls
    history = []
    for it in range(1, c.max_iter + 1):
        px = pm(x)
        if px is None:
            return PeriodicOrbit(pm.lam, pm.period, "diverged", "damped-fixed-point",
                                 history=history, iterations=it, map_evaluations=pm.evaluations)
        res = _rel_residual(x, px)
        history.append(res)
        x = (1.0 - c.damping) * x + c.damping * px
        norm = float(np.max(x))
        if norm > c.blow_cap:
            return PeriodicOrbit(pm.lam, pm.period, "diverged", "damped-fixed-point",
                                 history=history, iterations=it, map_evaluations=pm.evaluations)
        if norm <= small:
            return _orbit_from(pm, x, "trivial", "damped-fixed-point", history, it)
        if res <= c.tol:
            return _orbit_from(pm, x, "converged", "damped-fixed-point", history, it)
    return _orbit_from(pm, x, "max_iter", "damped-fixed-point", history, c.max_iter)


def resimulate(spec: ProblemSpec, grid: Grid, orbit: PeriodicOrbit, periods=3,
               controls: PeriodicControls = None, Lambda=None):
    """Relative distance between the orbit's initial state and its image after
    ``periods`` periods."""
    pm = PoincareMap(spec, grid, orbit.lam, orbit.period, controls, Lambda, check=False)
    traj = pm.trajectory(orbit.u[0], orbit.v[0], periods)
    if traj[-1].meta.get("diverged"):
        return math.inf
    scale = max(float(np.max(orbit.u)), float(np.max(orbit.v)))
    end = traj[-1]
    return max(float(np.max(np.abs(end.u - orbit.u[0]))),
               float(np.max(np.abs(end.v - orbit.v[0])))) / scale


@dataclass
class SweepReport:
    lams: list
    orbits: list
    branch_max: float
    terminated_at: Optional[float]

    def rows(self):
        return [o.manifest() for o in self.orbits]


def homotopy_sweep(spec: ProblemSpec, grid: Grid, lams: Sequence[float], guess: State = None,
                   controls: PeriodicControls = None, period=None) -> SweepReport:
    """Continuation in lam: each converged orbit seeds the next parameter value.

    The branch terminates at the first lam that does not yield a nontrivial
    converged orbit; later values are still attempted from the last good seed.
    """
    controls = controls or PeriodicControls()
    period = period or spec.period
    if any(not 0.0 <= l <= 1.0 for l in lams):
        raise ParameterError("lambda grid must lie in [0, 1]")
    Lambda = homotopy_gain(grid, period)
    seed = guess
    orbits, terminated, branch_max = [], None, 0.0
    for lam in lams:
        orbit = find_periodic_orbit(spec, grid, seed, lam, "newton-krylov", period, controls, Lambda)
        orbits.append(orbit)
        if orbit.nontrivial:
            seed = orbit.initial
            if terminated is None:
                branch_max = max(branch_max, orbit.sup_norm)
        elif terminated is None:
            terminated = lam
        log.info("lam=%.3f status=%s sup=%.6g", lam, orbit.status, orbit.sup_norm)
    return SweepReport(list(lams), orbits, branch_max, terminated)


def adjoint_weighted_growth(spec: ProblemSpec, grid: Grid, state: State, lam=0.0, period=None,
                            controls: PeriodicControls = None):
    """Growth of the space-time integral of u*phi_1 from one period to the next.

    Returns (observed factor, discrete lower bound ((1+dt Lambda)/(1+dt Lambda_1))^nt).
    """
    controls = controls or PeriodicControls()
    pm = PoincareMap(spec, grid, lam, period, controls)
    eig = principal_eigenvalue(grid)
    traj = pm.trajectory(state.u, state.v, periods=2)
    nt = controls.nt
    bound = ((1.0 + pm.dt * pm.Lambda) / (1.0 + pm.dt * eig.value)) ** nt
    if traj[-1].meta.get("diverged") or len(traj) < 2 * nt + 1:
        return math.inf, bound
    w = np.array([grid.inner(s.u, eig.vector) for s in traj])
    first = np.sum(w[1:nt + 1]) * pm.dt
    second = np.sum(w[nt + 1:2 * nt + 1]) * pm.dt
    return second / first, bound


def export_orbit(orbit: PeriodicOrbit, grid: Grid, out_dir, stem="orbit", q=1.0, r=1.0):
    """Checkpoints at the phase samples plus an NDJSON manifest line per snapshot."""
    import os

    from .integrate import write_checkpoint
    from .io import write_ndjson

    os.makedirs(out_dir, exist_ok=True)
    records = []
    for k, s in enumerate(orbit.snapshots):
        name = f"{stem}_lam{orbit.lam:.4f}_phase{k:03d}.lvb"
        write_checkpoint(os.path.join(out_dir, name), s, grid, q, r)
        rec = orbit.manifest()
        rec.update(phase=s.t / orbit.period, t=s.t, file=name)
        records.append(rec)
    path = os.path.join(out_dir, f"{stem}_lam{orbit.lam:.4f}.ndjson")
    write_ndjson(path, records or [orbit.manifest()])
    return path
