"""Time integration of (u, v): implicit diffusion, positivity-preserving reaction.

One step of size dt is a Lie splitting

1. reaction, pointwise:  u* = (u + dt P) / (1 + dt D / u)
2. diffusion:            (I - dt Lap) u_new = u*

where P >= 0 is the production and D >= 0 the loss of the reaction term.
With ``splitting="net"`` (default) P and D are the positive and negative
parts of the net reaction; with ``splitting="termwise"`` P collects the
cross terms and a+, D the self-limitation terms and a-.  Both are
nonnegative for any dt.  The net form keeps u = K v exactly invariant when
the per-capita rates of the two components coincide, which the termwise form
only does to O(dt).
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError, NumericalError, ParameterError
from .grid import DiffusionSolver, Grid
from .model import ProblemSpec
from .state import State

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Homotopy:
    """Blend lam * (Lotka-Volterra) + (1 - lam) * (Lambda u + K^3 v^2, Lambda v + u^2)."""

    lam: float = 1.0
    Lambda: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ParameterError(f"homotopy parameter {self.lam} outside [0, 1]")


class Reaction:
    """Production / loss split of the reaction terms on a fixed grid."""

    def __init__(self, spec: ProblemSpec, grid: Grid, homotopy: Optional[Homotopy] = None):
        self.spec = spec
        self.grid = grid
        self.sampler = spec.sampler(grid)
        self.homotopy = homotopy or Homotopy()
        if self.homotopy.lam < 1.0 and (spec.q, spec.r) != (1.0, 1.0):
            raise ParameterError("the homotopy family is defined for q = r = 1")
        self.q, self.r = float(spec.q), float(spec.r)

    def coefficients(self, t):
        return self.sampler(t)

    def _pow(self, x, p):
        return x if p == 1.0 else x ** p

    def terms(self, u, v, t):
        """Return (Pu, Du, Pv, Dv): production and loss densities, all >= 0."""
        c = self.sampler(t)
        q, r = self.q, self.r
        lam = self.homotopy.lam
        a1, a2 = c["a1"], c["a2"]
        ur, vr = self._pow(u, r), self._pow(v, r)
        uq, vq = self._pow(u, q), self._pow(v, q)
        pu = np.maximum(a1, 0.0) * u + c["c1"] * ur * vq
        du = np.maximum(-a1, 0.0) * u + c["b1"] * ur * uq
        pv = np.maximum(a2, 0.0) * v + c["c2"] * vr * uq
        dv = np.maximum(-a2, 0.0) * v + c["b2"] * vr * vq
        if lam < 1.0:
            K = (c["c1"] + c["b2"]) / (c["c2"] + c["b1"])
            L = self.homotopy.Lambda
            pu = lam * pu + (1.0 - lam) * (L * u + K ** 3 * v * v)
            pv = lam * pv + (1.0 - lam) * (L * v + u * u)
            du = lam * du
            dv = lam * dv
        return pu, du, pv, dv

    def net(self, u, v, t):
        pu, du, pv, dv = self.terms(u, v, t)
        return pu - du, pv - dv

    def rate_scale(self, u, v, t):
        """Upper estimate of the reaction Jacobian diagonal magnitude."""
        c = self.sampler(t)
        p = self.q + self.r
        s = np.maximum(u, v)
        sp = s if p == 2.0 else s ** (p - 1.0)
        lam = self.homotopy.lam
        lu = np.abs(c["a1"]) + p * (c["b1"] + c["c1"]) * sp
        lv = np.abs(c["a2"]) + p * (c["b2"] + c["c2"]) * sp
        out = lam * np.maximum(lu, lv)
        if lam < 1.0:
            K = (c["c1"] + c["b2"]) / (c["c2"] + c["b1"])
            out = out + (1.0 - lam) * (self.homotopy.Lambda + 2.0 * (K ** 3 + 1.0) * s)
        return float(np.max(out))


def _patankar(x, prod, loss, dt):
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(x > 0.0, loss / x, 0.0)
    return (x + dt * prod) / (1.0 + dt * rate)


class Stepper:
    """Owns the diffusion solver and reaction split for one (spec, grid) pair."""

    def __init__(self, spec: ProblemSpec, grid: Grid, homotopy: Optional[Homotopy] = None,
                 splitting="net"):
        if grid.extents != spec.extents or grid.bc != spec.bc:
            raise ParameterError("grid does not match the problem domain / boundary condition")
        if splitting not in ("net", "termwise"):
            raise ParameterError(f"unknown splitting {splitting!r}")
        self.spec = spec
        self.grid = grid
        self.reaction = Reaction(spec, grid, homotopy)
        self.diffusion = DiffusionSolver(grid)
        self.splitting = splitting

    def react(self, u, v, t, dt):
        pu, du, pv, dv = self.reaction.terms(u, v, t)
        if self.splitting == "net":
            fu, fv = pu - du, pv - dv
            pu, du = np.maximum(fu, 0.0), np.maximum(-fu, 0.0)
            pv, dv = np.maximum(fv, 0.0), np.maximum(-fv, 0.0)
        return _patankar(u, pu, du, dt), _patankar(v, pv, dv, dt)

    def advance(self, state: State, dt):
        if not dt > 0:
            raise ParameterError(f"time step must be positive, got {dt}")
        us, vs = self.react(state.u, state.v, state.t, dt)
        try:
            out = self.diffusion.solve(np.stack([us, vs]), dt)
        except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
            raise NumericalError(f"diffusion solve failed at t={state.t}: {exc}") from exc
        new = State(out[0], out[1], state.t + dt)
        if not new.finite:
            new.meta["diverged"] = True
        return new

    def propagate(self, state: State, duration, n_steps, record=None):
        """Fixed-step propagation; ``record`` (list) receives every intermediate state."""
        dt = duration / n_steps
        t0 = state.t
        s = state
        for k in range(n_steps):
            s = self.advance(s, dt)
            s.t = t0 + (k + 1) * dt
            if record is not None:
                record.append(s)
            if s.meta.get("diverged"):
                break
        return s


def step(spec: ProblemSpec, grid: Grid, state: State, dt, splitting="net"):
    """Single IMEX step; see module docstring."""
    return Stepper(spec, grid, splitting=splitting).advance(state, dt)


# -- adaptive evolution -----------------------------------------------------

@dataclass(frozen=True)
class StepControls:
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-3
    theta: float = 0.05
    blow_norm_cap: float = 1e6
    snapshot_every: int = 200
    snapshot_growth: float = 1.1
    quiescence_cap: float = 1e-3
    max_steps: int = 10_000_000
    splitting: str = "net"

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ParameterError("need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.theta < 1:
            raise ParameterError("safety factor theta must lie in (0, 1)")
        if not self.blow_norm_cap > 0:
            raise ParameterError("blow-up norm cap must be positive")
        if self.snapshot_growth <= 1.0 or self.snapshot_every < 1:
            raise ParameterError("invalid snapshot cadence")

    def scaled(self, factor):
        """Controls with every time scale multiplied by ``factor``."""
        from dataclasses import replace
        return replace(self, dt_init=self.dt_init * factor, dt_min=self.dt_min * factor,
                       dt_max=self.dt_max * factor)


@dataclass
class Trajectory:
    """Per-step scalar diagnostics plus field snapshots at adaptive cadence."""

    grid: Grid
    times: list = field(default_factory=list)
    sup_u: list = field(default_factory=list)
    sup_v: list = field(default_factory=list)
    sup_sum: list = field(default_factory=list)
    mass_u: list = field(default_factory=list)
    mass_v: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def record(self, s: State):
        self.times.append(s.t)
        self.sup_u.append(float(np.max(s.u)))
        self.sup_v.append(float(np.max(s.v)))
        self.sup_sum.append(float(np.max(s.u + s.v)))
        self.mass_u.append(self.grid.integrate(s.u))
        self.mass_v.append(self.grid.integrate(s.v))

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in
                ("times", "sup_u", "sup_v", "sup_sum", "mass_u", "mass_v")}

    def snapshot_at(self, t, atol=1e-12):
        for s in self.snapshots:
            if abs(s.t - t) <= atol * max(1.0, abs(t)):
                return s
        raise DataError(f"no snapshot at t={t}")

    @classmethod
    def from_states(cls, grid, states):
        traj = cls(grid)
        for s in states:
            traj.record(s)
            traj.snapshots.append(s)
        return traj


@dataclass
class SolveOutcome:
    kind: str                      # "Global" | "BlowUp" | "Undecided"
    t_end: float
    horizon: float
    T_est: float = math.nan
    peak_norm: float = math.nan
    reason: str = ""
    rate_fit: object = None
    trajectory: Optional[Trajectory] = None
    final: Optional[State] = None
    steps: int = 0
    flags: list = field(default_factory=list)

    def summary(self):
        out = {"kind": self.kind, "t_end": self.t_end, "horizon": self.horizon,
               "T_est": self.T_est, "peak_norm": self.peak_norm, "reason": self.reason,
               "steps": self.steps, "flags": list(self.flags)}
        if self.rate_fit is not None:
            out["slope"] = self.rate_fit.slope
            out["r2"] = self.rate_fit.r2
        return out


def evolve(spec: ProblemSpec, grid: Grid, state0: State, horizon, controls: StepControls = None,
           output_times=(), record=True, stepper: Optional[Stepper] = None) -> SolveOutcome:
    """Adaptive evolution until blow-up, the horizon, or the step budget.

    Step size: dt = min(dt_max, theta / L) with L the reaction rate scale
    (``dt_init`` when L vanishes), cut to land on ``output_times`` and the
    horizon.  The step sequence depends only on the current state, so a
    restart from a checkpoint reproduces the run bit for bit.

    Classification:

    * BlowUp when ||u+v|| exceeds ``blow_norm_cap`` or the required step
      drops below ``dt_min`` (the step collapses);
    * Global when the horizon is reached with ||u+v|| <= ``quiescence_cap``
      (for an infinite horizon: when the norm has decayed below
      1e-3 * quiescence_cap);
    * Undecided otherwise, with the reason recorded.
    """
    from .analyze import fit_blowup_rate

    controls = controls or StepControls()
    if not horizon > 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    stepper = stepper or Stepper(spec, grid, splitting=controls.splitting)
    outs = sorted(t for t in output_times if state0.t < t <= state0.t + horizon)
    t_stop = state0.t + horizon
    traj = Trajectory(grid)
    s = state0
    traj.record(s)
    if record:
        traj.snapshots.append(s)
    last_snap_norm = max(traj.sup_sum[-1], 1e-300)
    steps = 0
    flags = []
    kind, reason = None, ""
    infinite = math.isinf(horizon)

    while True:
        norm = traj.sup_sum[-1]
        if norm > controls.blow_norm_cap:
            kind, reason = "BlowUp", "norm cap exceeded"
            break
        if not infinite and s.t >= t_stop - 1e-14 * max(1.0, abs(t_stop)):
            break
        if infinite and norm <= 1e-3 * controls.quiescence_cap and steps > 0 \
                and traj.sup_sum[-2] >= norm:
            break
        if steps >= controls.max_steps:
            kind, reason = "Undecided", "step budget exhausted"
            break
        L = stepper.reaction.rate_scale(s.u, s.v, s.t)
        dt = controls.dt_init if L == 0.0 else min(controls.dt_max, controls.theta / L)
        if dt < controls.dt_min:
            kind, reason = "BlowUp", "step size collapsed below dt_min"
            break
        while outs and outs[0] <= s.t + 1e-14 * max(1.0, abs(s.t)):
            outs.pop(0)
        target = min(outs[0], t_stop) if outs else t_stop
        snap_to_out = False
        if s.t + dt >= target - 1e-14 * max(1.0, abs(target)):
            dt = target - s.t
            snap_to_out = True
        s = stepper.advance(s, dt)
        if snap_to_out:
            s.t = target
        steps += 1
        if s.meta.get("diverged"):
            kind, reason = "BlowUp", "non-finite values"
            flags.append("diverged")
            break
        traj.record(s)
        if record:
            n = traj.sup_sum[-1]
            due = (steps % controls.snapshot_every == 0
                   or n >= controls.snapshot_growth * last_snap_norm
                   or n <= last_snap_norm / controls.snapshot_growth
                   or snap_to_out)
            if due:
                traj.snapshots.append(s)
                last_snap_norm = max(n, 1e-300)

    if record and traj.snapshots[-1] is not s and s.finite:
        traj.snapshots.append(s)
    peak = float(np.nanmax(traj.sup_sum))
    out = SolveOutcome(kind="", t_end=s.t if s.finite else traj.times[-1], horizon=horizon,
                       peak_norm=peak, trajectory=traj, final=s, steps=steps, flags=flags)
    if kind == "BlowUp":
        out.kind = "BlowUp"
        out.reason = reason
        try:
            fit = fit_blowup_rate(traj.times, traj.sup_sum)
            out.rate_fit = fit
            out.T_est = fit.T_est
        except DataError as exc:
            out.flags.append(f"no rate fit: {exc}")
            out.T_est = traj.times[-1]
        return out
    if kind == "Undecided":
        out.kind, out.reason = kind, reason
        return out
    final = traj.sup_sum[-1]
    if final <= controls.quiescence_cap:
        out.kind = "Global"
        out.reason = "decayed" if infinite else "quiescent at horizon"
    elif final >= controls.blow_norm_cap / 10.0:
        out.kind, out.reason = "Undecided", "within 10x of the blow-up cap at horizon"
    else:
        out.kind, out.reason = "Undecided", "not quiescent at horizon"
    return out


# -- checkpoints ------------------------------------------------------------

MAGIC = b"LVB1"


def write_checkpoint(path, state: State, grid: Grid, q=1.0, r=1.0):
    """Binary little-endian checkpoint: magic, dim, N per axis, extents, q, r, t, u, v."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<i", grid.dim))
        fh.write(struct.pack(f"<{grid.dim}i", *grid.shape))
        fh.write(struct.pack(f"<{2 * grid.dim}d", *[x for ext in grid.extents for x in ext]))
        fh.write(struct.pack("<3d", float(q), float(r), float(state.t)))
        fh.write(np.ascontiguousarray(state.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.v, dtype="<f8").tobytes())


def read_checkpoint(path, bc="dirichlet"):
    """Return (state, grid, q, r); ``bc`` is not stored in the format."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise DataError(f"{path}: not an LVB1 checkpoint")
    off = 4
    (dim,) = struct.unpack_from("<i", data, off)
    off += 4
    if dim not in (1, 2):
        raise DataError(f"{path}: invalid dimension {dim}")
    shape = struct.unpack_from(f"<{dim}i", data, off)
    off += 4 * dim
    ext = struct.unpack_from(f"<{2 * dim}d", data, off)
    off += 16 * dim
    q, r, t = struct.unpack_from("<3d", data, off)
    off += 24
    n = int(np.prod(shape))
    if len(data) != off + 16 * n:
        raise DataError(f"{path}: truncated checkpoint")
    u = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(shape).astype(float)
    v = np.frombuffer(data, dtype="<f8", count=n, offset=off + 8 * n).reshape(shape).astype(float)
    grid = Grid(tuple((ext[2 * k], ext[2 * k + 1]) for k in range(dim)), tuple(shape), bc)
    return State(u, v, t), grid, q, r
