"""Principal Dirichlet eigenpair, the adjoint periodic eigenpair and the
periodic linear solve  w_t - Lap w = f,  w = 0 on the boundary,  w(0) = w(T)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericalError, ParameterError
from .grid import DiffusionSolver, Grid, apply_laplacian, laplacian_matrix


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray      # normalised so that max = 1, positive inside
    residual: float         # ||(-Lap_h) phi - value * phi||_inf
    iterations: int = 0


@dataclass
class PeriodicEigenPair:
    value: float
    phi: np.ndarray         # shape (nt + 1,) + grid.shape, phi[0] == phi[nt]
    period: float
    residual: float         # space-time residual of -phi_t - Lap phi - value*phi
    floquet_multiplier: float = math.nan
    eigen: EigenPair = None


def principal_eigenvalue(grid: Grid, tol=1e-10, max_iter=500) -> EigenPair:
    """Least eigenvalue of -Lap_h by inverse power iteration with a Rayleigh quotient."""
    if grid.bc != "dirichlet":
        raise ParameterError("principal eigenvalue is computed for Dirichlet grids")
    A = (-laplacian_matrix(grid)).tocsc()
    lu = spla.splu(A)
    x = np.ones(grid.size)
    lam = 0.0
    res = math.inf
    for it in range(1, max_iter + 1):
        y = lu.solve(x)
        x = y / np.max(np.abs(y))
        Ax = A @ x
        lam = float(x @ Ax) / float(x @ x)
        res = float(np.max(np.abs(Ax - lam * x)))
        if res <= tol * lam:
            break
    else:
        raise NumericalError(f"inverse iteration did not converge (residual {res:.3g})")
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return EigenPair(value=lam, vector=x.reshape(grid.shape), residual=res, iterations=it)


def discrete_eigenvalue_1d(n, length):
    """Closed-form least eigenvalue of the vertex-centred Dirichlet Laplacian."""
    h = length / (n + 1)
    return 2.0 / h ** 2 * (1.0 - math.cos(math.pi * h / length))


def adjoint_periodic_eigenpair(grid: Grid, period, nt=64, tol=1e-6) -> PeriodicEigenPair:
    """Positive T-periodic solution of -phi_t - Lap phi = Lambda phi.

    The operator is autonomous, so the principal pair is (Lambda_1, phi_1)
    extended constantly in time.  The returned residual is the full
    space-time residual with phi_t by periodic central differences; the
    Floquet multiplier of the backward-Euler propagator over one period is
    reported as a cross-check ((1 + dt Lambda_1)^(-nt)).
    """
    if not period > 0:
        raise ParameterError("period must be positive")
    eig = principal_eigenvalue(grid)
    phi = np.broadcast_to(eig.vector, (nt + 1,) + grid.shape).copy()
    dt = period / nt
    core = phi[:-1]
    dphi = (np.roll(core, -1, axis=0) - np.roll(core, 1, axis=0)) / (2.0 * dt)
    lap = np.stack([apply_laplacian(p, grid) for p in core])
    res = float(np.max(np.abs(-dphi - lap - eig.value * core)))
    if res > tol * max(1.0, eig.value):
        raise NumericalError(f"periodic eigen residual {res:.3g} above tolerance")
    solver = DiffusionSolver(grid)
    w = eig.vector
    for _ in range(nt):
        w = solver.solve(w, dt)
    mult = float(np.sum(w * eig.vector) / np.sum(eig.vector ** 2))
    return PeriodicEigenPair(value=eig.value, phi=phi, period=period, residual=res,
                             floquet_multiplier=mult, eigen=eig)


@dataclass
class PeriodicSolution:
    w: np.ndarray              # (nt + 1,) + grid.shape, w[0] == w[nt]
    times: np.ndarray
    iterations: int
    history: list = field(default_factory=list)

    @property
    def positive_part(self):
        return np.maximum(self.w, 0.0)


Source = Union[Callable, np.ndarray, float]


def _source_array(grid, f, period, nt):
    dt = period / nt
    if callable(f):
        return np.stack([np.broadcast_to(f(*grid.mesh, t=(k + 1) * dt), grid.shape)
                         for k in range(nt)]).astype(float)
    f = np.asarray(f, dtype=float)
    if f.ndim == 0 or f.shape == grid.shape:
        return np.broadcast_to(f, (nt,) + grid.shape)
    # a leading time axis, optionally followed by a component axis
    if f.ndim in (grid.dim + 1, grid.dim + 2) and f.shape[-grid.dim:] == grid.shape:
        if f.shape[0] == nt:
            return f
        if f.shape[0] == nt + 1:
            return f[1:]
    raise ParameterError(f"source shape {f.shape} incompatible with nt={nt}, grid {grid.shape}")


def periodic_linear_solve(grid: Grid, f: Source, period, nt=None, tol=1e-13, max_iter=10_000,
                          solver: DiffusionSolver = None) -> PeriodicSolution:
    """Unique T-periodic solution of w_t - Lap w = f with Dirichlet data.

    Backward Euler with ``nt`` steps: (I - dt Lap) w[k+1] = w[k] + dt f[k].
    ``f`` may be a callable ``f(x, [y,] t=...)`` (evaluated at t[k+1]), a
    time-independent field, or an array of per-step sources of shape
    ``(nt,) + grid.shape``; several fields may be solved together by passing
    ``(nt, m) + grid.shape``.  The initial value solves w0 = Phi w0 + g, with Phi
    the homogeneous one-period propagator (norm ~ exp(-Lambda_1 T) < 1), by
    fixed-point iteration.
    """
    if grid.bc != "dirichlet":
        raise ParameterError("the periodic linear problem is posed with Dirichlet conditions")
    if not period > 0:
        raise ParameterError("period must be positive")
    if nt is None:
        nt = 100
    dt = period / nt
    src = _source_array(grid, f, period, nt)
    solver = solver or DiffusionSolver(grid)

    def sweep(w0, store=False):
        w = w0
        out = [w0] if store else None
        for k in range(nt):
            w = solver.solve(w + dt * src[k], dt)
            if store:
                out.append(w)
        return w, out

    w0 = np.zeros(src.shape[1:])
    history = []
    prev = math.inf
    scale = max(float(np.max(np.abs(src))), 1e-300)
    for it in range(1, max_iter + 1):
        w1, _ = sweep(w0)
        delta = float(np.max(np.abs(w1 - w0)))
        history.append(delta)
        w0 = w1
        if delta <= tol * max(float(np.max(np.abs(w1))), dt * scale):
            break
        if it > 3 and delta > 0.9999 * prev:
            raise NumericalError(f"periodic iteration stagnated at {delta:.3g}")
        prev = delta
    else:
        raise NumericalError("periodic iteration did not converge")
    _, traj = sweep(w0, store=True)
    w = np.stack(traj)
    w[-1] = w[0]
    return PeriodicSolution(w=w, times=np.linspace(0.0, period, nt + 1), iterations=it,
                            history=history)


def positive_part_solve(grid: Grid, f: Source, period, nt=None, **kw):
    """The map f -> w^+ built on :func:`periodic_linear_solve`."""
    return periodic_linear_solve(grid, f, period, nt, **kw).positive_part
