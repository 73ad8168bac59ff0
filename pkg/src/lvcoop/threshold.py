"""Bisection for the borderline amplitude between global existence and blow-up."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .analyze import BoundReport, universal_bound_statistic
from .errors import ParameterError
from .grid import Grid
from .integrate import SolveOutcome, StepControls, evolve
from .model import ProblemSpec
from .state import State

log = logging.getLogger(__name__)

MAX_HORIZON_FACTOR = 4.0


def default_profile(grid: Grid):
    """Product of first Dirichlet modes, or a centred Gaussian bump (max 1)."""
    if grid.bc == "dirichlet":
        out = np.ones(grid.shape)
        for (lo, hi), x in zip(grid.extents, grid.mesh):
            out = out * np.sin(np.pi * (x - lo) / (hi - lo))
        return out
    r2 = np.zeros(grid.shape)
    for (lo, hi), x in zip(grid.extents, grid.mesh):
        sigma = 0.1 * (hi - lo)
        r2 = r2 + ((x - 0.5 * (lo + hi)) / sigma) ** 2
    return np.exp(-0.5 * r2)


@dataclass
class RunRecord:
    alpha: float
    kind: str
    horizon: float
    T_est: float = math.nan
    t_end: float = math.nan
    peak_norm: float = math.nan
    reason: str = ""
    outcome: Optional[SolveOutcome] = field(default=None, repr=False)

    def row(self):
        return {"alpha": self.alpha, "kind": self.kind, "horizon": self.horizon,
                "T_est": self.T_est, "t_end": self.t_end, "peak_norm": self.peak_norm,
                "reason": self.reason}


def _profiles(grid, profile):
    if profile is None:
        p = default_profile(grid)
        return p, p
    if callable(profile):
        p = np.asarray(profile(*grid.mesh), dtype=float)
        return p, p
    if isinstance(profile, tuple):
        return tuple(np.asarray(p, dtype=float) for p in profile)
    p = np.asarray(profile, dtype=float)
    return p, p


def classify_run(spec: ProblemSpec, grid: Grid, alpha, profile=None, horizon=2.0,
                 controls: StepControls = None, keep=False) -> RunRecord:
    """Evolve (alpha*phi_u, alpha*phi_v) and classify the outcome.

    ``profile`` is an array, a callable of the grid coordinates, or a pair of
    arrays for asymmetric data.
    """
    if alpha < 0:
        raise ParameterError("amplitude must be nonnegative")
    pu, pv = _profiles(grid, profile)
    if np.any(pu < 0) or np.any(pv < 0):
        raise ParameterError("profile must be nonnegative")
    out = evolve(spec, grid, State(alpha * pu, alpha * pv, 0.0), horizon, controls,
                 record=keep)
    rec = RunRecord(alpha=float(alpha), kind=out.kind, horizon=float(horizon), T_est=out.T_est,
                    t_end=out.t_end, peak_norm=out.peak_norm, reason=out.reason)
    if keep:
        rec.outcome = out
    return rec


@dataclass
class ThresholdResult:
    bracket: tuple
    lo_kind: str
    hi_kind: str
    history: list
    undecided: int = 0
    warnings: list = field(default_factory=list)
    statistic: Optional[BoundReport] = None
    horizon: float = math.nan

    @property
    def width(self):
        return (self.bracket[1] - self.bracket[0]) / self.bracket[1]

    def audit(self):
        """(classifications monotone in alpha, T_est nonincreasing over BlowUp runs)."""
        return monotone_classifications(self.history), blowup_times_monotone(self.history)

    def rows(self):
        return [r.row() for r in self.history]


def monotone_classifications(history):
    glob = [r.alpha for r in history if r.kind == "Global"]
    blow = [r.alpha for r in history if r.kind == "BlowUp"]
    return not glob or not blow or max(glob) < min(blow)


def blowup_times_monotone(history, rtol=1e-9):
    runs = sorted((r for r in history if r.kind == "BlowUp"), key=lambda r: r.alpha)
    T = [r.T_est for r in runs]
    return all(b <= a * (1.0 + rtol) for a, b in zip(T, T[1:]))


def bisect_threshold(spec: ProblemSpec, grid: Grid, alpha_lo, alpha_hi, tol=1e-3, horizon=2.0,
                     controls: StepControls = None, profile=None, max_iter=100,
                     statistic=True, on_run: Callable = None) -> ThresholdResult:
    """Bisect until (alpha_hi - alpha_lo) <= tol * alpha_hi.

    Undecided midpoints are rerun with doubled horizons up to 4x the base
    horizon; if still undecided they count as blow-up and a warning is
    recorded.  With ``statistic`` the last Global run is kept and its
    universal-bound statistic (regime (1,0), T = inf) is attached.
    """
    if not 0 <= alpha_lo < alpha_hi:
        raise ParameterError("need 0 <= alpha_lo < alpha_hi")
    if not tol > 0:
        raise ParameterError("tolerance must be positive")
    history = []

    def run(alpha, keep=False):
        rec = classify_run(spec, grid, alpha, profile, horizon, controls, keep)
        h = horizon
        while rec.kind == "Undecided" and 2 * h <= MAX_HORIZON_FACTOR * horizon:
            h *= 2
            log.info("alpha=%.17g undecided (%s); horizon -> %g", alpha, rec.reason, h)
            history.append(rec)
            rec = classify_run(spec, grid, alpha, profile, h, controls, keep)
        history.append(rec)
        if on_run is not None:
            on_run(rec)
        return rec

    lo = run(alpha_lo, keep=statistic)
    hi = run(alpha_hi)
    if lo.kind != "Global" or hi.kind != "BlowUp":
        raise ParameterError(f"invalid bracket: alpha_lo -> {lo.kind}, alpha_hi -> {hi.kind}")
    last_global = lo
    a, b = float(alpha_lo), float(alpha_hi)
    warnings = []
    undecided = 0
    for _ in range(max_iter):
        if b - a <= tol * b:
            break
        mid = 0.5 * (a + b)
        rec = run(mid, keep=statistic)
        if rec.kind == "Global":
            a, last_global = mid, rec
        else:
            if rec.kind == "Undecided":
                undecided += 1
                warnings.append(f"alpha={mid:.17g} undecided at {MAX_HORIZON_FACTOR:g}x horizon; "
                                "counted as blow-up")
            b = mid
        if rec.kind != "Global" and rec.outcome is not None:
            rec.outcome = None    # only the Global trajectory is needed
    else:
        warnings.append("iteration budget exhausted before reaching the tolerance")
    res = ThresholdResult(bracket=(a, b), lo_kind="Global", hi_kind="BlowUp", history=history,
                          undecided=undecided, warnings=warnings, horizon=horizon)
    if statistic and last_global.outcome is not None:
        res.statistic = universal_bound_statistic(last_global.outcome.trajectory, math.inf,
                                                  (1, 0), grid)
    for r in history:
        if r is not last_global:
            r.outcome = None
    return res
