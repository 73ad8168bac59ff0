"""Problem definitions, the coefficient class checks and exact scalar quantities.

The system is

    u_t - Lap u = a1 u + u^r (c1 v^q - b1 u^q)
    v_t - Lap v = a2 v + v^r (c2 u^q - b2 v^q)

with q = r = 1 giving the cooperative Lotka-Volterra system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .coefficients import CoefficientField
from .errors import DataError, ParameterError
from .grid import BC_KINDS, Grid, sample_at
from .state import State

COEFFICIENT_NAMES = ("a1", "a2", "b1", "b2", "c1", "c2")


@dataclass(frozen=True)
class ClassParams:
    """Parameters of the coefficient class: bounds [eps0, M0] and modulus omega(s) = L*s."""

    eps0: float
    M0: float
    lipschitz: float = math.inf


@dataclass(frozen=True)
class ProblemSpec:
    dim: int
    extents: tuple
    bc: str
    coefficients: dict
    q: float = 1.0
    r: float = 1.0
    period: Optional[float] = None
    class_params: Optional[ClassParams] = None
    horizon: Optional[float] = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError("dim must be 1 or 2")
        if self.bc not in BC_KINDS:
            raise ParameterError(f"unknown boundary condition {self.bc!r}")
        if len(self.extents) != self.dim:
            raise ParameterError("need one extent per axis")
        object.__setattr__(self, "extents", tuple((float(a), float(b)) for a, b in self.extents))
        coeffs = dict(self.coefficients)
        missing = [n for n in COEFFICIENT_NAMES if n not in coeffs]
        if missing:
            raise ParameterError(f"missing coefficients {missing}")
        for name, cf in coeffs.items():
            if name not in COEFFICIENT_NAMES:
                raise ParameterError(f"unknown coefficient {name!r}")
            if not isinstance(cf, CoefficientField):
                coeffs[name] = CoefficientField.constant(cf)
        object.__setattr__(self, "coefficients", coeffs)
        if self.period is not None and not self.period > 0:
            raise ParameterError("period must be positive")

    @classmethod
    def constant(cls, a1=0.0, a2=0.0, b1=1.0, b2=1.0, c1=3.0, c2=3.0, *, extents=((0.0, 1.0),),
                 bc="dirichlet", **kw):
        """Convenience constructor for constant coefficients."""
        coeffs = {n: CoefficientField.constant(v)
                  for n, v in zip(COEFFICIENT_NAMES, (a1, a2, b1, b2, c1, c2))}
        return cls(dim=len(extents), extents=extents, bc=bc, coefficients=coeffs, **kw)

    def with_coefficients(self, **fields):
        coeffs = dict(self.coefficients)
        for k, v in fields.items():
            coeffs[k] = v if isinstance(v, CoefficientField) else CoefficientField.constant(v)
        return replace(self, coefficients=coeffs)

    def grid(self, n):
        return Grid.uniform(self.extents, n, self.bc)

    @property
    def constant_coefficients(self):
        return all(cf.is_constant for cf in self.coefficients.values())

    @property
    def autonomous(self):
        return not any(cf.depends_on_time for cf in self.coefficients.values())

    @property
    def scale_invariant(self):
        """a1 = a2 = 0 and constant b, c."""
        c = self.coefficients
        return (all(c[n].is_constant for n in COEFFICIENT_NAMES)
                and c["a1"].value == 0.0 and c["a2"].value == 0.0)

    def const(self, name):
        cf = self.coefficients[name]
        if not cf.is_constant:
            raise ParameterError(f"coefficient {name} is not constant")
        return cf.value

    def sampler(self, grid: Grid):
        return CoefficientSampler(self, grid)


class CoefficientSampler:
    """Evaluates the six coefficients on a grid, caching time-independent ones."""

    def __init__(self, spec: ProblemSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        self._static = {}
        for name, cf in spec.coefficients.items():
            if not cf.depends_on_time:
                self._static[name] = cf.evaluate(grid.mesh, 0.0, spec.period)

    def __call__(self, t):
        out = dict(self._static)
        for name, cf in self.spec.coefficients.items():
            if name not in out:
                out[name] = cf.evaluate(self.grid.mesh, t, self.spec.period)
        return out

    @property
    def time_dependent(self):
        return len(self._static) < len(COEFFICIENT_NAMES)


# -- validation -------------------------------------------------------------

@dataclass
class Violation:
    code: str
    message: str
    worst: float = math.nan
    location: tuple = ()


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self):
        return not self.violations

    def __bool__(self):
        return self.valid

    def add(self, code, message, worst=math.nan, location=()):
        self.violations.append(Violation(code, message, float(worst), tuple(location)))

    def describe(self):
        return "; ".join(v.message for v in self.violations)


def _sample_times(spec, n_times):
    if spec.autonomous:
        return np.array([0.0])
    span = spec.period if spec.period is not None else (spec.horizon if spec.horizon and
                                                         math.isfinite(spec.horizon) else 1.0)
    endpoint = spec.period is None
    return np.linspace(0.0, span, n_times, endpoint=endpoint)


def _worst(arr, grid, tvals, idx_fn):
    k = int(idx_fn(arr))
    it, rest = divmod(k, grid.size)
    point = tuple(float(ax.flat[rest]) for ax in grid.mesh)
    return float(arr.flat[k]), point + (float(tvals[it]),)


def validate_problem(spec: ProblemSpec, grid: Optional[Grid] = None, n_times=33) -> ValidationReport:
    """Check exponents, the coefficient class and the coupling margin on grid samples.

    Without ``class_params`` only the strict conditions b_i, c_i > 0 and
    c1 c2 > b1 b2 are checked.
    """
    report = ValidationReport()
    q, r = spec.q, spec.r
    if not r > 0:
        report.add("r_positive", f"r = {r} must be positive", r)
    if not q >= r:
        report.add("q_ge_r", f"q = {q} must satisfy q >= r = {r}", q - r)
    if not q + r > 1:
        report.add("q_plus_r", f"q + r = {q + r} must exceed 1", q + r)
    if not check_dimension_condition(spec.dim, q, r):
        report.add("dimension", f"q + r = {q + r} violates the dimension condition for n = {spec.dim}")

    if grid is None:
        grid = spec.grid(16)
    if grid.extents != spec.extents or grid.dim != spec.dim:
        raise ParameterError(f"grid extents {grid.extents} incompatible with problem {spec.extents}")

    tvals = _sample_times(spec, n_times)
    samples = {}
    for name, cf in spec.coefficients.items():
        stack = np.stack([np.broadcast_to(cf.evaluate(grid.mesh, t, spec.period), grid.shape)
                          for t in tvals])
        if not np.all(np.isfinite(stack)):
            raise DataError(f"coefficient {name} has non-finite samples")
        samples[name] = stack

    cp = spec.class_params
    if cp is None:
        for name in ("b1", "b2", "c1", "c2"):
            lo, where = _worst(samples[name], grid, tvals, np.argmin)
            if not lo > 0:
                report.add(f"{name}_positive", f"{name} must be positive (min {lo:.6g})", lo, where)
        prod = samples["c1"] * samples["c2"] - samples["b1"] * samples["b2"]
        m, where = _worst(prod, grid, tvals, np.argmin)
        if not m > 0:
            report.add("coupling", f"c1*c2 > b1*b2 fails: margin {m:.6g}", m, where)
        return report

    eps0, M0 = cp.eps0, cp.M0
    for name in ("a1", "a2"):
        big, where = _worst(np.abs(samples[name]), grid, tvals, np.argmax)
        if big > M0:
            report.add(f"{name}_bound", f"|{name}| = {big:.6g} exceeds M0 = {M0}", big, where)
    for name in ("b1", "b2", "c1", "c2"):
        lo, wlo = _worst(samples[name], grid, tvals, np.argmin)
        hi, whi = _worst(samples[name], grid, tvals, np.argmax)
        if lo < eps0:
            report.add(f"{name}_lower", f"{name} = {lo:.6g} below eps0 = {eps0}", lo, wlo)
        if hi > M0:
            report.add(f"{name}_upper", f"{name} = {hi:.6g} above M0 = {M0}", hi, whi)
    margin = samples["c1"] * samples["c2"] - samples["b1"] * samples["b2"] - eps0
    m, where = _worst(margin, grid, tvals, np.argmin)
    if m < 0:
        k = int(np.argmin(margin))
        cc = float((samples["c1"] * samples["c2"]).flat[k])
        bb = float((samples["b1"] * samples["b2"]).flat[k]) + eps0
        report.add("coupling", f"c1*c2 >= b1*b2 + eps0 fails: c1*c2 = {cc:.6g} < "
                   f"b1*b2 + eps0 = {bb:.6g}", m, where)
    if math.isfinite(cp.lipschitz):
        for name in ("b1", "b2", "c1", "c2"):
            worst = _modulus_excess(samples[name], grid, tvals, cp.lipschitz)
            if worst > 0:
                report.add(f"{name}_modulus", f"{name} increments exceed omega(s) = {cp.lipschitz}*s "
                           f"by {worst:.6g}", worst)
    return report


def _modulus_excess(stack, grid, tvals, lip):
    worst = -math.inf
    for axis, h in enumerate(grid.spacing):
        inc = np.abs(np.diff(stack, axis=axis + 1))
        if inc.size:
            worst = max(worst, float(np.max(inc)) - lip * h)
    if len(tvals) > 1:
        inc = np.abs(np.diff(stack, axis=0))
        dts = np.diff(tvals).reshape((-1,) + (1,) * grid.dim)
        worst = max(worst, float(np.max(inc - lip * dts)))
    return worst


def check_dimension_condition(n, q, r):
    """True iff n <= 2 or q + r < n(n+2)/(n-1)^2."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    if n <= 2:
        return True
    return q + r < n * (n + 2) / (n - 1) ** 2


# -- exact scalar quantities ------------------------------------------------

def proportionality_constant(b1, b2, c1, c2, q=1.0):
    """K with u = K v on the invariant manifold (valid for r = 1)."""
    return ((c1 + b2) / (c2 + b1)) ** (1.0 / q)


def reduced_constant(b1, c1, K, q=1.0):
    """Constant c of the scalar equation u_t - Lap u = c u^(q+r) obeyed on u = K v."""
    return c1 / K ** q - b1


def manifold_constants(spec: ProblemSpec):
    """(K, c) for a constant-coefficient problem."""
    b1, b2, c1, c2 = (spec.const(n) for n in ("b1", "b2", "c1", "c2"))
    K = proportionality_constant(b1, b2, c1, c2, spec.q)
    return K, reduced_constant(b1, c1, K, spec.q)


# -- scaling ----------------------------------------------------------------

@dataclass(frozen=True)
class ScalingParams:
    lam: float
    x0: tuple = (0.0,)
    t0: float = 0.0
    q: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"scale factor must be positive, got {self.lam}")
        if not self.q + self.r > 1:
            raise ParameterError("amplitude exponent needs q + r > 1")
        if isinstance(self.x0, (int, float)):
            object.__setattr__(self, "x0", (float(self.x0),))

    @property
    def amplitude_exponent(self):
        return 2.0 / (self.q + self.r - 1.0)

    @property
    def amplitude(self):
        return self.lam ** self.amplitude_exponent


def rescale_function(f, p: ScalingParams):
    """Closed-form rescaling (y, s) -> lam^(2/(q+r-1)) f(x0 + lam*y, t0 + lam^2*s).

    The result takes its own time as keyword ``t``, so rescalings compose.
    """
    amp = p.amplitude

    def g(*coords, t=0.0):
        xs = tuple(x0 + p.lam * y for x0, y in zip(p.x0, coords))
        return amp * f(*xs, t=p.t0 + p.lam ** 2 * t)

    return g


def rescale_state(state: State, p: ScalingParams, spec: ProblemSpec, source: Grid,
                  target: Optional[Grid] = None, tol=1e-12):
    """Rescale a grid state: u~(y) = lam^(2/(q+r-1)) u(x0 + lam*y), same for v.

    The rescaled state lives at time s = (t - t0)/lam^2.  Source values are
    needed at x0 + lam*y; points outside the source box are set to zero and a
    warning is issued when the discarded data are not negligible.
    """
    if not spec.scale_invariant:
        warnings.warn("rescaling a problem that is not scale invariant", stacklevel=2)
    if (p.q, p.r) != (spec.q, spec.r):
        raise ParameterError("scaling exponents must match the problem exponents")
    target = source if target is None else target
    x0 = tuple(p.x0) + (0.0,) * (target.dim - len(p.x0))
    pts = tuple(x0[k] + p.lam * target.mesh[k] for k in range(target.dim))
    amp = p.amplitude
    u = amp * sample_at(state.u, source, pts, outside=0.0)
    v = amp * sample_at(state.v, source, pts, outside=0.0)
    _warn_on_clip(state, source, pts, tol)
    meta = dict(state.meta)
    meta["scaling"] = {"lam": p.lam, "x0": x0, "t0": p.t0,
                       "time_map": "t = t0 + lam^2 * s"}
    return State(u, v, (state.t - p.t0) / p.lam ** 2, meta)


def _warn_on_clip(state, source, pts, tol):
    # Mass of the source field that the rescaled window cannot see.
    covered = np.ones(source.shape, dtype=bool)
    for k, (lo, hi) in enumerate(source.extents):
        c = source.mesh[k]
        covered &= (c >= np.min(pts[k])) & (c <= np.max(pts[k]))
    peak = max(float(np.max(state.u)), float(np.max(state.v)), 1e-300)
    lost = max(float(np.max(np.where(covered, 0.0, state.u), initial=0.0)),
               float(np.max(np.where(covered, 0.0, state.v), initial=0.0)))
    if lost > tol * peak:
        warnings.warn(f"rescaled window clips data of relative size {lost / peak:.3g}", stacklevel=3)
