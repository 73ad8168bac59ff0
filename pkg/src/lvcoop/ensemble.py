"""Seeded random problems in the coefficient class.

Per-run seeds come from a splitmix64 expansion of one master seed, so member
``i`` is the same regardless of how many members are generated or in which
order they run.  Fields are expressions

    mid + half * sum_k w_k basis_k(x, t) / sum_k |w_k|

with |basis_k| <= 1, so every sample lies in [mid - half, mid + half].
The ranges are chosen so that the class bounds and the coupling margin
c1 c2 >= b1 b2 + eps0 hold by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import CoefficientField
from .errors import ParameterError
from .model import COEFFICIENT_NAMES, ClassParams, ProblemSpec, validate_problem

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    """One splitmix64 output for state ``x`` (the state is advanced first)."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def member_seed(master, index):
    """Seed of ensemble member ``index``: splitmix64 at state master + index * golden."""
    return splitmix64((int(master) + int(index) * GOLDEN) & MASK64)


def _num(x):
    return format(float(x), ".17g")


def random_expression(rng: np.random.Generator, lo, hi, extents, modes=2, period=None):
    """Low-order Fourier field with values in [lo, hi]."""
    if not hi >= lo:
        raise ParameterError("empty range")
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    if half == 0.0:
        return _num(mid)
    names = ("x", "y")[:len(extents)]
    terms = []
    for name, (a, b) in zip(names, extents):
        for k in range(1, modes + 1):
            fn = "cos" if rng.random() < 0.5 else "sin"
            terms.append((rng.uniform(-1, 1), f"{fn}({_num(k * math.pi / (b - a))}*({name}-{_num(a)}))"))
    if period is not None:
        fn = "cos" if rng.random() < 0.5 else "sin"
        terms.append((rng.uniform(-1, 1), f"{fn}({_num(2 * math.pi / period)}*t)"))
    total = sum(abs(w) for w, _ in terms)
    if total == 0.0:
        return _num(mid)
    body = " + ".join(f"{_num(w / total)}*{b}" for w, b in terms)
    return f"{_num(mid)} + {_num(half)}*({body})"


def class_ranges(cp: ClassParams, a_bound=1.0):
    """(b range, c range, a range) guaranteeing the class by construction."""
    b_lo = cp.eps0
    b_hi = min(cp.M0, 3.0 * cp.eps0)
    c_lo = math.sqrt(b_hi * b_hi + cp.eps0) * (1.0 + 1e-9)
    c_hi = cp.M0
    if c_lo > c_hi:
        raise ParameterError(f"class with eps0={cp.eps0}, M0={cp.M0} admits no coupled pair")
    a = min(a_bound, cp.M0)
    return (b_lo, b_hi), (c_lo, c_hi), (-a, a)


@dataclass
class Member:
    index: int
    seed: int
    spec: ProblemSpec
    amplitude: float


def random_problem(rng: np.random.Generator, cp: ClassParams, extents=((0.0, 1.0),),
                   bc="dirichlet", period: Optional[float] = None, a_bound=1.0, modes=2):
    br, cr, ar = class_ranges(cp, a_bound)
    ranges = {"a1": ar, "a2": ar, "b1": br, "b2": br, "c1": cr, "c2": cr}
    coeffs = {n: CoefficientField.expression(random_expression(rng, *ranges[n], extents, modes,
                                                               period), n)
              for n in COEFFICIENT_NAMES}
    return ProblemSpec(dim=len(extents), extents=tuple(extents), bc=bc, coefficients=coeffs,
                       period=period, class_params=cp)


def generate(master_seed, n, cp: ClassParams = ClassParams(0.5, 4.0), extents=((0.0, 1.0),),
             bc="dirichlet", period: Optional[float] = None, amplitude=(10.0, 30.0),
             check=True):
    """Ensemble members 0..n-1; each passes validate_problem when ``check``."""
    out = []
    for i in range(n):
        seed = member_seed(master_seed, i)
        rng = np.random.default_rng(seed)
        spec = random_problem(rng, cp, extents, bc, period)
        alpha = float(rng.uniform(*amplitude))
        if check:
            report = validate_problem(spec, spec.grid(32))
            if not report.valid:
                raise ParameterError(f"member {i} left the class: {report.describe()}")
        out.append(Member(i, seed, spec, alpha))
    return out


def bound_member(member: Member, n, horizon=2.0, controls=None, regime=(1, 0)):
    """Evolve member data alpha * profile and return its bound-statistic row."""
    from .analyze import universal_bound_statistic
    from .integrate import StepControls, evolve
    from .state import State
    from .threshold import default_profile

    grid = member.spec.grid(n)
    p = member.amplitude * default_profile(grid)
    controls = controls or StepControls(dt_init=1e-4, dt_max=1e-4)
    out = evolve(member.spec, grid, State(p, p.copy(), 0.0), horizon, controls)
    T = out.T_est if out.kind == "BlowUp" else math.inf
    rep = universal_bound_statistic(out.trajectory, T, regime, grid)
    return {"index": member.index, "seed": member.seed, "n": n, "alpha": member.amplitude,
            "kind": out.kind, "T": T, "c_emp": rep.c_emp,
            "argmax_t": rep.argmax[0] if rep.argmax else math.nan,
            "slope": out.rate_fit.slope if out.rate_fit is not None else math.nan}
