"""JSON configuration files.

Top level (all keys optional unless noted)::

    version        1 (required)
    dim            1 | 2                     (default 1)
    extents        [[lo, hi], ...]           (default [[0, 1]] per axis)
    bc             "dirichlet" | "neumann" | "whole_space" | null (= whole_space)
    q, r           exponents                 (default 1, 1)
    coefficients   {a1, a2, b1, b2, c1, c2}  (required; number or {"kind": ...})
    period         T for periodic coefficients (taken from sampled tables if absent)
    class_params   {eps0, M0, lipschitz}
    horizon        number | "inf"
    grid           N | [N, N]                (default 128)
    initial        {u, v}: number or expression in x, y
    output_times   [t, ...]
    controls       StepControls fields
    threshold      {alpha_lo, alpha_hi, tol, horizon}
    periodic       PeriodicControls fields plus method, lambda, lambdas, beta
    ensemble       {size, eps0, M0, amplitude: [lo, hi]}

Unknown keys anywhere are rejected by name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .coefficients import CoefficientField, from_json
from .errors import ConfigError, DataError, LVError
from .integrate import StepControls
from .model import COEFFICIENT_NAMES, ClassParams, ProblemSpec, validate_problem
from .periodic import PeriodicControls

VERSION = 1

TOP_KEYS = {"version", "dim", "extents", "bc", "q", "r", "coefficients", "period",
            "class_params", "horizon", "grid", "initial", "output_times", "controls",
            "threshold", "periodic", "ensemble", "name"}
THRESHOLD_KEYS = {"alpha_lo", "alpha_hi", "tol", "horizon"}
PERIODIC_EXTRA = {"method", "lambda", "lambdas", "beta"}
ENSEMBLE_KEYS = {"size", "eps0", "M0", "amplitude", "horizon"}
BC_ALIASES = {"dirichlet": "dirichlet", "neumann": "neumann", "whole_space": "whole_space",
              "none": "whole_space", None: "whole_space"}


@dataclass
class Config:
    spec: ProblemSpec
    grid: tuple
    controls: StepControls
    horizon: float
    initial: dict = field(default_factory=dict)
    output_times: tuple = ()
    threshold: dict = field(default_factory=dict)
    periodic: dict = field(default_factory=dict)
    periodic_controls: PeriodicControls = field(default_factory=PeriodicControls)
    ensemble: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def make_grid(self, n=None):
        return self.spec.grid(n if n is not None else self.grid)

    def initial_state(self, grid):
        from .state import State
        from .threshold import default_profile

        if not self.initial:
            p = default_profile(grid)
            return State(p.copy(), p.copy(), 0.0)
        out = []
        for name in ("u", "v"):
            cf = self.initial[name]
            val = np.broadcast_to(cf.evaluate(grid.mesh, 0.0), grid.shape).astype(float)
            if np.any(val < 0):
                raise ConfigError(f"initial {name} is negative somewhere on the grid")
            out.append(val)
        return State(out[0], out[1], 0.0)


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key {extra[0]!r}")


def _number(x, where, allow_inf=False):
    if allow_inf and isinstance(x, str) and x.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _initial_field(x, name):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return CoefficientField.constant(x)
    if isinstance(x, str):
        return CoefficientField.expression(x, name)
    raise ConfigError(f"initial.{name}: expected a number or an expression string")


def _dataclass_kwargs(cls, obj, where):
    names = {f.name for f in fields(cls)}
    _check_keys(obj, names, where)
    return dict(obj)


def build(raw: dict) -> Config:
    """Validate a parsed configuration document."""
    _check_keys(raw, TOP_KEYS, "config")
    if raw.get("version") != VERSION:
        raise ConfigError(f"config version {raw.get('version')!r} not supported (expected {VERSION})")
    dim = int(raw.get("dim", 1))
    extents = raw.get("extents", [[0.0, 1.0]] * dim)
    if not isinstance(extents, list) or len(extents) != dim:
        raise ConfigError(f"extents: need {dim} [lo, hi] pairs")
    extents = tuple((_number(a, "extents"), _number(b, "extents")) for a, b in extents)
    if any(not b > a for a, b in extents):
        raise ConfigError("extents: need lo < hi on every axis")
    bc_raw = raw.get("bc", "dirichlet")
    key = bc_raw.lower() if isinstance(bc_raw, str) else bc_raw
    if key not in BC_ALIASES:
        raise ConfigError(f"bc: unknown boundary condition {bc_raw!r}")
    bc = BC_ALIASES[key]

    coeffs_raw = raw.get("coefficients")
    if coeffs_raw is None:
        raise ConfigError("coefficients: required")
    _check_keys(coeffs_raw, COEFFICIENT_NAMES, "coefficients")
    missing = [n for n in COEFFICIENT_NAMES if n not in coeffs_raw]
    if missing:
        raise ConfigError(f"coefficients: missing {', '.join(missing)}")
    try:
        coeffs = {n: from_json(n, coeffs_raw[n]) for n in COEFFICIENT_NAMES}
    except DataError as exc:
        raise ConfigError(f"coefficients: {exc}") from exc

    period = raw.get("period")
    period = None if period is None else _number(period, "period")
    table_periods = {cf.period for cf in coeffs.values()
                     if cf.kind == "sampled" and cf.period is not None}
    if len(table_periods) > 1:
        raise ConfigError(f"sampled coefficients disagree on the period: {sorted(table_periods)}")
    if table_periods:
        (tp,) = table_periods
        if period is None:
            period = tp
        elif not math.isclose(period, tp, rel_tol=1e-12):
            raise ConfigError(f"period {period} disagrees with sampled-table period {tp}")

    cp = None
    if raw.get("class_params") is not None:
        c = raw["class_params"]
        _check_keys(c, {"eps0", "M0", "lipschitz"}, "class_params")
        lip = c.get("lipschitz")
        cp = ClassParams(_number(c["eps0"], "class_params.eps0"), _number(c["M0"], "class_params.M0"),
                         math.inf if lip is None else _number(lip, "class_params.lipschitz", True))
    horizon = _number(raw.get("horizon", 1.0), "horizon", allow_inf=True)
    try:
        spec = ProblemSpec(dim=dim, extents=extents, bc=bc, coefficients=coeffs,
                           q=_number(raw.get("q", 1.0), "q"), r=_number(raw.get("r", 1.0), "r"),
                           period=period, class_params=cp, horizon=horizon)
    except LVError as exc:
        raise ConfigError(str(exc)) from exc

    g = raw.get("grid", 128)
    shape = tuple(int(v) for v in (g if isinstance(g, list) else [g] * dim))
    if len(shape) != dim or any(n < 1 for n in shape):
        raise ConfigError(f"grid: need {dim} positive sizes")
    report = validate_problem(spec, spec.grid(shape))
    if not report.valid:
        raise ConfigError("invalid problem: " + report.describe())

    initial = {}
    if raw.get("initial") is not None:
        _check_keys(raw["initial"], {"u", "v"}, "initial")
        initial = {n: _initial_field(raw["initial"][n], n) for n in ("u", "v")}

    try:
        controls = StepControls(**_dataclass_kwargs(StepControls, raw.get("controls", {}),
                                                    "controls"))
    except (TypeError, LVError) as exc:
        raise ConfigError(f"controls: {exc}") from exc

    thr = raw.get("threshold", {})
    _check_keys(thr, THRESHOLD_KEYS, "threshold")
    per = dict(raw.get("periodic", {}))
    _check_keys(per, {f.name for f in fields(PeriodicControls)} | PERIODIC_EXTRA, "periodic")
    pc = PeriodicControls(**{k: v for k, v in per.items() if k not in PERIODIC_EXTRA})
    ens = raw.get("ensemble", {})
    _check_keys(ens, ENSEMBLE_KEYS, "ensemble")

    outs = tuple(_number(t, "output_times") for t in raw.get("output_times", []))
    return Config(spec=spec, grid=shape if dim > 1 else shape[0], controls=controls,
                  horizon=horizon, initial=initial, output_times=outs, threshold=dict(thr),
                  periodic=per, periodic_controls=pc, ensemble=dict(ens), raw=raw)


def parse_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return build(raw)
