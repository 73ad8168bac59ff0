"""Coefficient fields a_i(x, t), b_i(x, t), c_i(x, t).

Three kinds are supported:

``constant``
    a single number.
``expr``
    a closed-form expression in ``x``, ``y`` (2D only) and ``t`` built from
    the grammar below.
``sampled``
    a table on a tensor grid of sample positions, interpolated multilinearly.
    An optional ``t`` axis is periodic when a period is given.

Expression grammar::

    expr   := number | pi | x | y | t
            | expr (+ | - | * | /) expr | -expr | +expr
            | expr ** number
            | sin(expr) | cos(expr) | exp(expr)

Nothing else (attribute access, names, calls to other functions) is accepted.
When the owning problem is time-periodic with period T, every kind is
evaluated at ``t mod T`` so that f(x, t + T) == f(x, t) holds exactly.
"""

from __future__ import annotations

import ast
import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, ExpressionError

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_VARS = ("x", "y", "t")
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}


def _check(node, name):
    if isinstance(node, ast.Expression):
        return _check(node.body, name)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"coefficient {name!r}: unsupported literal {node.value!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in _VARS and node.id != "pi":
            raise ExpressionError(f"coefficient {name!r}: unknown symbol {node.id!r}")
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _check(node.operand, name)
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exponent = node.right
            if isinstance(exponent, ast.UnaryOp) and isinstance(exponent.op, ast.USub):
                exponent = exponent.operand
            if not (isinstance(exponent, ast.Constant) and isinstance(exponent.value, (int, float))):
                raise ExpressionError(f"coefficient {name!r}: exponent must be a number")
            return _check(node.left, name)
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"coefficient {name!r}: operator {type(node.op).__name__} not allowed")
        _check(node.left, name)
        _check(node.right, name)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError(f"coefficient {name!r}: only sin, cos, exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"coefficient {name!r}: {node.func.id} takes one argument")
        return _check(node.args[0], name)
    raise ExpressionError(f"coefficient {name!r}: unsupported syntax {type(node).__name__}")


@functools.lru_cache(maxsize=256)
def _compile(source: str, name: str = "?"):
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"coefficient {name!r}: cannot parse {source!r}: {exc.msg}") from None
    _check(tree, name)
    code = compile(tree, f"<coefficient {name}>", "eval")
    used = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}
    return code, used


def _eval_code(code, x, y, t):
    env = {"__builtins__": {}, "pi": math.pi, "x": x, "y": y, "t": t, **_FUNCS}
    return eval(code, env)  # noqa: S307 - AST is whitelisted in _check


@dataclass(frozen=True)
class CoefficientField:
    """A deterministic coefficient field; see module docstring for kinds."""

    kind: str
    value: float = 0.0
    expr: str = ""
    axes: tuple = ()           # sampled: tuple of (axis_name, positions)
    values: Optional[np.ndarray] = field(default=None, compare=False)
    period: Optional[float] = None

    @classmethod
    def constant(cls, value):
        value = float(value)
        if not math.isfinite(value):
            raise DataError(f"non-finite constant coefficient {value!r}")
        return cls(kind="constant", value=value)

    @classmethod
    def expression(cls, source, name="?"):
        _compile(source, name)
        return cls(kind="expr", expr=source)

    @classmethod
    def sampled(cls, axes: Sequence[tuple], values, period=None, name="?"):
        axes = tuple((str(a), np.asarray(p, dtype=float)) for a, p in axes)
        values = np.asarray(values, dtype=float)
        shape = tuple(len(p) for _, p in axes)
        if values.shape != shape:
            raise DataError(f"coefficient {name!r}: table shape {values.shape} != axes {shape}")
        if not np.all(np.isfinite(values)):
            raise DataError(f"coefficient {name!r}: non-finite sample in table")
        for axis, pos in axes:
            if axis not in _VARS:
                raise DataError(f"coefficient {name!r}: unknown axis {axis!r}")
            if len(pos) < 1 or np.any(np.diff(pos) <= 0):
                raise DataError(f"coefficient {name!r}: axis {axis!r} must be strictly increasing")
        names = [a for a, _ in axes]
        if "t" in names and period is not None:
            tpos = dict(axes)["t"]
            if tpos[0] < 0 or tpos[-1] >= period:
                raise DataError(f"coefficient {name!r}: periodic t samples must lie in [0, period)")
        values.setflags(write=False)
        return cls(kind="sampled", axes=axes, values=values,
                   period=None if period is None else float(period))

    @property
    def is_constant(self):
        return self.kind == "constant"

    @property
    def depends_on_time(self):
        if self.kind == "constant":
            return False
        if self.kind == "expr":
            return "t" in _compile(self.expr)[1]
        return any(a == "t" for a, _ in self.axes)

    def evaluate(self, coords, t, period=None):
        """Evaluate at spatial ``coords`` (tuple of broadcastable arrays) and time ``t``.

        Constants are returned as Python floats so they broadcast for free.
        """
        if period is None:
            period = self.period
        if period is not None:
            t = math.fmod(t, period)
            if t < 0:
                t += period
        if self.kind == "constant":
            return self.value
        x = coords[0] if len(coords) > 0 else 0.0
        y = coords[1] if len(coords) > 1 else 0.0
        if self.kind == "expr":
            code, _ = _compile(self.expr)
            out = _eval_code(code, x, y, t)
            shape = np.broadcast(*coords).shape if coords else ()
            out = np.broadcast_to(np.asarray(out, dtype=float), shape)
            if not np.all(np.isfinite(out)):
                raise DataError(f"expression {self.expr!r} produced a non-finite value at t={t}")
            return np.array(out) if shape else float(out)
        return self._interp(coords, t, period)

    def _interp(self, coords, t, period):
        named = {"x": coords[0] if coords else None, "y": coords[1] if len(coords) > 1 else None}
        shape = np.broadcast(*coords).shape if coords else ()
        values = self.values
        # Reduce one axis at a time by linear interpolation (multilinear overall).
        result = values
        for k, (axis, pos) in enumerate(self.axes):
            if axis == "t":
                q = np.full(shape, t, dtype=float)
                periodic = period
            else:
                q = np.broadcast_to(np.asarray(named[axis], dtype=float), shape)
                periodic = None
            result = _lerp_axis(result, pos, q, periodic, first=(k == 0))
        out = np.asarray(result, dtype=float)
        return out if out.shape else float(out)


def _lerp_axis(table, pos, q, period, first):
    """Interpolate the leading remaining axis of ``table`` at query points ``q``.

    On the first call ``table`` has the full table shape; the result has shape
    ``q.shape + remaining_axes``.  Subsequent calls carry the query shape in
    front and pick per-point entries.
    """
    n = len(pos)
    if period is not None:
        ext = np.concatenate([pos, [pos[0] + period]])
        qq = np.mod(q - pos[0], period) + pos[0]
    else:
        ext = pos
        qq = np.clip(q, pos[0], pos[-1])
    if n == 1:
        i0 = np.zeros(q.shape, dtype=int)
        i1 = i0
        w = np.zeros(q.shape)
    else:
        i0 = np.clip(np.searchsorted(ext, qq, side="right") - 1, 0, len(ext) - 2)
        i1 = i0 + 1
        w = (qq - ext[i0]) / (ext[i1] - ext[i0])
        if period is not None:
            i1 = np.where(i1 == n, 0, i1)
        else:
            i1 = np.minimum(i1, n - 1)
    if first:
        lo = table[i0]
        hi = table[i1]
    else:
        idx = np.indices(q.shape)
        lo = table[tuple(idx) + (i0,)]
        hi = table[tuple(idx) + (i1,)]
    w = w.reshape(w.shape + (1,) * (lo.ndim - w.ndim))
    return (1.0 - w) * lo + w * hi


def from_json(name, obj):
    """Build a CoefficientField from its JSON form; ``name`` is used in errors."""
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return CoefficientField.constant(obj)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ExpressionError(f"coefficient {name!r}: expected an object with a 'kind' field")
    kind = obj["kind"]
    allowed = {"constant": {"kind", "value"},
               "expr": {"kind", "expr"},
               "sampled": {"kind", "axes", "values", "period"}}
    if kind not in allowed:
        raise ExpressionError(f"coefficient {name!r}: unknown kind {kind!r}")
    extra = set(obj) - allowed[kind]
    if extra:
        raise ExpressionError(f"coefficient {name!r}: unknown key {sorted(extra)[0]!r}")
    if kind == "constant":
        return CoefficientField.constant(obj["value"])
    if kind == "expr":
        if not isinstance(obj.get("expr"), str):
            raise ExpressionError(f"coefficient {name!r}: 'expr' must be a string")
        return CoefficientField.expression(obj["expr"], name)
    axes_obj = obj.get("axes")
    if not isinstance(axes_obj, dict) or not axes_obj:
        raise ExpressionError(f"coefficient {name!r}: sampled kind needs an 'axes' object")
    order = [a for a in ("x", "y", "t") if a in axes_obj]
    if len(order) != len(axes_obj):
        raise ExpressionError(f"coefficient {name!r}: unknown axis in {sorted(axes_obj)}")
    axes = [(a, axes_obj[a]) for a in order]
    try:
        values = np.asarray(obj["values"], dtype=float)
    except (TypeError, ValueError):
        raise DataError(f"coefficient {name!r}: 'values' is not a numeric table") from None
    return CoefficientField.sampled(axes, values, obj.get("period"), name)


def to_json(cf: CoefficientField):
    if cf.kind == "constant":
        return {"kind": "constant", "value": cf.value}
    if cf.kind == "expr":
        return {"kind": "expr", "expr": cf.expr}
    out = {"kind": "sampled",
           "axes": {a: p.tolist() for a, p in cf.axes},
           "values": cf.values.tolist()}
    if cf.period is not None:
        out["period"] = cf.period
    return out
