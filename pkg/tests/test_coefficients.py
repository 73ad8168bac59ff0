import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lvcoop.coefficients import CoefficientField, from_json, to_json
from lvcoop.errors import DataError, ExpressionError


def test_constant_is_float():
    cf = CoefficientField.constant(2.5)
    assert cf.evaluate((np.zeros(3),), 0.3) == 2.5
    assert isinstance(cf.evaluate((np.zeros(3),), 0.3), float)
    assert cf.is_constant and not cf.depends_on_time


def test_expression_grammar():
    cf = CoefficientField.expression("1 + 0.5*sin(2*pi*t)*cos(pi*x) - exp(-x**2)/3", "a1")
    x = np.linspace(0, 1, 7)
    want = 1 + 0.5 * np.sin(2 * np.pi * 0.2) * np.cos(np.pi * x) - np.exp(-x ** 2) / 3
    assert np.allclose(cf.evaluate((x,), 0.2), want, rtol=0, atol=1e-15)
    assert cf.depends_on_time


@pytest.mark.parametrize("src", ["__import__('os')", "x.real", "abs(x)", "z + 1", "x ** y",
                                 "lambda: 1", "[1, 2]", "x if x else 1", "sin(x, x)", "1 +"])
def test_expression_rejects(src):
    with pytest.raises(ExpressionError, match="b2"):
        CoefficientField.expression(src, "b2")


def test_expression_nonfinite():
    cf = CoefficientField.expression("exp(1000*x)", "c1")
    with pytest.raises(DataError), np.errstate(over="ignore"):
        cf.evaluate((np.linspace(0, 1, 5),), 0.0)


def test_expression_spatial_constant_broadcasts():
    cf = CoefficientField.expression("2*pi", "c1")
    out = cf.evaluate((np.zeros((3, 4)), np.zeros((3, 4))), 0.0)
    assert out.shape == (3, 4) and np.all(out == 2 * math.pi)


def _table():
    return CoefficientField.sampled([("t", [0.0, 0.25, 0.5, 0.75])], [1.0, 2.0, 0.0, -1.0],
                                    period=1.0)


def test_sampled_periodic_in_time():
    cf = _table()
    assert cf.evaluate((), 0.125) == pytest.approx(1.5)
    # wraps from the last sample to the first across t = T
    assert cf.evaluate((), 0.875) == pytest.approx(0.0)
    assert cf.evaluate((), 1.125) == pytest.approx(1.5)


@given(st.integers(-64, 64), st.integers(0, 255))
def test_periodic_exact_at_dyadic_times(k, j):
    cf = _table()
    t = j / 256.0
    assert cf.evaluate((), t + k * 1.0) == cf.evaluate((), t)


@given(st.floats(0, 10, allow_nan=False))
def test_periodic_expression(t):
    cf = CoefficientField.expression("sin(2*pi*t) + x", "a1")
    x = np.linspace(0, 1, 5)
    assert np.allclose(cf.evaluate((x,), t + 1.0, period=1.0), cf.evaluate((x,), t, period=1.0),
                       atol=1e-12)


def test_sampled_exact_on_linear_data():
    xs = np.linspace(0, 1, 5)
    cf = CoefficientField.sampled([("x", xs)], 2 * xs + 1)
    q = np.linspace(0, 1, 33)
    assert np.allclose(cf.evaluate((q,), 0.0), 2 * q + 1, atol=1e-15)


def test_sampled_bilinear_x_t():
    xs, ts = np.array([0.0, 1.0]), np.array([0.0, 0.5])
    vals = np.array([[0.0, 1.0], [2.0, 3.0]])   # f = 2x + 2t on the samples
    cf = CoefficientField.sampled([("x", xs), ("t", ts)], vals, period=1.0)
    assert cf.evaluate((np.array([0.5]),), 0.25)[0] == pytest.approx(1.5)


def test_sampled_shape_check():
    with pytest.raises(DataError):
        CoefficientField.sampled([("x", [0, 1, 2])], [1.0, 2.0])
    with pytest.raises(DataError):
        CoefficientField.sampled([("x", [0, 2, 1])], [1.0, 2.0, 3.0])
    with pytest.raises(DataError):
        CoefficientField.sampled([("t", [0, 1.0])], [1.0, 2.0], period=1.0)


@pytest.mark.parametrize("obj", [3.0, {"kind": "constant", "value": -1.5},
                                 {"kind": "expr", "expr": "1 + x"},
                                 {"kind": "sampled", "axes": {"t": [0.0, 0.5]},
                                  "values": [1.0, 2.0], "period": 1.0}])
def test_json_round_trip(obj):
    cf = from_json("a1", obj)
    again = from_json("a1", to_json(cf))
    assert again.evaluate((np.linspace(0, 1, 3),), 0.3) == pytest.approx(
        cf.evaluate((np.linspace(0, 1, 3),), 0.3))


def test_json_errors():
    with pytest.raises(ExpressionError, match="unknown key 'extra'"):
        from_json("a1", {"kind": "constant", "value": 1, "extra": 2})
    with pytest.raises(ExpressionError, match="unknown kind"):
        from_json("a1", {"kind": "spline"})
    with pytest.raises(ExpressionError):
        from_json("a1", "1 + x")
