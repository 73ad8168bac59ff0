import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lvcoop.coefficients import CoefficientField
from lvcoop.errors import DataError, ExpressionError, ParameterError
from lvcoop.grid import Grid
from lvcoop.model import (ClassParams, ProblemSpec, ScalingParams, check_dimension_condition,
                          manifold_constants, proportionality_constant, reduced_constant,
                          rescale_function, rescale_state, validate_problem)
from lvcoop.state import State


def test_valid_class_member():
    spec = ProblemSpec.constant(0, 0, 1, 1, 1.3, 1.3, class_params=ClassParams(0.5, 4.0))
    assert validate_problem(spec).valid


def test_coupling_violation_reported():
    spec = ProblemSpec.constant(0, 0, 1, 1, 1.3, 1.3, class_params=ClassParams(0.8, 4.0))
    rep = validate_problem(spec)
    assert [v.code for v in rep.violations] == ["coupling"]
    assert "1.69" in rep.describe() and "1.8" in rep.describe()


def test_exponent_violation():
    spec = ProblemSpec.constant(q=0.5, r=1.0)
    codes = [v.code for v in validate_problem(spec).violations]
    assert "q_ge_r" in codes


def test_bounds_and_strict_conditions():
    spec = ProblemSpec.constant(5.0, 0, 1, 1, 3, 3, class_params=ClassParams(0.5, 4.0))
    assert [v.code for v in validate_problem(spec).violations] == ["a1_bound"]
    assert not validate_problem(ProblemSpec.constant(0, 0, 1, 1, 1, 0.5)).valid
    assert validate_problem(ProblemSpec.constant(0, 0, 1, 1, 1.01, 1)).valid


def test_lipschitz_modulus():
    steep = CoefficientField.expression("2 + sin(40*x)", "c1")
    spec = ProblemSpec.constant(class_params=ClassParams(0.5, 4.0, lipschitz=5.0)).with_coefficients(
        c1=steep)
    codes = [v.code for v in validate_problem(spec, spec.grid(64)).violations]
    assert "c1_modulus" in codes


def test_expression_and_sample_errors():
    with pytest.raises(ExpressionError, match="b1"):
        ProblemSpec.constant().with_coefficients(b1=CoefficientField.expression("x +* 2", "b1"))
    spec = ProblemSpec.constant().with_coefficients(
        c2=CoefficientField.expression("exp(800*x)", "c2"))
    with pytest.raises(DataError):
        with np.errstate(over="ignore"):
            validate_problem(spec, spec.grid(8))


@pytest.mark.parametrize("n,q,r,want", [(5, 1, 1, True), (6, 1, 1, False), (3, 2, 1, True),
                                        (4, 2, 1, False), (1, 7, 1, True), (2, 9, 3, True)])
def test_dimension_condition(n, q, r, want):
    assert check_dimension_condition(n, q, r) is want


def test_dimension_condition_q1_r1_exactly_up_to_five():
    assert [n for n in range(1, 40) if check_dimension_condition(n, 1, 1)] == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("args,want", [((1, 1, 3, 1, 1), 2.0), ((1, 1, 3, 3, 1), 1.0),
                                       ((1, 2, 6, 3, 2), math.sqrt(2))])
def test_proportionality_constant(args, want):
    assert proportionality_constant(*args) == pytest.approx(want, rel=1e-15)


def test_reduced_constant_examples():
    assert reduced_constant(1, 3, proportionality_constant(1, 1, 3, 3)) == pytest.approx(2.0)
    assert reduced_constant(1, 3, proportionality_constant(1, 1, 3, 1)) == pytest.approx(0.5)
    K = proportionality_constant(1, 1, 2, 0.5)
    assert K == pytest.approx(2.0)
    assert reduced_constant(1, 2, K) == pytest.approx(0.0, abs=1e-15)
    K, c = manifold_constants(ProblemSpec.constant(0, 0, 1, 1, 3, 1))
    assert (K, c) == pytest.approx((2.0, 0.5))


def test_manifold_identity_random():
    # on u = K v both components see the same per-capita rate:
    # c1 - b1 K = c2 K - b2, i.e. the v-equation constant is K times the u-equation one
    r = np.random.default_rng(20)
    eps = np.finfo(float).eps
    for b1, b2, c1, c2 in r.uniform(0.01, 10.0, size=(1000, 4)):
        K = proportionality_constant(b1, b2, c1, c2)
        assert abs((c1 - b1 * K) - (c2 * K - b2)) <= 8 * eps * (c1 + b1 * K + c2 * K + b2)
        c = reduced_constant(b1, c1, K)
        assert abs(K * c - (c2 * K - b2)) <= 8 * eps * (c1 + b1 * K + c2 * K + b2)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10),
       st.floats(1e-3, 1e3), st.sampled_from([1.0, 1.5, 2.0]))
def test_proportionality_scale_invariant(b1, b2, c1, c2, s, q):
    K = proportionality_constant(b1, b2, c1, c2, q)
    assert proportionality_constant(s * b1, s * b2, s * c1, s * c2, q) == pytest.approx(K, rel=1e-13)


def test_rescale_identity_and_amplitude():
    g = Grid.uniform([(0.0, 1.0)], 33, "neumann")
    (x,) = g.mesh
    st0 = State(np.sin(3 * x) + 2, np.cos(x), 0.25)
    spec = ProblemSpec.constant(bc="neumann")
    same = rescale_state(st0, ScalingParams(1.0), spec, g)
    assert np.array_equal(same.u, st0.u) and np.array_equal(same.v, st0.v) and same.t == 0.25
    assert ScalingParams(3.0).amplitude == pytest.approx(9.0)
    ones = State(np.ones(33), np.ones(33), 0.0)
    with pytest.warns(UserWarning, match="clips"):
        big = rescale_state(ones, ScalingParams(2.0), spec, g)
    (y,) = g.mesh
    inside = 2 * y <= x[-1]
    assert np.allclose(big.u[inside], 4.0) and np.allclose(big.v[inside], 4.0)
    assert ScalingParams(2.0, q=2.0, r=1.0).amplitude == pytest.approx(2.0)


def test_rescale_rejects_nonpositive():
    for lam in (0.0, -1.0):
        with pytest.raises(ParameterError):
            ScalingParams(lam)


@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(-1, 1), st.floats(0, 0.3))
def test_rescale_composition(l1, l2, x0, t0):
    def f(x, t=0.0):
        return np.exp(-x * x) * (1 + t)

    p1 = ScalingParams(l1, (x0,), t0)
    once = rescale_function(rescale_function(f, p1), ScalingParams(l2))
    both = rescale_function(f, ScalingParams(l1 * l2, (x0,), t0))
    y = np.linspace(-2, 2, 11)
    assert np.allclose(once(y, t=0.1), both(y, t=0.1), rtol=1e-12, atol=1e-300)


def test_problem_spec_errors():
    with pytest.raises(ParameterError):
        ProblemSpec.constant(bc="periodic")
    with pytest.raises(ParameterError):
        ProblemSpec.constant(period=-1.0)
    with pytest.raises(ParameterError):
        ProblemSpec.constant().with_coefficients(a1=CoefficientField.expression("x", "a1")).const("a1")
