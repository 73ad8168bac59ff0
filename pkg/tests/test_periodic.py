import json
import math

import numpy as np
import pytest

from lvcoop.acceptance import periodic_test_problem
from lvcoop.errors import ParameterError
from lvcoop.integrate import read_checkpoint
from lvcoop.model import ProblemSpec
from lvcoop.periodic import (PeriodicControls, PoincareMap, adjoint_weighted_growth,
                             apply_T_operator, coefficient_scale, default_guess, export_orbit,
                             find_periodic_orbit, homotopy_gain, homotopy_sweep, poincare_map,
                             steady_state)
from lvcoop.spectral import discrete_eigenvalue_1d, principal_eigenvalue
from lvcoop.state import State

CTL = PeriodicControls(nt=100)


@pytest.fixture(scope="module")
def forced():
    spec = periodic_test_problem()
    grid = spec.grid(32)
    return spec, grid, find_periodic_orbit(spec, grid, controls=CTL)


@pytest.fixture(scope="module")
def autonomous():
    spec = ProblemSpec.constant(-1, -1, 1, 1, 3, 3, period=0.5)
    return spec, spec.grid(32)


def test_zero_state_fixed(autonomous):
    spec, g = autonomous
    for lam in (0.0, 0.5, 1.0):
        out = poincare_map(spec, g, State(np.zeros(32), np.zeros(32)), lam, controls=CTL)
        assert np.array_equal(out.u, np.zeros(32)) and not out.meta.get("diverged")


def test_heat_decay_without_reaction():
    spec = ProblemSpec.constant(0, 0, 0, 0, 0, 0, period=0.1)
    g = spec.grid(63)
    (x,) = g.mesh
    ctl = PeriodicControls(nt=1000)
    out = poincare_map(spec, g, State(np.sin(np.pi * x), np.zeros(63)), controls=ctl)
    amp = out.u[31] / np.sin(np.pi * x[31])
    lam_h = discrete_eigenvalue_1d(63, 1.0)
    assert amp == pytest.approx((1 + 1e-4 * lam_h) ** -1000, rel=1e-10)
    assert abs(amp / math.exp(-math.pi ** 2 * 0.1) - 1) < 1e-3


def test_steady_state_is_fixed_point(autonomous):
    spec, g = autonomous
    ss, ok = steady_state(spec, g, spec.period / CTL.nt, default_guess(spec, g))
    assert ok and ss.u.min() > 0
    out = poincare_map(spec, g, ss, controls=CTL)
    assert np.max(np.abs(out.u - ss.u)) / np.max(ss.u) < 1e-8
    assert np.max(np.abs(out.v - ss.v)) / np.max(ss.v) < 1e-8


def test_autonomous_orbit_time_constant(autonomous):
    spec, g = autonomous
    orbit = find_periodic_orbit(spec, g, controls=CTL)
    assert orbit.converged and orbit.positivity_margin > 0
    var = max(np.max(np.abs(orbit.u - orbit.u[0])), np.max(np.abs(orbit.v - orbit.v[0])))
    assert var / orbit.sup_norm < 1e-6
    ss, _ = steady_state(spec, g, spec.period / CTL.nt, orbit.initial)
    assert np.max(np.abs(orbit.u[0] - ss.u)) / np.max(ss.u) < 1e-8


def test_forced_orbit(forced):
    spec, g, orbit = forced
    assert orbit.converged and orbit.nontrivial
    assert orbit.residual < 1e-6 and orbit.positivity_margin > 0
    assert orbit.u.shape == (CTL.nt + 1, 32)
    assert orbit.manifest()["status"] == "converged"


def test_forced_orbit_self_convergence():
    spec = periodic_test_problem()
    sups = []
    for n, nt in ((16, 50), (33, 100), (67, 200)):     # h and dt halve together
        o = find_periodic_orbit(spec, spec.grid(n), controls=PeriodicControls(nt=nt))
        assert o.converged and o.residual < 1e-6
        sups.append(o.sup_norm)
    d1, d2 = abs(sups[1] - sups[0]), abs(sups[2] - sups[1])
    assert d2 < d1 / 1.5
    assert d2 / sups[2] < 2e-3


def test_T_operator_zero_and_positivity(forced, rng):
    spec, g, _ = forced
    z = np.zeros((CTL.nt + 1, 32))
    U, V = apply_T_operator(spec, g, z, z)
    assert np.array_equal(U, z) and np.array_equal(V, z)
    W1, W2 = rng.normal(scale=5, size=(2, CTL.nt + 1, 32))
    for source in ("scheme", "pointwise"):
        U, V = apply_T_operator(spec, g, W1, W2, source=source)
        assert U.min() >= 0 and V.min() >= 0


def test_orbit_is_T_fixed_point(forced):
    spec, g, orbit = forced
    U, V = apply_T_operator(spec, g, orbit.u, orbit.v)
    mis = max(np.max(np.abs(U - orbit.u)), np.max(np.abs(V - orbit.v))) / orbit.sup_norm
    assert mis < 1e-6


def test_T_operator_rejects_bad_input(forced):
    spec, g, orbit = forced
    with pytest.raises(ParameterError):
        apply_T_operator(spec, spec.with_coefficients().grid(32), orbit.u, orbit.v,
                         source="spectral")
    neu = ProblemSpec.constant(bc="neumann", period=1.0)
    with pytest.raises(ParameterError):
        apply_T_operator(neu, neu.grid(8), np.zeros((5, 8)), np.zeros((5, 8)))


def test_preconditions():
    hot = ProblemSpec.constant(12.0, 0.0, period=1.0)      # a1 above Lambda_1 = pi^2
    with pytest.raises(ParameterError, match="Lambda_1"):
        PoincareMap(hot, hot.grid(16))
    no_period = ProblemSpec.constant()
    with pytest.raises(ParameterError):
        PoincareMap(no_period, no_period.grid(16))
    neu = ProblemSpec.constant(bc="neumann", period=1.0)
    with pytest.raises(ParameterError):
        PoincareMap(neu, neu.grid(16))
    spec = periodic_test_problem()
    with pytest.raises(ParameterError):
        find_periodic_orbit(spec, spec.grid(16), method="secant", controls=CTL)


def test_damped_iteration_reports_not_raises(forced):
    spec, g, _ = forced
    base = default_guess(spec, g)
    big = find_periodic_orbit(spec, g, base, method="damped-fixed-point", controls=CTL)
    assert big.status in ("diverged", "trivial", "max_iter")
    tiny = find_periodic_orbit(spec, g, State(1e-3 * base.u, 1e-3 * base.v),
                               method="damped-fixed-point", controls=CTL)
    assert tiny.status == "trivial" and not tiny.nontrivial


def test_lambda_zero_has_no_positive_orbit(forced):
    spec, g, _ = forced
    base = default_guess(spec, g)
    (x,) = g.mesh
    r = np.random.default_rng(5)
    for _ in range(5):
        beta = 10.0 ** r.uniform(-2, 1)
        bump = 1.0 + 0.5 * r.uniform(-1, 1) * np.sin(2 * np.pi * x) ** 2
        o = find_periodic_orbit(spec, g, State(beta * base.u * bump, beta * base.v * (2 - bump)),
                                lam=0.0, controls=CTL)
        assert o.status in ("diverged", "trivial")


def test_adjoint_growth(forced, rng):
    spec, g, _ = forced
    for _ in range(3):
        s = State(rng.uniform(0, 1e-2, 32), rng.uniform(0, 1e-2, 32))
        growth, bound = adjoint_weighted_growth(spec, g, s, controls=CTL)
        assert growth > 1.0
        assert growth >= bound * (1 - 1e-12)
    assert homotopy_gain(g, 1.0) == pytest.approx(principal_eigenvalue(g).value + 1)


def test_sweep_single_lambda(forced):
    spec, g, orbit = forced
    rep = homotopy_sweep(spec, g, [1.0], controls=CTL)
    (o,) = rep.orbits
    assert o.status == orbit.status and o.sup_norm == pytest.approx(orbit.sup_norm, rel=1e-9)
    assert rep.branch_max == o.sup_norm and rep.terminated_at is None
    with pytest.raises(ParameterError):
        homotopy_sweep(spec, g, [1.2], controls=CTL)


def test_sweep_branch_refinement_stable():
    spec = periodic_test_problem()
    lams = [round(1.0 - 0.1 * k, 10) for k in range(10)]
    caps = []
    for n in (32, 64):
        rep = homotopy_sweep(spec, spec.grid(n), lams, controls=CTL)
        assert all(o.nontrivial for o in rep.orbits[:9])
        sups = [o.sup_norm for o in rep.orbits if o.nontrivial]
        assert np.all(np.diff(sups) < 0)             # the branch shrinks toward lam = 0
        caps.append(rep.branch_max)
    assert abs(caps[1] - caps[0]) / caps[1] < 0.05


def test_branch_terminates_before_zero(forced):
    spec, g, _ = forced
    rep = homotopy_sweep(spec, g, [0.1, 0.05, 0.0], controls=CTL)
    assert rep.orbits[0].nontrivial
    assert not rep.orbits[-1].nontrivial
    assert rep.terminated_at is not None and rep.terminated_at > 0.0


def test_export(forced, tmp_path):
    spec, g, orbit = forced
    path = export_orbit(orbit, g, tmp_path)
    lines = [json.loads(x) for x in open(path)]
    assert len(lines) == CTL.n_phase
    assert lines[0]["file"] == "orbit_lam1.0000_phase000.lvb"
    assert {"lam", "T", "residual", "positivity_margin"} <= set(lines[0])
    st, g2, _, _ = read_checkpoint(tmp_path / lines[3]["file"])
    assert g2.shape == g.shape
    assert np.array_equal(st.u, orbit.snapshots[3].u)
    assert lines[3]["phase"] == pytest.approx(orbit.snapshots[3].t / orbit.period)


def test_coefficient_scale():
    spec = periodic_test_problem()
    assert coefficient_scale(spec, spec.grid(8)) == pytest.approx(3.0)
