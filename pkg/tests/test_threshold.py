import csv

import numpy as np
import pytest

from lvcoop.errors import ParameterError
from lvcoop.grid import Grid
from lvcoop.integrate import StepControls
from lvcoop.io import write_csv
from lvcoop.model import ProblemSpec
from lvcoop.threshold import (MAX_HORIZON_FACTOR, RunRecord, bisect_threshold,
                              blowup_times_monotone, classify_run, default_profile,
                              monotone_classifications)

SPEC = ProblemSpec.constant(0.0, 0.0, 1.0, 1.0, 3.0, 3.0)


@pytest.fixture(scope="module")
def result():
    return bisect_threshold(SPEC, SPEC.grid(64), 0.1, 50.0, 1e-3)


def test_profiles():
    p = default_profile(SPEC.grid(63))
    assert p.max() == pytest.approx(1.0) and p.min() > 0
    ws = default_profile(Grid.uniform([(-6.0, 6.0)], 121, "whole_space"))
    assert ws.max() == pytest.approx(1.0) and ws[0] < 1e-5


@pytest.mark.parametrize("alpha,kind", [(0.0, "Global"), (0.1, "Global"), (50.0, "BlowUp")])
def test_classify_examples(alpha, kind):
    rec = classify_run(SPEC, SPEC.grid(64), alpha)
    assert rec.kind == kind
    if kind == "BlowUp":
        assert 0 < rec.T_est < rec.horizon


def test_classify_errors():
    with pytest.raises(ParameterError):
        classify_run(SPEC, SPEC.grid(8), -1.0)
    with pytest.raises(ParameterError):
        classify_run(SPEC, SPEC.grid(8), 1.0, profile=-np.ones(8))


def test_bisection_width_and_budget(result):
    assert result.width <= 1e-3
    assert result.bracket[0] < result.bracket[1]
    midpoints = {r.alpha for r in result.history} - {0.1, 50.0}
    assert len(midpoints) <= 20
    assert result.undecided == 0 and not result.warnings


def test_bisection_audits(result):
    mono, tmono = result.audit()
    assert mono and tmono
    glob = [r.alpha for r in result.history if r.kind == "Global"]
    assert max(glob) == result.bracket[0]


def test_threshold_statistic_bounded(result):
    s = result.statistic
    assert s is not None and s.regime == (1, 0) and s.T == float("inf")
    assert 0 < s.c_emp < 100


def test_invalid_bracket():
    with pytest.raises(ParameterError, match="invalid bracket"):
        bisect_threshold(SPEC, SPEC.grid(32), 20.0, 50.0)
    with pytest.raises(ParameterError):
        bisect_threshold(SPEC, SPEC.grid(32), 5.0, 1.0)


def test_bracket_invariant_under_dt_halving():
    g = SPEC.grid(64)
    tol = 1e-3
    a = bisect_threshold(SPEC, g, 3.0, 8.0, tol, controls=StepControls(), statistic=False)
    b = bisect_threshold(SPEC, g, 3.0, 8.0, tol, controls=StepControls().scaled(0.5),
                         statistic=False)
    assert abs(a.bracket[0] - b.bracket[0]) <= tol * a.bracket[1]
    assert abs(a.bracket[1] - b.bracket[1]) <= tol * a.bracket[1]


def test_undecided_horizon_doubling():
    # very short horizon: runs near the threshold stay undecided even at 4x
    base = 0.05
    res = bisect_threshold(SPEC, SPEC.grid(32), 0.001, 50.0, 1e-2, horizon=base,
                           statistic=False)
    assert max(r.horizon for r in res.history) <= MAX_HORIZON_FACTOR * base
    assert res.undecided > 0 and res.warnings
    assert any(r.kind == "Undecided" for r in res.history)
    lo_runs = [r for r in res.history if r.alpha == 0.001]
    assert [r.kind for r in lo_runs] == ["Undecided", "Global"]


def test_audit_helpers():
    h = [RunRecord(1.0, "Global", 2.0), RunRecord(3.0, "BlowUp", 2.0, T_est=0.5),
         RunRecord(4.0, "BlowUp", 2.0, T_est=0.4)]
    assert monotone_classifications(h) and blowup_times_monotone(h)
    h.append(RunRecord(3.5, "Global", 2.0))
    h.append(RunRecord(5.0, "BlowUp", 2.0, T_est=0.6))
    assert not monotone_classifications(h) and not blowup_times_monotone(h)


def test_history_csv(result, tmp_path):
    path = tmp_path / "hist.csv"
    write_csv(path, result.rows())
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == len(result.history)
    assert float(rows[0]["alpha"]) == 0.1 and rows[1]["kind"] == "BlowUp"
