import json
import math
import pathlib

import numpy as np
import pytest

from lvcoop.config import build, parse_config
from lvcoop.errors import ConfigError

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"


def minimal(**extra):
    raw = {"version": 1, "coefficients": {"a1": 0, "a2": 0, "b1": 1, "b2": 1, "c1": 3, "c2": 3}}
    raw.update(extra)
    return raw


def test_minimal_defaults():
    cfg = build(minimal())
    spec = cfg.spec
    assert spec.dim == 1 and spec.extents == ((0.0, 1.0),) and spec.bc == "dirichlet"
    assert (spec.q, spec.r) == (1.0, 1.0) and spec.period is None
    assert cfg.grid == 128 and cfg.horizon == 1.0 and cfg.output_times == ()
    assert spec.coefficients["c1"].value == 3.0
    st = cfg.initial_state(cfg.make_grid(16))
    assert st.u.max() == pytest.approx(1.0, rel=1e-2) and np.array_equal(st.u, st.v)


def test_class_violation_rejected():
    raw = minimal(class_params={"eps0": 0.8, "M0": 4})
    raw["coefficients"].update(c1=1.3, c2=1.3)
    with pytest.raises(ConfigError, match=r"c1\*c2 >= b1\*b2 \+ eps0"):
        build(raw)


def test_sampled_tables_set_period():
    cfg = parse_config(CONFIGS / "sampled_periodic.json")
    assert cfg.spec.period == 1.0
    a = cfg.spec.coefficients["a1"]
    assert a.evaluate((), 0.125, 1.0) == pytest.approx(-0.75)


def test_period_disagreement():
    raw = json.loads((CONFIGS / "sampled_periodic.json").read_text())
    raw["period"] = 2.0
    with pytest.raises(ConfigError, match="disagrees"):
        build(raw)
    raw = json.loads((CONFIGS / "sampled_periodic.json").read_text())
    raw["coefficients"]["a2"]["period"] = 0.8
    with pytest.raises(ConfigError, match="disagree"):
        build(raw)


@pytest.mark.parametrize("where,raw", [
    ("frobnicate", minimal(frobnicate=1)),
    ("dt_maximum", minimal(controls={"dt_maximum": 1e-3})),
    ("alpha", minimal(threshold={"alpha": 1})),
    ("seed", minimal(ensemble={"seed": 1})),
    ("w", minimal(initial={"u": 1, "v": 1, "w": 2})),
    ("d1", minimal(coefficients={"a1": 0, "a2": 0, "b1": 1, "b2": 1, "c1": 3, "c2": 3, "d1": 1})),
])
def test_unknown_keys_named(where, raw):
    with pytest.raises(ConfigError, match=repr(where)):
        build(raw)


@pytest.mark.parametrize("version", [None, 0, 2, "1"])
def test_version_mismatch(version):
    raw = minimal()
    if version is None:
        del raw["version"]
    else:
        raw["version"] = version
    with pytest.raises(ConfigError, match="version"):
        build(raw)


def test_bc_aliases_and_horizon():
    cfg = build(minimal(bc=None, extents=[[-5, 5]], horizon="inf"))
    assert cfg.spec.bc == "whole_space" and math.isinf(cfg.horizon)
    assert build(minimal(bc="none")).spec.bc == "whole_space"
    with pytest.raises(ConfigError):
        build(minimal(bc="robin"))


def test_two_dimensional_and_expressions():
    cfg = build(minimal(dim=2, extents=[[0, 1], [0, 2]], grid=[8, 12],
                        initial={"u": "sin(pi*x)*sin(pi*y/2)", "v": 0.5}))
    g = cfg.make_grid()
    assert g.shape == (8, 12)
    st = cfg.initial_state(g)
    assert st.u.shape == (8, 12) and np.all(st.v == 0.5)


def test_bad_values():
    with pytest.raises(ConfigError, match="grid"):
        build(minimal(grid=0))
    with pytest.raises(ConfigError, match="periodic t samples"):
        build(minimal(coefficients={"a1": {"kind": "sampled", "axes": {"t": [0, 2]},
                                           "values": [0, 0], "period": 1.0},
                                    "a2": 0, "b1": 1, "b2": 1, "c1": 3, "c2": 3}))
    cfg = build(minimal(initial={"u": "x - 0.5", "v": 1}))
    with pytest.raises(ConfigError, match="negative"):
        cfg.initial_state(cfg.make_grid(8))
    with pytest.raises(ConfigError, match="coefficients"):
        build({"version": 1})
    with pytest.raises(ConfigError, match="missing"):
        build(minimal(coefficients={"a1": 0}))
    with pytest.raises(ConfigError, match="controls"):
        build(minimal(controls={"dt_init": 1, "dt_max": 0.1}))
    with pytest.raises(ConfigError, match="invalid problem"):
        build(minimal(q=0.5))


def test_not_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{version: 1")
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config(p)


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_parse(name):
    cfg = parse_config(CONFIGS / name)
    assert cfg.raw["version"] == 1
