import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lvcoop.io import (RunManifest, config_hash, dumps, format_float, read_ndjson, write_csv,
                       write_ndjson)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip_bit_exact(x):
    assert float(format_float(x)) == x
    assert json.loads(dumps({"x": x}))["x"] == x


def test_non_finite_tokens():
    assert format_float(math.nan) == "NaN"
    assert format_float(math.inf) == "Infinity" and format_float(-math.inf) == "-Infinity"
    back = json.loads(dumps([math.nan, math.inf, -math.inf]))
    assert math.isnan(back[0]) and back[1:] == [math.inf, -math.inf]


def test_dumps_types():
    text = dumps({"a": np.float64(0.1), "b": np.int64(3), "c": True, "d": None, "e": (1.5, "s"),
                  "f": np.array([1.0, 2.0])})
    assert text == '{"a": 0.10000000000000001, "b": 3, "c": true, "d": null, "e": [1.5, "s"], ' \
                   '"f": [1, 2]}'
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_ndjson_and_csv(tmp_path):
    rows = [{"i": 0, "x": 1 / 3, "ok": True}, {"i": 1, "x": math.inf, "ok": False}]
    write_ndjson(tmp_path / "a.ndjson", rows)
    assert read_ndjson(tmp_path / "a.ndjson") == rows
    write_csv(tmp_path / "a.csv", rows)
    got = list(csv.DictReader(open(tmp_path / "a.csv")))
    assert got[0] == {"i": "0", "x": "0.33333333333333331", "ok": "true"}
    assert got[1]["x"] == "Infinity"
    write_csv(tmp_path / "b.csv", rows, columns=["x"])
    assert open(tmp_path / "b.csv").read().splitlines()[0] == "x"


def test_config_hash_canonical():
    a = {"version": 1, "coefficients": {"a1": 0, "b1": 1}}
    b = {"coefficients": {"b1": 1, "a1": 0}, "version": 1}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"version": 2})
    assert len(config_hash(a)) == 64


def test_manifest(tmp_path):
    m = RunManifest("eigen", config_hash({}), 7, "0.1.0")
    m.outcomes.append({"Lambda1": math.pi ** 2})
    m.files.append("eigen.csv")
    m.finish()
    data = json.loads(open(m.write(tmp_path)).read())
    assert data["command"] == "eigen" and data["seed"] == 7 and data["files"] == ["eigen.csv"]
    assert data["wall_clock"] >= 0 and data["outcomes"][0]["Lambda1"] == math.pi ** 2
