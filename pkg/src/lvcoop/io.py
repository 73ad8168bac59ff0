"""Result writers.  Floats are written with 17 significant digits so that a
read-back reproduces every bit; non-finite values use the tokens NaN,
Infinity and -Infinity, which Python's json module reads back."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _encode(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    """JSON text with 17-significant-digit floats."""
    return _encode(obj)


def write_ndjson(path, records: Iterable[dict]):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_ndjson(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, (list, tuple)):
        return dumps(list(v))
    return v


def write_csv(path, rows: list, columns=None):
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c, "")) for c in columns])


def config_hash(config: dict):
    """SHA-256 of the canonical (sorted-key) JSON form."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    version: str
    started: float = field(default_factory=time.time)
    wall_clock: float = 0.0
    outcomes: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def finish(self):
        self.wall_clock = time.time() - self.started

    def as_dict(self):
        return {"command": self.command, "config_hash": self.config_hash, "seed": self.seed,
                "version": self.version, "wall_clock": self.wall_clock,
                "outcomes": self.outcomes, "files": self.files}

    def write(self, out_dir):
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(self.as_dict()) + "\n")
        return path
