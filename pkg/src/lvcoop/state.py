from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class State:
    """Pair of nonnegative grid fields (u, v) at time ``t``."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def copy(self):
        return State(self.u.copy(), self.v.copy(), self.t, dict(self.meta))

    @property
    def sup(self):
        """sup-norm of u + v."""
        return float(np.max(self.u + self.v)) if self.u.size else 0.0

    @property
    def finite(self):
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))

    @property
    def nonnegative(self):
        return bool(np.min(self.u) >= 0.0 and np.min(self.v) >= 0.0)
