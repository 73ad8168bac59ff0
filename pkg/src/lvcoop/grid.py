"""Uniform tensor grids on boxes and the discrete Laplacian.

Dirichlet grids are vertex-centred: ``N`` interior nodes, ``h = L/(N+1)``,
ghost values 0.  Neumann grids are cell-centred: ``N`` cells, ``h = L/N``,
ghost values mirrored.  ``whole_space`` uses the Neumann discretisation on a
large box and reports an infinite boundary distance.

Fields are numpy arrays of shape ``grid.shape``; flattening is row-major.
"""

from __future__ import annotations

import functools
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import solve_banded

from .errors import DomainError, ParameterError

BC_KINDS = ("dirichlet", "neumann", "whole_space")


@dataclass(frozen=True)
class Grid:
    extents: tuple      # ((lo, hi), ...) per axis
    shape: tuple        # points per axis
    bc: str = "dirichlet"

    def __post_init__(self):
        if self.bc not in BC_KINDS:
            raise ParameterError(f"unknown boundary condition {self.bc!r}")
        if len(self.extents) != len(self.shape) or len(self.shape) not in (1, 2):
            raise ParameterError("grid must be 1D or 2D with one extent per axis")
        for (lo, hi), n in zip(self.extents, self.shape):
            if not hi > lo:
                raise ParameterError(f"empty extent ({lo}, {hi})")
            if int(n) < 1:
                raise ParameterError("need at least one point per axis")
        object.__setattr__(self, "extents", tuple((float(lo), float(hi)) for lo, hi in self.extents))
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    @classmethod
    def uniform(cls, extents, n, bc="dirichlet"):
        extents = tuple(extents)
        if isinstance(n, int):
            n = (n,) * len(extents)
        return cls(extents, tuple(n), bc)

    @property
    def dim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def cell_centred(self):
        return self.bc != "dirichlet"

    @property
    def spacing(self):
        if self.cell_centred:
            return tuple((hi - lo) / n for (lo, hi), n in zip(self.extents, self.shape))
        return tuple((hi - lo) / (n + 1) for (lo, hi), n in zip(self.extents, self.shape))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @functools.cached_property
    def axes(self):
        out = []
        for (lo, _), n, h in zip(self.extents, self.shape, self.spacing):
            offset = 0.5 if self.cell_centred else 1.0
            out.append(lo + (np.arange(n) + offset) * h)
        return tuple(out)

    @functools.cached_property
    def mesh(self):
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def refined(self, factor=2):
        """Grid with ``factor`` times the resolution on the same box."""
        if self.cell_centred:
            shape = tuple(n * factor for n in self.shape)
        else:
            shape = tuple((n + 1) * factor - 1 for n in self.shape)
        return Grid(self.extents, shape, self.bc)

    def integrate(self, f):
        return float(np.sum(f) * self.cell_volume)

    def inner(self, f, g):
        return float(np.sum(f * g) * self.cell_volume)


def apply_laplacian(f, grid: Grid):
    """Second-order central differences with ghost values per ``grid.bc``."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ParameterError(f"field shape {f.shape} does not match grid {grid.shape}")
    mode = "constant" if grid.bc == "dirichlet" else "edge"
    out = np.zeros_like(f)
    for axis, h in enumerate(grid.spacing):
        pad = [(0, 0)] * grid.dim
        pad[axis] = (1, 1)
        g = np.pad(f, pad, mode=mode)
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        out += (g[tuple(lo)] - 2.0 * f + g[tuple(hi)]) / (h * h)
    return out


def _axis_matrix(n, h, bc):
    main = np.full(n, -2.0)
    if bc != "dirichlet":
        main[0] = main[-1] = -1.0
        if n == 1:
            main[0] = 0.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


def laplacian_matrix(grid: Grid):
    """Sparse matrix of :func:`apply_laplacian` acting on row-major flattened fields."""
    mats = [_axis_matrix(n, h, grid.bc) for n, h in zip(grid.shape, grid.spacing)]
    if grid.dim == 1:
        return mats[0].tocsr()
    ix = sp.identity(grid.shape[0], format="csr")
    iy = sp.identity(grid.shape[1], format="csr")
    return (sp.kron(mats[0], iy) + sp.kron(ix, mats[1])).tocsr()


class DiffusionSolver:
    """Backward-Euler solves ``(I - dt*Lap) w = rhs`` on a fixed grid.

    1D uses a banded (Thomas-type) solve; 2D caches sparse LU factors per dt
    with natural ordering and no pivoting, which keeps the M-matrix solve
    sign-preserving.
    """

    def __init__(self, grid: Grid, cache_size=8):
        self.grid = grid
        self._lap = laplacian_matrix(grid)
        self._cache = OrderedDict()
        self._cache_size = cache_size
        if grid.dim == 1:
            d = self._lap.diagonal()
            self._diag = d
            self._off = np.full(grid.size - 1, 1.0 / grid.spacing[0] ** 2)

    def solve(self, rhs, dt):
        """Solve for one field (shape ``grid.shape``) or a stack (``(k,) + grid.shape``)."""
        rhs = np.asarray(rhs, dtype=float)
        stacked = rhs.shape != self.grid.shape
        flat = rhs.reshape(-1, self.grid.size).T if stacked else rhs.reshape(self.grid.size)
        if self.grid.dim == 1:
            n = self.grid.size
            ab = np.empty((3, n))
            ab[0, 0] = 0.0
            ab[0, 1:] = -dt * self._off
            ab[1] = 1.0 - dt * self._diag
            ab[2, :-1] = -dt * self._off
            ab[2, -1] = 0.0
            out = solve_banded((1, 1), ab, flat, check_finite=False)
        else:
            out = self._factor(dt).solve(flat)
        if stacked:
            return out.T.reshape(rhs.shape)
        return out.reshape(self.grid.shape)

    def _factor(self, dt):
        lu = self._cache.get(dt)
        if lu is None:
            a = (sp.identity(self.grid.size, format="csc") - dt * self._lap).tocsc()
            lu = spla.splu(a, permc_spec="NATURAL", diag_pivot_thresh=0.0)
            self._cache[dt] = lu
            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(dt)
        return lu


def boundary_distance(grid: Grid):
    """Distance of every node to the nearest face; +inf for whole-space emulation."""
    if grid.bc == "whole_space":
        return np.full(grid.shape, np.inf)
    d = np.full(grid.shape, np.inf)
    for axis, ((lo, hi), coords) in enumerate(zip(grid.extents, grid.mesh)):
        d = np.minimum(d, np.minimum(coords - lo, hi - coords))
    return d


def inverse_square_distance(grid: Grid):
    """dist^{-2}(x, boundary) with the whole-space convention (identically 0)."""
    d = boundary_distance(grid)
    with np.errstate(divide="ignore"):
        return np.where(np.isinf(d), 0.0, 1.0 / (d * d))


def resample(f, source: Grid, target: Grid):
    """Multilinear interpolation of ``f`` from ``source`` onto ``target``.

    Points between the outermost nodes and the walls are linearly
    extrapolated, so multilinear functions are reproduced exactly everywhere.
    """
    if source.extents != target.extents:
        raise DomainError(f"extent mismatch: {source.extents} vs {target.extents}")
    return sample_at(f, source, target.mesh)


def sample_at(f, source: Grid, points, outside=None):
    """Evaluate the multilinear interpolant of ``f`` at arbitrary ``points``.

    ``points`` is a tuple of coordinate arrays.  Points outside the source box
    get ``outside`` if given, otherwise they are extrapolated.
    """
    f = np.asarray(f, dtype=float)
    if any(n == 1 for n in source.shape):
        raise ParameterError("interpolation needs at least two nodes per axis")
    interp = RegularGridInterpolator(source.axes, f, method="linear",
                                     bounds_error=False, fill_value=None)
    pts = np.stack([np.asarray(p, dtype=float) for p in np.broadcast_arrays(*points)], axis=-1)
    out = interp(pts.reshape(-1, source.dim)).reshape(pts.shape[:-1])
    if outside is not None:
        mask = np.zeros(out.shape, dtype=bool)
        for (lo, hi), p in zip(source.extents, np.broadcast_arrays(*points)):
            mask |= (p < lo) | (p > hi)
        out[mask] = outside
    return out
