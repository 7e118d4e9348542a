"""Layered Gaussian field samples on rectangular grids.

Each layer is a centered stationary Gaussian field whose radial
covariance comes from ``covariance.layer_covariance``.  Sampling is by
dense Cholesky factorization of the node covariance matrix, exact in
distribution up to a tiny diagonal jitter.  Because the covariance is
stationary, the matrix only involves as many distinct lags as there are
(dx, dy) index offsets, so assembly is a table lookup rather than
O(nodes^2) quadrature calls.

Partial sums over layers give the approximating field at level n, whose
node variance is exactly log c_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .covariance import CutoffSequence, LayerCovarianceTable
from .errors import ContractError, DomainError, NumericalError
from .rng import substream

# Dense factorization cap: 4096 nodes (64 x 64) factors in about a
# second; anything larger needs a different sampler.
MAX_DENSE_NODES = 4096

JITTER_LADDER = (1e-12, 1e-10, 1e-8)


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned evaluation grid.

    origin is the lower-left node, extent the side lengths, resolution
    the node counts per axis.  Node (i, j) sits at
    origin + (i * dx, j * dy) with dx = extent_x / (nx - 1).
    excluded_radius marks an optional ball around 0 whose cells are
    zeroed when densities are built on this grid; field samples ignore
    it.
    """

    origin: tuple
    extent: tuple
    resolution: tuple
    excluded_radius: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "extent", (float(self.extent[0]), float(self.extent[1])))
        object.__setattr__(self, "resolution", (int(self.resolution[0]), int(self.resolution[1])))
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise DomainError("grid extent must be positive in both axes")
        if self.resolution[0] < 2 or self.resolution[1] < 2:
            raise DomainError("grid needs at least 2 nodes per axis")
        if self.excluded_radius < 0:
            raise DomainError("excluded_radius must be nonnegative")

    @classmethod
    def square(cls, halfwidth: float, resolution: int,
               excluded_radius: float = 0.0) -> "GridSpec":
        h = float(halfwidth)
        return cls((-h, -h), (2 * h, 2 * h), (resolution, resolution),
                   excluded_radius)

    @classmethod
    def covering_annulus(cls, k: int, resolution: int,
                         margin: float = 0.05) -> "GridSpec":
        """Square grid whose hull contains the closed annulus 1/k < |x| < k."""
        if k < 2:
            raise DomainError("annulus index must be at least 2")
        return cls.square(k * (1.0 + margin), resolution)

    @property
    def n_nodes(self) -> int:
        return self.resolution[0] * self.resolution[1]

    @property
    def cell_size(self) -> tuple:
        nx, ny = self.resolution
        return (self.extent[0] / (nx - 1), self.extent[1] / (ny - 1))

    @cached_property
    def axes(self) -> tuple:
        nx, ny = self.resolution
        xs = self.origin[0] + self.cell_size[0] * np.arange(nx)
        ys = self.origin[1] + self.cell_size[1] * np.arange(ny)
        return xs, ys

    @cached_property
    def centers(self) -> np.ndarray:
        """(n_nodes, 2) array of node coordinates, x index major."""
        xs, ys = self.axes
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    @property
    def cell_area(self) -> float:
        dx, dy = self.cell_size
        return dx * dy

    @property
    def max_lag(self) -> float:
        return math.hypot(self.extent[0], self.extent[1])

    def fractional_index(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dx, dy = self.cell_size
        out = np.empty_like(pts)
        out[:, 0] = (pts[:, 0] - self.origin[0]) / dx
        out[:, 1] = (pts[:, 1] - self.origin[1]) / dy
        return out

    def in_hull(self, points: np.ndarray) -> np.ndarray:
        """True for points inside the closed convex hull of the nodes."""
        fi = self.fractional_index(points)
        nx, ny = self.resolution
        return ((fi[:, 0] >= 0) & (fi[:, 0] <= nx - 1)
                & (fi[:, 1] >= 0) & (fi[:, 1] <= ny - 1))


def bilinear_interpolate(grid: GridSpec, values: np.ndarray,
                         points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of node values at arbitrary points.

    Points outside the hull are clamped to the boundary cell; pair with
    ``grid.in_hull`` when extrapolation must be detected instead.
    """
    if values.shape != tuple(grid.resolution):
        raise ContractError(
            f"values shape {values.shape} does not match grid {grid.resolution}")
    nx, ny = grid.resolution
    fi = grid.fractional_index(points)
    ix = np.clip(np.floor(fi[:, 0]).astype(np.int64), 0, nx - 2)
    iy = np.clip(np.floor(fi[:, 1]).astype(np.int64), 0, ny - 2)
    fx = np.clip(fi[:, 0] - ix, 0.0, 1.0)
    fy = np.clip(fi[:, 1] - iy, 0.0, 1.0)
    v00 = values[ix, iy]
    v10 = values[ix + 1, iy]
    v01 = values[ix, iy + 1]
    v11 = values[ix + 1, iy + 1]
    return ((1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10
            + (1 - fx) * fy * v01 + fx * fy * v11)


@dataclass(eq=False)
class LayerSample:
    """One layer draw on a grid, with its provenance."""

    layer: int
    grid: GridSpec
    values: np.ndarray
    variance_increment: float
    master_seed: int
    draw: int


@dataclass(eq=False)
class FieldState:
    """Partial-sum field at a given level, with exact variance bookkeeping."""

    level: int
    grid: GridSpec
    values: np.ndarray
    variance: float
    master_seed: int
    draw: int

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        return bilinear_interpolate(self.grid, self.values, points)

    @classmethod
    def zero(cls, grid: GridSpec, master_seed: int = 0, draw: int = 0) -> "FieldState":
        return cls(0, grid, np.zeros(grid.resolution), 0.0, master_seed, draw)


def field_variance(level: int, cutoffs: CutoffSequence) -> float:
    """Node variance of the level-n field: log c_n exactly."""
    if level < 0:
        raise DomainError("level must be nonnegative")
    return sum(cutoffs.log_ratio(k) for k in range(1, level + 1))


class LayerSampler:
    """Exact Gaussian sampler for the layers on one grid.

    Cholesky factors are computed once per layer and cached, so ensemble
    draws cost one matrix-vector product each.  Layer n of draw d under
    master seed s always consumes the stream (s, "layer", n, d), whether
    sampled singly or in a batch; repeated calls with the same batch
    shape are bit-identical, while single and batched evaluation of the
    same draw may differ by BLAS rounding (relative 1e-13).
    """

    def __init__(self, grid: GridSpec, cutoffs: CutoffSequence, mass: float,
                 jitter_ladder: tuple = JITTER_LADDER):
        if grid.n_nodes > MAX_DENSE_NODES:
            raise NumericalError(
                f"{grid.n_nodes} nodes exceed the dense-sampler cap of "
                f"{MAX_DENSE_NODES}; use a coarser grid")
        self.grid = grid
        self.cutoffs = cutoffs
        self.mass = float(mass)
        self.jitter_ladder = jitter_ladder
        self._factors = {}
        self._tables = {}
        nx, ny = grid.resolution
        dxs = grid.cell_size[0] * np.arange(nx)
        dys = grid.cell_size[1] * np.arange(ny)
        self._lag_table = np.hypot(dxs[:, None], dys[None, :])
        ii = np.arange(nx, dtype=np.int32)
        jj = np.arange(ny, dtype=np.int32)
        self._abs_di = np.abs(ii[:, None] - ii[None, :])
        self._abs_dj = np.abs(jj[:, None] - jj[None, :])

    def covariance_table(self, n: int) -> LayerCovarianceTable:
        if n not in self._tables:
            self._tables[n] = LayerCovarianceTable(
                n, self.cutoffs, self.mass, self.grid.max_lag * 1.01)
        return self._tables[n]

    def covariance_matrix(self, n: int) -> np.ndarray:
        """Dense node covariance of layer n via the lag table."""
        lag_cov = np.asarray(self.covariance_table(n)(self._lag_table))
        big_i = self._abs_di[:, None, :, None]
        big_j = self._abs_dj[None, :, None, :]
        nn = self.grid.n_nodes
        return lag_cov[big_i, big_j].reshape(nn, nn)

    def _factor(self, n: int):
        if n in self._factors:
            return self._factors[n]
        if self.cutoffs.log_ratio(n) == 0.0:
            self._factors[n] = None
            return None
        cov = self.covariance_matrix(n)
        nn = cov.shape[0]
        last_err = None
        for jitter in self.jitter_ladder:
            try:
                chol = np.linalg.cholesky(cov + jitter * np.eye(nn))
            except np.linalg.LinAlgError as exc:
                last_err = exc
                continue
            self._factors[n] = chol
            return chol
        raise NumericalError(
            f"layer {n} covariance not factorizable even with jitter "
            f"{self.jitter_ladder[-1]:g}: {last_err}")

    def sample_layer(self, n: int, master_seed: int, draw: int = 0) -> LayerSample:
        values = self._layer_values(n, master_seed, [draw])[0]
        return LayerSample(n, self.grid, values, self.cutoffs.log_ratio(n),
                           master_seed, draw)

    def _layer_values(self, n: int, master_seed: int, draws) -> np.ndarray:
        nx, ny = self.grid.resolution
        chol = self._factor(n)
        out = np.zeros((len(draws), nx, ny))
        if chol is None:
            # degenerate layer: zero field, and no stream consumption so
            # skipping it cannot shift any other layer's draw
            return out
        nn = self.grid.n_nodes
        noise = np.empty((nn, len(draws)))
        for col, d in enumerate(draws):
            gen = substream(master_seed, "layer", n, int(d))
            noise[:, col] = gen.standard_normal(nn)
        out[:] = (chol @ noise).T.reshape(len(draws), nx, ny)
        return out

    def field(self, level: int, master_seed: int, draw: int = 0) -> FieldState:
        return self.field_batch(level, master_seed, [draw])[0]

    def field_batch(self, level: int, master_seed: int, draws) -> list:
        """Level-n fields for several draws; one matmul per layer."""
        if level < 0 or level > self.cutoffs.levels:
            raise DomainError(
                f"level must lie in 0..{self.cutoffs.levels}, got {level}")
        draws = [int(d) for d in draws]
        nx, ny = self.grid.resolution
        total = np.zeros((len(draws), nx, ny))
        for n in range(1, level + 1):
            total += self._layer_values(n, master_seed, draws)
        var = field_variance(level, self.cutoffs)
        return [FieldState(level, self.grid, total[i], var, master_seed, d)
                for i, d in enumerate(draws)]

    def extend_field(self, state: FieldState, to_level: int) -> FieldState:
        """Same draw, deeper level: adds exactly the missing layers."""
        if to_level < state.level:
            raise ContractError("cannot extend to a shallower level")
        out = state
        for n in range(state.level + 1, to_level + 1):
            out = accumulate_field(out, self.sample_layer(n, state.master_seed,
                                                          state.draw))
        return out


@lru_cache(maxsize=16)
def _cached_sampler(grid: GridSpec, cutoffs: CutoffSequence,
                    mass: float) -> LayerSampler:
    return LayerSampler(grid, cutoffs, mass)


def get_sampler(grid: GridSpec, cutoffs: CutoffSequence,
                mass: float) -> LayerSampler:
    """Shared sampler with cached Cholesky factors for this geometry."""
    return _cached_sampler(grid, cutoffs, float(mass))


def sample_layer(grid: GridSpec, n: int, cutoffs: CutoffSequence, mass: float,
                 master_seed: int, draw: int = 0) -> LayerSample:
    return get_sampler(grid, cutoffs, mass).sample_layer(n, master_seed, draw)


def accumulate_field(state: FieldState, layer: LayerSample) -> FieldState:
    """Add the next layer to a partial-sum field."""
    if layer.grid != state.grid:
        raise ContractError("layer and field live on different grids")
    if layer.layer != state.level + 1:
        raise ContractError(
            f"field is at level {state.level}; next layer must be "
            f"{state.level + 1}, got {layer.layer}")
    if (layer.master_seed, layer.draw) != (state.master_seed, state.draw):
        raise ContractError("layer and field come from different draws")
    return FieldState(layer.layer, state.grid, state.values + layer.values,
                      state.variance + layer.variance_increment,
                      state.master_seed, state.draw)
