"""Binary grid serialization.

Layout: a 64-byte header followed by the node values as little-endian
float64 in row-major order (x index major, matching GridSpec.centers).

Header fields, packed little-endian:

    offset  size  type     field
    0       8     bytes    magic b"LVGRID01"
    8       4     2x u16   resolution (nx, ny)
    12      32    4x f64   origin_x, origin_y, extent_x, extent_y
    44      2     u16      level
    46      2     -        padding (zero)
    48      8     f64      variance
    56      8     u64      master seed

The excluded-ball radius is not serialized; it is a run-configuration
concern and travels in the manifest instead.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ContractError
from .gff import FieldState, GridSpec

MAGIC = b"LVGRID01"
_HEADER = struct.Struct("<8s2H4dH2xdQ")
HEADER_BYTES = _HEADER.size

assert HEADER_BYTES == 64


def write_grid_binary(path, grid: GridSpec, values: np.ndarray, level: int,
                      variance: float, master_seed: int) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(grid.resolution):
        raise ContractError(
            f"values shape {values.shape} does not match grid {grid.resolution}")
    header = _HEADER.pack(MAGIC, grid.resolution[0], grid.resolution[1],
                          grid.origin[0], grid.origin[1],
                          grid.extent[0], grid.extent[1],
                          int(level), float(variance), int(master_seed))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_grid_binary(path):
    """Returns (grid, values, level, variance, master_seed)."""
    with open(path, "rb") as fh:
        raw = fh.read(HEADER_BYTES)
        if len(raw) < HEADER_BYTES:
            raise ContractError(f"{path}: truncated header")
        magic, nx, ny, ox, oy, ex, ey, level, var, seed = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ContractError(f"{path}: bad magic {magic!r}")
        body = fh.read(8 * nx * ny)
    if len(body) != 8 * nx * ny:
        raise ContractError(f"{path}: expected {nx}x{ny} float64 values")
    values = np.frombuffer(body, dtype="<f8").reshape(nx, ny).copy()
    grid = GridSpec((ox, oy), (ex, ey), (nx, ny))
    return grid, values, level, var, seed


def write_field(path, state: FieldState) -> None:
    write_grid_binary(path, state.grid, state.values, state.level,
                      state.variance, state.master_seed)


def read_field(path, draw: int = 0) -> FieldState:
    """Rehydrate a field; the draw index is manifest data, not header data."""
    grid, values, level, var, seed = read_grid_binary(path)
    return FieldState(level, grid, values, var, seed, draw=draw)
