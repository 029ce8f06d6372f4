"""Binary field container: fixed 16-byte header plus row-major float64 data.

Layout (little endian): magic "KMAF", version u16, n u16, N u32, reserved
u32, then N^(2n) doubles.  The lattice period is not stored; fields load
onto the unit-period grid.
"""
from __future__ import annotations

import csv
import struct

import numpy as np

from .grid import PeriodicGrid, ScalarField

MAGIC = b"KMAF"
VERSION = 1
_HEADER = struct.Struct("<4sHHII")


def save_field(filename, f: ScalarField) -> None:
    if f.grid.period != 1.0:
        raise ValueError("field container only covers unit-period grids")
    with open(filename, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, f.grid.n_complex,
                              f.grid.resolution, 0))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(filename) -> ScalarField:
    with open(filename, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError("truncated field file")
        magic, version, n, N, _ = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ValueError("not a field container (bad magic)")
        if version != VERSION:
            raise ValueError(f"unsupported field container version {version}")
        grid = PeriodicGrid(n, N)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != grid.point_count:
        raise ValueError("field payload size does not match header")
    return ScalarField(grid, data.reshape(grid.shape).copy())


def save_field_csv(filename, f: ScalarField) -> None:
    """Debug dump: one row per point, integer axis indices then the value."""
    grid = f.grid
    axes = [f"i{a}" for a in range(grid.real_dim)]
    with open(filename, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(axes + ["value"])
        for idx in np.ndindex(grid.shape):
            writer.writerow(list(idx) + [f"{f.values[idx]:.17g}"])
