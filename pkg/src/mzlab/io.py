"""MZF1 binary field dumps and CSV exports."""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import GridSpec, SampledField
from .sphere import AngularKernel

MAGIC = b"MZF1"
# magic, dim, N, L, lattice code, padding to 32 bytes
HEADER = struct.Struct("<4sIId B11x")
LATTICES = ("cell", "node")
assert HEADER.size == 32


def write_field(path, f: SampledField) -> None:
    """32-byte header then float64 little-endian values in row-major order."""
    g = f.grid
    head = HEADER.pack(MAGIC, g.dim, g.resolution, g.half_width, LATTICES.index(g.lattice))
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path) -> SampledField:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, dim, N, L, lat = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if lat >= len(LATTICES):
        raise ValueError(f"{path}: unknown lattice code {lat}")
    grid = GridSpec(dim, L, N, LATTICES[lat])
    count = N ** dim
    body = data[HEADER.size:]
    if len(body) != 8 * count:
        raise ValueError(f"{path}: expected {count} values, found {len(body) // 8}")
    vals = np.frombuffer(body, dtype="<f8").reshape(grid.shape).astype(float)
    return SampledField(grid, vals)


def field_to_csv(path, f: SampledField) -> None:
    """Rows (index, x, y, value) with the flat row-major index."""
    x, y = f.grid.mesh()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "x", "y", "value"])
        for k, (a, b, v) in enumerate(zip(x.ravel(), y.ravel(), f.values.ravel())):
            wr.writerow([k, repr(float(a)), repr(float(b)), repr(float(v))])


def kernel_to_csv(path, omega: AngularKernel) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["theta", "omega"])
        for th, v in zip(omega.angles, omega.samples):
            wr.writerow([repr(float(th)), repr(float(v))])


def kernel_from_csv(path, q_class: float = np.inf, name: str = "custom") -> AngularKernel:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    vals = np.array([float(r[1]) for r in rows])
    return AngularKernel(vals, q_class, name)


def write_rows(path, columns, rows) -> None:
    """RFC-4180 CSV from dict rows."""
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        wr.writeheader()
        for r in rows:
            wr.writerow(r)
