"""Uniform grids on a centered box, sampled fields and Riemann-sum norms.

Two lattices share one ``GridSpec`` geometry:

* ``"cell"``: samples at cell centers ``-L + (k + 1/2) h``. Every function
  that is a *input* or *output* of an operator lives here, so no sample sits
  at the origin.
* ``"node"``: samples at ``-L + k h``. Convolution kernels live here: the
  difference of two cell centers is an integer multiple of ``h``, so a node
  kernel convolved with a cell field lands back on the cell lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

LATTICES = ("cell", "node")


@dataclass(frozen=True)
class GridSpec:
    dim: int = 2
    half_width: float = 8.0
    resolution: int = 256
    lattice: str = "cell"

    def __post_init__(self):
        n = self.resolution
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if n < 16 or n & (n - 1):
            raise ValueError(f"resolution must be a power of two >= 16, got {n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.lattice not in LATTICES:
            raise ValueError(f"lattice must be one of {LATTICES}, got {self.lattice!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.resolution

    h = spacing

    @property
    def offset(self) -> float:
        """Fractional offset of sample 0 from ``-L`` in units of ``h``."""
        return 0.5 if self.lattice == "cell" else 0.0

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def with_lattice(self, lattice: str) -> "GridSpec":
        return GridSpec(self.dim, self.half_width, self.resolution, lattice)

    def coords(self) -> np.ndarray:
        k = np.arange(self.resolution)
        return -self.half_width + (k + self.offset) * self.spacing

    def mesh(self) -> tuple[np.ndarray, ...]:
        c = self.coords()
        return tuple(np.meshgrid(*([c] * self.dim), indexing="ij"))

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x * x for x in self.mesh()))

    def origin_index(self) -> int:
        """Node index of the origin (node lattice only)."""
        if self.lattice != "node":
            raise ValueError("cell lattice has no sample at the origin")
        return self.resolution // 2


@dataclass(frozen=True, eq=False)
class SampledField:
    """Real values on a ``GridSpec``; immutable once built."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise ValueError(f"non-finite value at index {tuple(bad)}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SampledField":
        return cls(grid, np.zeros(grid.shape))

    def _other(self, other):
        if isinstance(other, SampledField):
            if other.grid != self.grid:
                raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")
            return other.values
        return other

    def __add__(self, other):
        return SampledField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledField(self.grid, self.values - self._other(other))

    def __mul__(self, other):
        return SampledField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledField(self.grid, -self.values)

    def __abs__(self):
        return SampledField(self.grid, np.abs(self.values))

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    @cached_property
    def support_bbox(self) -> tuple[tuple[int, int], ...] | None:
        """Per-axis inclusive index range of nonzero samples, or None if zero."""
        nz = self.values != 0
        if not nz.any():
            return None
        out = []
        for ax in range(self.grid.dim):
            other = tuple(a for a in range(self.grid.dim) if a != ax)
            idx = np.flatnonzero(nz.any(axis=other))
            out.append((int(idx[0]), int(idx[-1])))
        return tuple(out)


@dataclass(frozen=True)
class QuadratureSpec:
    """Nodes/weights for ``t`` in [1, 2] plus the dyadic scale range."""

    t_nodes: tuple[tuple[float, float], ...]
    j_min: int
    j_max: int

    def __post_init__(self):
        if not self.t_nodes:
            raise ValueError("empty t-node set")
        for t, w in self.t_nodes:
            if not (1.0 <= t <= 2.0) or not w > 0:
                raise ValueError(f"bad t-node ({t}, {w})")
        if abs(sum(w for _, w in self.t_nodes) - 1.0) > 1e-12:
            raise ValueError("t weights must sum to 1")

    @classmethod
    def gauss(cls, n_nodes: int, j_min: int, j_max: int) -> "QuadratureSpec":
        x, w = leggauss(n_nodes)
        nodes = tuple((1.5 + 0.5 * float(a), 0.5 * float(b)) for a, b in zip(x, w))
        return cls(nodes, j_min, j_max)

    @classmethod
    def for_grid(cls, grid: GridSpec, n_nodes: int = 4, l: int = 0) -> "QuadratureSpec":
        """Widest scale range whose annuli (and mollifiers at ``l``) resolve on ``grid``.

        Inner annulus radius 2^(j-1) >= 8h (lattice mass error < 3%), outer
        radius 2^(j+1) <= L/2, and for ``l >= 1`` the mollifier radius
        2^(j-l-2) >= 2h.
        """
        h, L = grid.spacing, grid.half_width
        j_min = int(np.ceil(np.log2(16 * h) - 1e-12))
        if l >= 1:
            j_min = max(j_min, int(np.ceil(np.log2(8 * h) - 1e-12)) + l)
        j_max = int(np.floor(np.log2(L / 4) + 1e-12))
        if j_min > j_max:
            raise ValueError(f"no resolvable scale on {grid} for l={l}")
        return cls.gauss(n_nodes, j_min, j_max)

    @property
    def scales(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.array([t for t, _ in self.t_nodes])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.t_nodes])

    def with_scales(self, j_min: int, j_max: int) -> "QuadratureSpec":
        return QuadratureSpec(self.t_nodes, j_min, j_max)

    def check_grid(self, grid: GridSpec) -> None:
        h, L = grid.spacing, grid.half_width
        if self.j_min > self.j_max:
            raise ValueError("empty scale range")
        if 2.0 ** self.j_min < 4 * h - 1e-12 or 2.0 ** self.j_max > L / 4 + 1e-12:
            raise ValueError(
                f"scales [{self.j_min}, {self.j_max}] not resolvable for h={h}, L={L}")


def sample(closed_form: Callable[..., np.ndarray], grid: GridSpec) -> SampledField:
    """Evaluate ``closed_form(*coords)`` at every sample point of ``grid``."""
    pts = grid.mesh()
    vals = np.broadcast_to(np.asarray(closed_form(*pts), dtype=float), grid.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = tuple(np.argwhere(bad)[0])
        x = tuple(float(p[k]) for p in pts)
        raise ValueError(f"descriptor returned {vals[k]} at point {x}")
    return SampledField(grid, vals)


def _check_p(p: float) -> None:
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")


def lp_norm(f: SampledField, p: float) -> float:
    _check_p(p)
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum() * f.grid.cell_volume)
    m = a.max()
    if m == 0:
        return 0.0
    # scaled to avoid overflow for large p
    return float(m * (np.sum((a / m) ** p) * f.grid.cell_volume) ** (1.0 / p))


def weighted_lp_norm(f: SampledField, w, p: float) -> float:
    """(sum |f|^p w h^n)^(1/p); ``w`` is a Weight or a positive SampledField."""
    _check_p(p)
    wf = getattr(w, "field", w)
    if wf.grid != f.grid:
        raise ValueError("weight and field live on different grids")
    wv = wf.values
    if not np.all(wv > 0):
        k = tuple(np.argwhere(~(wv > 0))[0])
        raise ValueError(f"non-positive weight sample {wv[k]} at index {k}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    m = a.max()
    if m == 0:
        return 0.0
    return float(m * (np.sum((a / m) ** p * wv) * f.grid.cell_volume) ** (1.0 / p))


def indicator(mask_fn: Callable[..., np.ndarray]) -> Callable[..., np.ndarray]:
    return lambda *x: np.asarray(mask_fn(*x), dtype=float)


def centered_box_mask(grid: GridSpec, fraction: float = 0.5) -> np.ndarray:
    """Samples inside the inner box [-fraction*L, fraction*L)^n."""
    c = grid.coords()
    inside = (c >= -fraction * grid.half_width) & (c < fraction * grid.half_width)
    m = inside
    for _ in range(grid.dim - 1):
        m = np.multiply.outer(m, inside)
    return m


def stack_values(fields: Sequence[SampledField]) -> np.ndarray:
    return np.stack([f.values for f in fields])
