"""Banks of axis-parallel cubes (in cell units) used for sup-over-cubes statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import build_grids
from .grid import GridSpec


@dataclass(frozen=True, eq=False)
class CubeBank:
    """Cubes ``[lo, lo + side)^2`` in cell indices, all inside the window."""

    resolution: int
    lo: np.ndarray
    side: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=np.int64).reshape(-1, 2)
        side = np.array(self.side, dtype=np.int64).ravel()
        if lo.shape[0] != side.size:
            raise ValueError("corner and side arrays differ in length")
        if side.size and (side.min() < 1 or lo.min() < 0 or (lo + side[:, None]).max() > self.resolution):
            raise ValueError("every cube must lie in the window")
        lo.flags.writeable = False
        side.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "side", side)

    def __len__(self) -> int:
        return self.side.size

    def __iter__(self):
        for (a, b), s in zip(self.lo, self.side):
            yield int(a), int(b), int(s)

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.side[:, None]

    def straddles_origin(self) -> np.ndarray:
        c = self.resolution // 2
        return np.all((self.lo < c) & (self.hi > c), axis=1)

    def union(self, other: "CubeBank") -> "CubeBank":
        if other.resolution != self.resolution:
            raise ValueError("banks over different windows")
        return CubeBank(self.resolution, np.vstack([self.lo, other.lo]),
                        np.concatenate([self.side, other.side]))

    def unique(self) -> "CubeBank":
        key = np.column_stack([self.lo, self.side])
        _, idx = np.unique(key, axis=0, return_index=True)
        idx.sort()
        return CubeBank(self.resolution, self.lo[idx], self.side[idx])

    @classmethod
    def dyadic(cls, grid: GridSpec | int, min_side: int = 4, max_side: int | None = None) -> "CubeBank":
        """Every unclipped tile of the 3^n shifted grids with side in [min_side, max_side]."""
        n = grid.resolution if isinstance(grid, GridSpec) else int(grid)
        max_side = n if max_side is None else max_side
        los, sides = [], []
        for spec in build_grids(n):
            for k in spec.levels:
                s = 2 ** k
                if s < min_side or s > max_side:
                    continue
                ex, _ = spec.axis_tiles(k, 0)
                ey, _ = spec.axis_tiles(k, 1)
                fx = ex[:-1][np.diff(ex) == s]
                fy = ey[:-1][np.diff(ey) == s]
                if fx.size and fy.size:
                    X, Y = np.meshgrid(fx, fy, indexing="ij")
                    los.append(np.column_stack([X.ravel(), Y.ravel()]))
                    sides.append(np.full(X.size, s))
        return cls(n, np.vstack(los), np.concatenate(sides)).unique()

    @classmethod
    def random(cls, grid: GridSpec | int, count: int, seed: int = 0, min_side: int = 4,
               origin_fraction: float = 0.5) -> "CubeBank":
        """Random cubes; a fraction of them straddle the central cell corner (the origin)."""
        n = grid.resolution if isinstance(grid, GridSpec) else int(grid)
        rng = np.random.default_rng(seed)
        side = rng.integers(min_side, n + 1, size=count)
        lo = np.empty((count, 2), dtype=np.int64)
        k_orig = int(round(origin_fraction * count))
        for a in range(2):
            free = rng.integers(0, n - side + 1)
            c = n // 2
            # lo in [max(0, c - s + 1), min(c - 1, n - s)] keeps the origin strictly inside
            lo_min = np.maximum(0, c - side + 1)
            lo_max = np.minimum(c - 1, n - side)
            orig = lo_min + (rng.random(count) * (lo_max - lo_min + 1)).astype(np.int64)
            lo[:, a] = np.where(np.arange(count) < k_orig, orig, free)
        return cls(n, lo, side)

    @classmethod
    def centered(cls, grid: GridSpec | int, min_side: int = 4) -> "CubeBank":
        """Cubes centered at the origin, every even side >= min_side."""
        n = grid.resolution if isinstance(grid, GridSpec) else int(grid)
        sides = np.arange(max(2, min_side + (min_side % 2)), n + 1, 2)
        lo = n // 2 - sides // 2
        return cls(n, np.column_stack([lo, lo]), sides)

    @classmethod
    def standard(cls, grid: GridSpec | int, n_random: int = 10_000, seed: int = 0,
                 min_side: int = 4) -> "CubeBank":
        """Dyadic tiles of all shifted grids plus a random supplement."""
        bank = cls.dyadic(grid, min_side)
        if n_random:
            bank = bank.union(cls.random(grid, n_random, seed, min_side))
        return bank
