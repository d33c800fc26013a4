"""Shifted dyadic grids on the cell lattice, CZ decomposition and sparse families.

Indices are cell indices on a ``GridSpec`` of resolution N. Level ``k`` tiles
have side ``2**k`` cells; tiles are clipped to the window [0, N)^n and
clipped tiles count measure by clipped volume.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grid import GridSpec, SampledField

SHIFTS = (0.0, 1.0 / 3.0, -1.0 / 3.0)
TIE_RTOL = 1e-9


@lru_cache(maxsize=None)
def _level_offset(alpha: float, k: int, n: int) -> int:
    """Cell offset of the level-k lattice for a window of n cells.

    o_k = sign * a3 ((-2)^k - (-2)^j) / 3 with a3 = 3 alpha, j = log2(n) - 4 and
    sign = (-1)^log2(n). Consecutive offsets differ by a multiple of 2^k (nesting),
    the relative shift alternates +-alpha with the parity of the physical side,
    and the cut positions in physical units do not depend on n.
    """
    a3 = int(round(3 * alpha))
    m = int(np.log2(n))
    sign = -1 if m % 2 else 1
    return sign * a3 * ((-2) ** k - (-2) ** max(m - 4, 0)) // 3


@lru_cache(maxsize=4096)
def _axis_tiles(alpha: float, k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    s = 2 ** k
    o = _level_offset(alpha, k, n)
    m0 = (0 - o) // s
    m1 = -((o - n) // s)
    m = np.arange(m0, m1 + 1)
    edges = np.clip(o + s * m, 0, n)
    keep = np.concatenate(([True], np.diff(edges) > 0))
    edges, m = edges[keep], m[keep]
    edges.flags.writeable = False
    idx = m[:-1].copy()
    idx.flags.writeable = False
    return edges, idx


@dataclass(frozen=True)
class DyadicGridSpec:
    """One of the 3^n shifted dyadic systems over an N-cell window."""

    shift: tuple[float, ...]
    resolution: int

    def __post_init__(self):
        for a in self.shift:
            if min(abs(a - s) for s in SHIFTS) > 1e-12:
                raise ValueError(f"shift components must be in {{0, 1/3, -1/3}}, got {self.shift}")

    @property
    def dim(self) -> int:
        return len(self.shift)

    @property
    def top_level(self) -> int:
        # one level past the window so that every grid has a tile covering large cubes
        return int(np.log2(self.resolution)) + 1

    @property
    def levels(self) -> range:
        return range(0, self.top_level + 1)

    def axis_tiles(self, k: int, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """(edges, global tile indices) along one axis at level k, clipped to the window."""
        return _axis_tiles(self.shift[axis], k, self.resolution)

    def tile_of_cell(self, k: int, axis: int) -> np.ndarray:
        edges, _ = self.axis_tiles(k, axis)
        return np.searchsorted(edges, np.arange(self.resolution), side="right") - 1

    def tiles(self, k: int):
        """Iterate (index vector, lo, hi) for every level-k tile."""
        per_axis = [self.axis_tiles(k, a) for a in range(self.dim)]
        for combo in itertools.product(*[range(len(e) - 1) for e, _ in per_axis]):
            lo = tuple(int(per_axis[a][0][c]) for a, c in enumerate(combo))
            hi = tuple(int(per_axis[a][0][c + 1]) for a, c in enumerate(combo))
            idx = tuple(int(per_axis[a][1][c]) for a, c in enumerate(combo))
            yield idx, lo, hi


def build_grids(grid: GridSpec | int, dim: int = 2) -> list[DyadicGridSpec]:
    """All 3^n shifted systems covering the box."""
    n = grid.resolution if isinstance(grid, GridSpec) else int(grid)
    d = grid.dim if isinstance(grid, GridSpec) else dim
    return [DyadicGridSpec(tuple(s), n) for s in itertools.product(SHIFTS, repeat=d)]


def summed_area(values: np.ndarray) -> np.ndarray:
    """Zero-bordered 2-D prefix sums: S[i, j] = values[:i, :j].sum()."""
    S = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
    np.cumsum(values, axis=0, out=S[1:, 1:])
    np.cumsum(S[1:, 1:], axis=1, out=S[1:, 1:])
    return S


def box_sums(S: np.ndarray, ex: np.ndarray, ey: np.ndarray) -> np.ndarray:
    """Sums over the rectangles cut by edge arrays ``ex`` x ``ey``."""
    return (S[np.ix_(ex[1:], ey[1:])] - S[np.ix_(ex[:-1], ey[1:])]
            - S[np.ix_(ex[1:], ey[:-1])] + S[np.ix_(ex[:-1], ey[:-1])])


def level_averages(S: np.ndarray, spec: DyadicGridSpec, k: int):
    ex, _ = spec.axis_tiles(k, 0)
    ey, _ = spec.axis_tiles(k, 1)
    area = np.outer(np.diff(ex), np.diff(ey))
    return box_sums(S, ex, ey) / area, ex, ey


def dyadic_maximal(values: np.ndarray, grids: list[DyadicGridSpec] | None = None,
                   min_level: int = 0, max_level: int | None = None) -> np.ndarray:
    """max over tiles P containing x (all grids, levels in range) of the mean of |values| on P."""
    a = np.abs(np.asarray(values, dtype=float))
    n = a.shape[0]
    grids = grids or build_grids(n)
    S = summed_area(a)
    out = np.zeros_like(a)
    for spec in grids:
        top = spec.top_level if max_level is None else max_level
        for k in range(min_level, top + 1):
            avg, ex, ey = level_averages(S, spec, k)
            up = np.repeat(np.repeat(avg, np.diff(ex), axis=0), np.diff(ey), axis=1)
            np.maximum(out, up, out=out)
    return out


def local_maximal_integral(values: np.ndarray, lo: tuple[int, int], side: int,
                           grids: list[DyadicGridSpec]) -> float:
    """Integral (in cells) over the cube Q of the dyadic maximal function of values * chi_Q.

    Tiles straddling Q contribute w(P cap Q) / |P cap box|.
    """
    i0, j0 = lo
    n = grids[0].resolution
    win = np.asarray(values[i0:i0 + side, j0:j0 + side], dtype=float)
    S = summed_area(win)
    out = np.zeros_like(win)
    for spec in grids:
        for k in spec.levels:
            parts = []
            for axis, start in ((0, i0), (1, j0)):
                edges, _ = spec.axis_tiles(k, axis)
                inner = edges[(edges > start) & (edges < start + side)]
                cut = np.concatenate(([start], inner, [start + side]))
                tile = np.searchsorted(edges, cut[:-1], side="right") - 1
                parts.append((cut - start, np.diff(edges)[tile]))
            (cx, wx), (cy, wy) = parts
            avg = box_sums(S, cx, cy) / np.outer(wx, wy)
            up = np.repeat(np.repeat(avg, np.diff(cx), axis=0), np.diff(cy), axis=1)
            np.maximum(out, up, out=out)
    return float(out.sum())


# ---------------------------------------------------------------------------
# Calderon-Zygmund decomposition


@dataclass(frozen=True)
class Cube:
    level: int
    index: tuple[int, ...]
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in zip(self.lo, self.hi))

    @property
    def volume(self) -> int:
        return int(np.prod([b - a for a, b in zip(self.lo, self.hi)]))

    @property
    def clipped(self) -> bool:
        s = 2 ** self.level
        return any(b - a != s for a, b in zip(self.lo, self.hi))

    def contains(self, other: "Cube") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    lam: float
    cubes: list[Cube]
    good: SampledField
    bad_parts: list[tuple[Cube, SampledField]]
    exempt: list[int] = field(default_factory=list)

    @property
    def bad(self) -> SampledField:
        total = np.zeros(self.good.grid.shape)
        for _, b in self.bad_parts:
            total += b.values
        return SampledField(self.good.grid, total)


def _stopping_cubes(avgs: dict, spec: DyadicGridSpec, root: Cube, thr: float) -> tuple[list[Cube], np.ndarray]:
    """Maximal tiles strictly inside ``root`` whose average exceeds ``thr``.

    Returns the cubes and the mask of root cells not covered by any of them.
    """
    covered = np.zeros((1, 1), dtype=bool)
    found: list[Cube] = []
    prev_rng = None
    for kk in range(root.level - 1, -1, -1):
        A, ex, ey, cell_tile = avgs[kk]
        rx = np.arange(cell_tile[0][root.lo[0]], cell_tile[0][root.hi[0] - 1] + 1)
        ry = np.arange(cell_tile[1][root.lo[1]], cell_tile[1][root.hi[1] - 1] + 1)
        if prev_rng is None:
            up = np.zeros((rx.size, ry.size), dtype=bool)
        else:
            _, pex, pey, pct = avgs[kk + 1]
            px = pct[0][ex[rx]] - prev_rng[0][0]
            py = pct[1][ey[ry]] - prev_rng[1][0]
            up = covered[np.ix_(px, py)]
        sel = (A[np.ix_(rx, ry)] > thr) & ~up
        if sel.any():
            gx, gy = spec.axis_tiles(kk, 0)[1], spec.axis_tiles(kk, 1)[1]
            for a, b in zip(*np.nonzero(sel)):
                ix, iy = rx[a], ry[b]
                found.append(Cube(kk, (int(gx[ix]), int(gy[iy])),
                                  (int(ex[ix]), int(ey[iy])), (int(ex[ix + 1]), int(ey[iy + 1]))))
        covered = up | sel
        prev_rng = (rx, ry)
    if prev_rng is None:  # root is a single cell
        return found, np.ones((root.hi[0] - root.lo[0], root.hi[1] - root.lo[1]), dtype=bool)
    return found, ~covered


def _level_tables(values: np.ndarray, spec: DyadicGridSpec) -> dict:
    S = summed_area(values)
    out = {}
    for k in spec.levels:
        A, ex, ey = level_averages(S, spec, k)
        out[k] = (A, ex, ey, (spec.tile_of_cell(k, 0), spec.tile_of_cell(k, 1)))
    return out


def _roots(spec: DyadicGridSpec) -> list[Cube]:
    k = spec.top_level
    return [Cube(k, idx, lo, hi) for idx, lo, hi in spec.tiles(k)]


def cz_decompose(f: SampledField, lam: float, grid_spec: DyadicGridSpec) -> CZDecomposition:
    """Split f at level ``lam`` along the maximal tiles with mean |f| above ``lam``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if f.grid.dim != 2 or grid_spec.resolution != f.grid.resolution:
        raise ValueError("grid spec does not match the field")
    a = np.abs(f.values)
    tables = _level_tables(a, grid_spec)
    top = tables[grid_spec.top_level][0]
    if top.max() > lam:
        raise ValueError(f"root cube already exceeds level: mean {top.max():.6g} > lambda {lam:.6g}")
    cubes: list[Cube] = []
    for root in _roots(grid_spec):
        found, _ = _stopping_cubes(tables, grid_spec, root, lam)
        cubes.extend(found)
    good = f.values.copy()
    bad_parts = []
    exempt = []
    n = 2 ** f.grid.dim
    for i, Q in enumerate(cubes):
        sl = Q.slices
        mean = f.values[sl].mean()
        b = np.zeros(f.grid.shape)
        b[sl] = f.values[sl] - mean
        good[sl] = mean
        bad_parts.append((Q, SampledField(f.grid, b)))
        if np.abs(f.values[sl]).mean() > n * lam:
            # only possible when clipping made the parent tile less than 2^n times larger
            exempt.append(i)
    return CZDecomposition(lam, cubes, SampledField(f.grid, good), bad_parts, exempt)


# ---------------------------------------------------------------------------
# sparse families and operators


@dataclass(frozen=True, eq=False)
class SparseFamily:
    grid: DyadicGridSpec
    members: list[Cube]
    major_sets: list[np.ndarray]
    eta: float

    def __len__(self) -> int:
        return len(self.members)

    def certify(self) -> None:
        """Raise unless every E_Q is inside Q, |E_Q| >= eta |Q| and the E_Q are disjoint."""
        n = self.grid.resolution
        owner = np.zeros((n,) * self.grid.dim, dtype=np.int64)
        for Q, E in zip(self.members, self.major_sets):
            if E.shape != tuple(b - a for a, b in zip(Q.lo, Q.hi)):
                raise AssertionError(f"major set of {Q} has the wrong shape")
            if E.sum() < self.eta * Q.volume:
                raise AssertionError(f"|E_Q| = {E.sum()} < eta |Q| = {self.eta * Q.volume} for {Q}")
            owner[Q.slices] += E
        if owner.max() > 1:
            raise AssertionError("major sets overlap")

    def to_json(self) -> str:
        return json.dumps({
            "shift": list(self.grid.shift),
            "resolution": self.grid.resolution,
            "eta": self.eta,
            "cubes": [{"level": Q.level, "index": list(Q.index), "lo": list(Q.lo), "hi": list(Q.hi),
                       "major_set_rle": rle_encode(E)} for Q, E in zip(self.members, self.major_sets)],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SparseFamily":
        d = json.loads(text)
        spec = DyadicGridSpec(tuple(d["shift"]), d["resolution"])
        members, masks = [], []
        for c in d["cubes"]:
            Q = Cube(c["level"], tuple(c["index"]), tuple(c["lo"]), tuple(c["hi"]))
            members.append(Q)
            masks.append(rle_decode(c["major_set_rle"], tuple(b - a for a, b in zip(Q.lo, Q.hi))))
        return cls(spec, members, masks, d["eta"])


def rle_encode(mask: np.ndarray) -> list[list[int]]:
    """[start, length] runs of True in the row-major flattening."""
    flat = np.concatenate(([False], mask.ravel(), [False])).astype(np.int8)
    d = np.diff(flat)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return [[int(s), int(e - s)] for s, e in zip(starts, ends)]


def rle_decode(runs, shape) -> np.ndarray:
    flat = np.zeros(int(np.prod(shape)), dtype=bool)
    for s, n in runs:
        flat[s:s + n] = True
    return flat.reshape(shape)


def build_sparse_family(f, grid_spec: DyadicGridSpec, eta: float = 0.5,
                        r: float = 1.0) -> SparseFamily:
    """Stopping-time family for the data |f|^r.

    Starting from the top tiles, the children of Q are the maximal tiles
    inside Q whose mean exceeds (2/eta) times the mean on Q; E_Q is Q minus
    its children.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must be in (0, 1)")
    vals = f.values if isinstance(f, SampledField) else np.asarray(f, dtype=float)
    g = np.abs(vals) ** r
    if not g.any():
        raise ValueError("f vanishes identically")
    tables = _level_tables(g, grid_spec)
    C = 2.0 / eta
    members, masks = [], []
    queue = _roots(grid_spec)
    while queue:
        Q = queue.pop()
        mean = g[Q.slices].mean()
        if mean > 0 and Q.level > 0:
            # symmetric data often puts a child exactly at the threshold; such ties are not selected
            kids, E = _stopping_cubes(tables, grid_spec, Q, C * mean * (1 + TIE_RTOL))
        else:
            kids, E = [], np.ones(tuple(b - a for a, b in zip(Q.lo, Q.hi)), dtype=bool)
        if E.sum() < eta * Q.volume:
            raise ValueError(f"eta-infeasible selection in cube {Q}: |E_Q|/|Q| = {E.sum() / Q.volume:.3f}")
        members.append(Q)
        masks.append(E)
        queue.extend(kids)
    order = sorted(range(len(members)), key=lambda i: (-members[i].level, members[i].lo))
    return SparseFamily(grid_spec, [members[i] for i in order], [masks[i] for i in order], eta)


def _values(f) -> tuple[np.ndarray, GridSpec | None]:
    if isinstance(f, SampledField):
        return f.values, f.grid
    return np.asarray(f, dtype=float), None


def _wrap(vals: np.ndarray, grid: GridSpec | None):
    return SampledField(grid, vals) if grid is not None else vals


def sparse_operator(S: SparseFamily, f) -> SampledField:
    vals, grid = _values(f)
    out = np.zeros(vals.shape)
    for Q in S.members:
        out[Q.slices] += vals[Q.slices].mean()
    return _wrap(out, grid)


def sparse_operator_r(S: SparseFamily, f, r: float) -> SampledField:
    """(sum_Q <f>_Q^r chi_Q)^(1/r)."""
    if not r > 0:
        raise ValueError("r must be positive")
    if r == 1:
        return sparse_operator(S, f)
    vals, grid = _values(f)
    out = np.zeros(vals.shape)
    for Q in S.members:
        m = vals[Q.slices].mean()
        if m < 0 and r != int(r):
            raise ValueError(f"negative average {m} on {Q} with fractional r={r}")
        out[Q.slices] += m ** r
    return _wrap(out ** (1.0 / r), grid)


def sparse_operator_Lr(S: SparseFamily, f, r: float) -> SampledField:
    """sum_Q <|f|^r>_Q^(1/r) chi_Q."""
    if not r >= 1:
        raise ValueError("r must be >= 1")
    vals, grid = _values(f)
    a = np.abs(vals) ** r
    out = np.zeros(vals.shape)
    for Q in S.members:
        out[Q.slices] += a[Q.slices].mean() ** (1.0 / r)
    return _wrap(out, grid)


def covering_tile(grids: list[DyadicGridSpec], lo, hi) -> Cube | None:
    """Smallest tile from any grid containing the cell box [lo, hi)."""
    best = None
    for spec in grids:
        for k in spec.levels:
            if 2 ** k < max(b - a for a, b in zip(lo, hi)):
                continue
            ok, tlo, thi, tidx = True, [], [], []
            for axis in range(spec.dim):
                edges, gidx = spec.axis_tiles(k, axis)
                t = np.searchsorted(edges, lo[axis], side="right") - 1
                if edges[t + 1] < hi[axis]:
                    ok = False
                    break
                tlo.append(int(edges[t]))
                thi.append(int(edges[t + 1]))
                tidx.append(int(gidx[t]))
            if ok:
                if best is None or k < best.level:
                    best = Cube(k, tuple(tidx), tuple(tlo), tuple(thi))
                break
    return best
