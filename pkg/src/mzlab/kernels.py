"""Truncated annular kernels, mollifiers and the zero-padded FFT convolution engine."""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .grid import GridSpec, QuadratureSpec, SampledField
from .sphere import AngularKernel, origin_cell_integral

# inner annulus radius, in cells, below which lattice sums miss the kernel mass by > 3%
MIN_INNER_RADIUS_CELLS = 8.0
MIN_MOLLIFIER_RADIUS_CELLS = 2.0


@dataclass(frozen=True, eq=False)
class TruncatedKernel:
    j: int
    t: float
    field: SampledField
    omega: AngularKernel


@dataclass(frozen=True, eq=False)
class Mollifier:
    l: int
    field: SampledField


def _require_2d(grid: GridSpec) -> None:
    if grid.dim != 2:
        raise NotImplementedError("kernels are implemented for n = 2 only")


def _node_polar(grid: GridSpec):
    g = grid.with_lattice("node")
    x, y = g.mesh()
    return g, np.hypot(x, y), np.arctan2(y, x)


def _omega_on_cells(omega: AngularKernel, r: np.ndarray, th: np.ndarray, h: float) -> np.ndarray:
    """Omega(x') at each sample.

    Bounded kernels are point-evaluated. Unbounded (q < inf) kernels use the
    mean over the angle h/|x| subtended by the sample's cell: lattice rays hit
    the singular direction exactly, and a point value there is not a quadrature
    of anything.
    """
    if np.isinf(omega.q_class):
        return omega(th)
    return omega.averaged(th, h / r)


def build_k_jt(omega: AngularKernel, j: int, t: float, grid: GridSpec) -> TruncatedKernel:
    """2^-j Omega(x) |x|^-(n-1) on the annulus 2^(j-1) t < |x| <= 2^j t."""
    _require_2d(grid)
    h, L = grid.spacing, grid.half_width
    inner, outer = 2.0 ** (j - 1) * t, 2.0 ** j * t
    if not 1.0 <= t <= 2.0:
        raise ValueError(f"t={t} outside [1, 2]")
    if inner < MIN_INNER_RADIUS_CELLS * h - 1e-12 or outer > L + 1e-12:
        raise ValueError(
            f"annulus for j={j}, t={t} is not resolvable with h={h} "
            f"(needs inner radius >= {MIN_INNER_RADIUS_CELLS:g}h and outer <= L={L})")
    g, r, th = _node_polar(grid)
    mask = (r > inner) & (r <= outer)
    vals = np.zeros(g.shape)
    vals[mask] = 2.0 ** (-j) * _omega_on_cells(omega, r[mask], th[mask], h) / r[mask]
    return TruncatedKernel(j, float(t), SampledField(g, vals), omega)


def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def build_mollifier(l: int, grid: GridSpec) -> Mollifier:
    """phi_l(y) = 2^(-nl) phi(2^-l y), phi a C-infinity bump on |x| < 1/4, unit discrete mass."""
    _require_2d(grid)
    h, L = grid.spacing, grid.half_width
    rad = 2.0 ** (l - 2)
    if rad < MIN_MOLLIFIER_RADIUS_CELLS * h - 1e-12 or rad > L:
        raise ValueError(f"mollifier support radius {rad} unresolvable for h={h}, L={L}")
    g, r, _ = _node_polar(grid)
    vals = _bump(r / rad)
    vals /= vals.sum() * g.cell_volume
    return Mollifier(l, SampledField(g, vals))


def ball_kernel(omega: AngularKernel, t: float, grid: GridSpec) -> SampledField:
    """Omega(x)/|x| on |x| <= t; the origin node carries the exact origin-cell average."""
    _require_2d(grid)
    h = grid.spacing
    if t < 2 * h - 1e-12 or t > grid.half_width:
        raise ValueError(f"ball radius t={t} unresolvable for h={h}")
    g, r, th = _node_polar(grid)
    mask = (r <= t) & (r > 0)
    vals = np.zeros(g.shape)
    vals[mask] = _omega_on_cells(omega, r[mask], th[mask], h) / r[mask]
    c = g.origin_index()
    vals[c, c] = origin_cell_integral(omega, h) / (h * h)
    return SampledField(g, vals)


def singular_kernel(omega: AngularKernel, eps: float, R: float, grid: GridSpec) -> SampledField:
    """Omega(y')/|y|^2 on eps < |y| < R."""
    _require_2d(grid)
    h = grid.spacing
    if not (2 * h - 1e-12 <= eps < R <= grid.half_width / 2 + 1e-12):
        raise ValueError(f"band eps={eps}, R={R} unresolvable (h={h}, L={grid.half_width})")
    g, r, th = _node_polar(grid)
    mask = (r > eps) & (r < R)
    vals = np.zeros(g.shape)
    vals[mask] = _omega_on_cells(omega, r[mask], th[mask], h) / r[mask] ** 2
    return SampledField(g, vals)


# ---------------------------------------------------------------------------
# convolution engine


def _pad_shape(grid: GridSpec) -> tuple[int, ...]:
    return tuple(2 * n for n in grid.shape)


def _crop_shift(a: GridSpec, b: GridSpec) -> tuple[int, GridSpec]:
    if (a.dim, a.resolution, a.half_width) != (b.dim, b.resolution, b.half_width):
        raise ValueError(f"incompatible grids: {a} vs {b}")
    oc = (a.offset + b.offset) % 1.0
    shift = a.resolution // 2 + oc - a.offset - b.offset
    out = a.with_lattice("cell" if oc == 0.5 else "node")
    return int(round(shift)), out


def spectrum(f: SampledField) -> np.ndarray:
    return sfft.rfftn(f.values, s=_pad_shape(f.grid))


_cache: OrderedDict = OrderedDict()
_cache_lock = threading.RLock()
CACHE_BYTES = 1 << 30


def cached_spectrum(key, builder) -> tuple[SampledField, np.ndarray]:
    """Memoize (field, spectrum) for a kernel; least recently used entries go first past CACHE_BYTES."""
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            _cache.move_to_end(key)
            return hit
        fld = builder()
        hit = (fld, spectrum(fld))
        _cache[key] = hit
        total = sum(f.values.nbytes + s.nbytes for f, s in _cache.values())
        while total > CACHE_BYTES and len(_cache) > 1:
            _, (f, s) = _cache.popitem(last=False)
            total -= f.values.nbytes + s.nbytes
    return hit


def clear_cache() -> None:
    with _cache_lock:
        _cache.clear()


def convolve_spectra(a: SampledField, a_hat: np.ndarray, b: SampledField, b_hat: np.ndarray,
                     crop: bool = False) -> SampledField:
    """Linear convolution from precomputed padded spectra (see ``spectral_convolve``)."""
    shift, out_grid = _crop_shift(a.grid, b.grid)
    N, dim = a.grid.resolution, a.grid.dim
    ba, bb = a.support_bbox, b.support_bbox
    if ba is None or bb is None:
        return SampledField.zeros(out_grid)
    full = sfft.irfftn(a_hat * b_hat, s=_pad_shape(a.grid))
    sl, keep = [], []
    for ax in range(dim):
        lo = ba[ax][0] + bb[ax][0]
        hi = ba[ax][1] + bb[ax][1]
        if not crop and (lo < shift or hi > shift + N - 1):
            raise ValueError(
                f"wraparound risk: convolution support [{lo}, {hi}] on axis {ax} "
                f"leaves the box window [{shift}, {shift + N - 1}]")
        sl.append(slice(shift, shift + N))
        keep.append((max(lo, shift) - shift, min(hi, shift + N - 1) - shift))
    out = full[tuple(sl)] * a.grid.cell_volume
    # exact zeros outside the combined support; round-off there is pure FFT noise
    mask = np.zeros(out.shape, dtype=bool)
    mask[tuple(slice(k0, k1 + 1) for k0, k1 in keep)] = True
    out[~mask] = 0.0
    return SampledField(out_grid, out)


def spectral_convolve(a: SampledField, b: SampledField, crop: bool = False) -> SampledField:
    """Non-circular convolution ``(a * b)(x) = sum_y a(x - y) b(y) h^n``.

    Both fields are zero-padded to twice the resolution so no wraparound can
    occur; the result is cropped back to the box. Lattices combine by parity
    (cell * node -> cell, cell * cell -> node, node * node -> node). Unless
    ``crop`` is set, a result whose support would leave the box is rejected.
    """
    return convolve_spectra(a, spectrum(a), b, spectrum(b), crop=crop)


def smooth_kernel(K: TruncatedKernel, l: int) -> SampledField:
    """K_t^j * phi_{j-l}."""
    phi = build_mollifier(K.j - l, K.field.grid)
    return spectral_convolve(K.field, phi.field)


def k_jt_spectrum(omega: AngularKernel, j: int, t: float, grid: GridSpec,
                  l: int | None = None) -> tuple[SampledField, np.ndarray]:
    """Cached (field, padded spectrum) of K_t^j, or of K_t^j * phi_{j-l} when ``l`` is given."""
    g = grid.with_lattice("node")
    if l is None:
        key = ("kjt", omega.key, g, j, float(t))
        return cached_spectrum(key, lambda: build_k_jt(omega, j, t, g).field)
    key = ("kjt-l", omega.key, g, j, float(t), l)
    return cached_spectrum(key, lambda: smooth_kernel(build_k_jt(omega, j, t, g), l))


def mollified_spectrum_admissible(j: int, l: int, grid: GridSpec) -> bool:
    return 2.0 ** (j - l - 2) >= MIN_MOLLIFIER_RADIUS_CELLS * grid.spacing - 1e-12


# ---------------------------------------------------------------------------
# kernel regularity sums


def regularity_sum_check(omega: AngularKernel, l: int, R: float, y, k: int,
                         grid: GridSpec, quad: QuadratureSpec | None = None,
                         q: float | None = None, surrogate_q: float = 8.0,
                         return_sum: bool = False):
    """Ratio of the annulus regularity sum to (2^k R)^(-n/q') min(1, 2^l |y| / (2^k R)).

    The sum runs over the admissible scales of ``quad`` and takes the sup
    over its t-nodes; ``q`` defaults to Omega's class, with ``surrogate_q``
    standing in for q = infinity. ``y`` must be a lattice vector.
    """
    _require_2d(grid)
    h = grid.spacing
    y = np.asarray(y, dtype=float)
    ny = float(np.hypot(*y))
    if not ny < R / 4:
        raise ValueError(f"need |y| < R/4, got |y|={ny}, R={R}")
    shift = np.round(y / h).astype(int)
    if not np.allclose(shift * h, y, atol=1e-12):
        raise ValueError("y must be a multiple of the grid spacing")
    r_in, r_out = 2.0 ** k * R, 2.0 ** (k + 1) * R
    if r_in < 2 * h or r_out + ny > grid.half_width + 1e-12:
        raise ValueError(f"annulus {r_in} < |x| <= {r_out} not inside the box")
    if q is None:
        q = omega.q_class
    if np.isinf(q):
        q = surrogate_q
    qp = q / (q - 1.0)
    quad = quad or QuadratureSpec.for_grid(grid, l=l)
    g = grid.with_lattice("node")
    r = g.radius()
    ann = (r > r_in) & (r <= r_out)
    total = 0.0
    for j in quad.scales:
        if not mollified_spectrum_admissible(j, l, grid):
            continue
        sup = np.zeros(g.shape)
        for t in quad.nodes:
            kf = k_jt_spectrum(omega, j, t, g, l)[0].values
            moved = np.zeros_like(kf)
            # moved[x] = kf[x + y]
            src = [slice(max(s, 0), kf.shape[a] + min(s, 0)) for a, s in enumerate(shift)]
            dst = [slice(max(-s, 0), kf.shape[a] + min(-s, 0)) for a, s in enumerate(shift)]
            moved[tuple(dst)] = kf[tuple(src)]
            np.maximum(sup, np.abs(moved - kf), out=sup)
        total += float((np.sum(sup[ann] ** q) * g.cell_volume) ** (1.0 / q))
    if ny == 0:
        return (0.0, 0.0) if return_sum else 0.0
    bound = r_in ** (-2.0 / qp) * min(1.0, 2.0 ** l * ny / r_in)
    ratio = total / bound
    return (ratio, total) if return_sum else ratio
