"""Square functions, the rough singular integral and maximal operators on the cell lattice.

All convolutions are linear (zero-padded FFT); integrals over R^n are
truncated to the box window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cubes import CubeBank
from .dyadic import build_grids, dyadic_maximal
from .grid import GridSpec, QuadratureSpec, SampledField
from .kernels import (ball_kernel, cached_spectrum, convolve_spectra, k_jt_spectrum,
                      mollified_spectrum_admissible, singular_kernel, spectrum)
from .sphere import AngularKernel


@dataclass(frozen=True, eq=False)
class SquareFunctionOutput:
    field: SampledField
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def grid(self) -> GridSpec:
        return self.field.grid


def _check_cell(f: SampledField) -> None:
    if f.grid.lattice != "cell":
        raise ValueError("operator inputs live on the cell lattice")


def f_omega_t(omega: AngularKernel, f: SampledField, t: float, f_hat=None) -> SampledField:
    """int_{|x-y| <= t} Omega(x-y) |x-y|^-(n-1) f(y) dy."""
    _check_cell(f)
    g = f.grid.with_lattice("node")
    kf, k_hat = cached_spectrum(("ball", omega.key, g, float(t)), lambda: ball_kernel(omega, t, g))
    if f_hat is None:
        f_hat = spectrum(f)
    return convolve_spectra(f, f_hat, kf, k_hat, crop=True)


def _default_quad(f: SampledField, quad, l: int = 0) -> QuadratureSpec:
    quad = quad or QuadratureSpec.for_grid(f.grid, l=l)
    if quad.j_min > quad.j_max:
        raise ValueError("empty scale range")
    return quad


def marcinkiewicz(omega: AngularKernel, f: SampledField, quad: QuadratureSpec | None = None) -> SquareFunctionOutput:
    """(int_0^inf |F_{Omega,t} f|^2 dt / t^3)^(1/2) with t = 2^j s, s in [1, 2].

    dt / t^3 becomes 2^(-2j) ds / s^3 on each dyadic block.
    """
    _check_cell(f)
    quad = _default_quad(f, quad)
    quad.check_grid(f.grid)
    f_hat = spectrum(f)
    acc = np.zeros(f.grid.shape)
    for j in quad.scales:
        for s, w in quad.t_nodes:
            F = f_omega_t(omega, f, 2.0 ** j * s, f_hat).values
            acc += (w * 2.0 ** (-2 * j) / s ** 3) * F * F
    return SquareFunctionOutput(SampledField(f.grid, np.sqrt(acc)),
                                {"op": "marc", "omega": omega.name, "quad": quad})


def _square_sum(omega, f, quad, l, j_hi, tag) -> SquareFunctionOutput:
    _check_cell(f)
    f_hat = spectrum(f)
    acc = np.zeros(f.grid.shape)
    for j in quad.scales:
        if j > j_hi:
            break
        if l is not None and not mollified_spectrum_admissible(j, l, f.grid):
            raise ValueError(f"mollifier phi_{j - l} unresolvable at scale j={j} on {f.grid}")
        for t, w in quad.t_nodes:
            kf, k_hat = k_jt_spectrum(omega, j, t, f.grid, l)
            F = convolve_spectra(f, f_hat, kf, k_hat, crop=True).values
            acc += w * F * F
    return SquareFunctionOutput(SampledField(f.grid, np.sqrt(acc)),
                                {"op": tag, "omega": omega.name, "l": l, "quad": quad})


def marcinkiewicz_dyadic(omega: AngularKernel, f: SampledField,
                         quad: QuadratureSpec | None = None) -> SquareFunctionOutput:
    """(int_1^2 sum_j |K_t^j * f|^2 dt)^(1/2)."""
    quad = _default_quad(f, quad)
    return _square_sum(omega, f, quad, None, quad.j_max, "marc-dyadic")


def marcinkiewicz_mollified(omega: AngularKernel, f: SampledField, l: int,
                            quad: QuadratureSpec | None = None) -> SquareFunctionOutput:
    """Same square sum with the smoothed kernels K_t^j * phi_{j-l}."""
    if l < 1:
        raise ValueError("l must be >= 1")
    quad = _default_quad(f, quad, l)
    return _square_sum(omega, f, quad, l, quad.j_max, "marc-l")


def scale_restricted(omega: AngularKernel, f: SampledField, l: int, j0: int,
                     quad: QuadratureSpec | None = None) -> SquareFunctionOutput:
    """Mollified square sum over scales j <= j0 only."""
    if l < 1:
        raise ValueError("l must be >= 1")
    quad = _default_quad(f, quad, l)
    return _square_sum(omega, f, quad, l, j0, "marc-l-restricted")


def grand_maximal(omega: AngularKernel, f: SampledField, l: int,
                  cube_bank: CubeBank | None = None,
                  quad: QuadratureSpec | None = None) -> SampledField:
    """sup over bank cubes Q containing x and probes xi in Q of M^l(f chi_{(3Q)^c})(xi).

    Probes are the 3^n lattice points of Q (corners and center). The value at
    a probe is assembled from the full convolution minus a direct sum over 3Q.
    """
    _check_cell(f)
    quad = _default_quad(f, quad, l)
    N = f.grid.resolution
    if cube_bank is None:
        cube_bank = CubeBank.dyadic(f.grid, min_side=4)
    if len(cube_bank) == 0:
        raise ValueError("empty cube bank")
    if cube_bank.resolution != N:
        raise ValueError("cube bank built for a different resolution")
    f_hat = spectrum(f)
    full, kern, wts = [], [], []
    c = N // 2
    for j in quad.scales:
        if not mollified_spectrum_admissible(j, l, f.grid):
            raise ValueError(f"mollifier phi_{j - l} unresolvable at scale j={j}")
        for t, w in quad.t_nodes:
            kf, k_hat = k_jt_spectrum(omega, j, t, f.grid, l)
            full.append(convolve_spectra(f, f_hat, kf, k_hat, crop=True).values)
            # pad so any offset in (-N, N) indexes the kernel: pk[d + N] = K(d h)
            pk = np.zeros((2 * N, 2 * N))
            pk[N - c:N - c + N, N - c:N - c + N] = kf.values
            kern.append(pk)
            wts.append(w)
    full = np.stack(full)
    kern = np.stack(kern)
    wts = np.asarray(wts)
    base = np.sqrt(np.einsum("k,kij->ij", wts, full * full))
    fv = f.values
    nz = fv != 0
    # prefix counts of the support to skip cubes whose triple misses it
    cnt = np.zeros((N + 1, N + 1))
    cnt[1:, 1:] = np.cumsum(np.cumsum(nz, 0), 1)
    h2 = f.grid.cell_volume
    out = np.zeros(f.grid.shape)
    for a, b, s in cube_bank:
        lo = (max(a - s, 0), max(b - s, 0))
        hi = (min(a + 2 * s, N), min(b + 2 * s, N))
        probes = [(a + u, b + v) for u in (0, s // 2, s - 1) for v in (0, s // 2, s - 1)]
        inside = cnt[hi[0], hi[1]] - cnt[lo[0], hi[1]] - cnt[hi[0], lo[1]] + cnt[lo[0], lo[1]]
        if inside == 0:
            val = max(base[p] for p in probes)
        else:
            blk = fv[lo[0]:hi[0], lo[1]:hi[1]]
            val = 0.0
            for px, py in probes:
                # K(xi - y) for y in the block: offsets run from xi - lo down to xi - hi + 1
                sub = kern[:, px - hi[0] + 1 + N:px - lo[0] + 1 + N, py - hi[1] + 1 + N:py - lo[1] + 1 + N]
                local = np.einsum("kij,ij->k", sub[:, ::-1, ::-1], blk) * h2
                d = full[:, px, py] - local
                val = max(val, float(np.sqrt(np.dot(wts, d * d))))
        view = out[a:a + s, b:b + s]
        np.maximum(view, val, out=view)
    return SampledField(f.grid, out)


def rough_singular_integral(omega: AngularKernel, f: SampledField, eps: float, R: float) -> SampledField:
    """int_{eps < |y| < R} Omega(y') |y|^-n f(x - y) dy."""
    _check_cell(f)
    g = f.grid.with_lattice("node")
    kf, k_hat = cached_spectrum(("sing", omega.key, g, float(eps), float(R)),
                                lambda: singular_kernel(omega, eps, R, g))
    return convolve_spectra(f, spectrum(f), kf, k_hat, crop=True)


def hl_maximal(f: SampledField, min_side: int = 1, max_side: int | None = None) -> SampledField:
    """Dyadic Hardy-Littlewood maximal function over the 3^n shifted grids.

    Sides run over powers of two (in cells) from ``min_side`` up to twice the
    window; clipped boundary tiles average over their clipped part.
    """
    _check_cell(f)
    grids = build_grids(f.grid)
    lo = int(np.log2(min_side))
    hi = None if max_side is None else int(np.log2(max_side))
    return SampledField(f.grid, dyadic_maximal(f.values, grids, lo, hi))


def mq_maximal(f: SampledField, r: float) -> SampledField:
    """(M |f|^r)^(1/r)."""
    if not r > 1:
        raise ValueError(f"r must be > 1, got {r}")
    _check_cell(f)
    a = np.abs(f.values)
    m = a.max()
    if m == 0:
        return SampledField.zeros(f.grid)
    M = dyadic_maximal((a / m) ** r, build_grids(f.grid))
    return SampledField(f.grid, m * M ** (1.0 / r))


def _abs_ball_average_kernel(omega: AngularKernel, rad: float, g: GridSpec) -> SampledField:
    x, y = g.mesh()
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    vals = np.where(r <= rad, np.abs(omega(th)), 0.0)
    c = g.origin_index()
    vals[c, c] = np.abs(omega.samples).mean()
    return SampledField(g, vals / (np.pi * rad * rad))


def omega_maximal(omega: AngularKernel, f: SampledField) -> SampledField:
    """sup over r = 2^k h (2h <= r <= L/2) of |B_r|^-1 int_{|y|<r} |Omega(y)| |f(x-y)| dy."""
    _check_cell(f)
    g = f.grid.with_lattice("node")
    h = f.grid.spacing
    af = abs(f)
    a_hat = spectrum(af)
    out = np.zeros(f.grid.shape)
    k = 1
    while 2.0 ** k * h <= f.grid.half_width / 2 + 1e-12:
        rad = 2.0 ** k * h
        kf, k_hat = cached_spectrum(("absball", omega.key, g, rad),
                                    lambda: _abs_ball_average_kernel(omega, rad, g))
        np.maximum(out, convolve_spectra(af, a_hat, kf, k_hat, crop=True).values, out=out)
        k += 1
    return SampledField(f.grid, np.maximum(out, 0.0))
