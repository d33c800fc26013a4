"""Frequency-side checks: kernel symbols, decay profiles, mollifier symbols, approximation rates.

Fourier convention: h^(xi) = int h(x) exp(-2 pi i x.xi) dx, frequencies in cycles
per unit length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .grid import GridSpec, QuadratureSpec, SampledField
from .kernels import build_k_jt, build_mollifier, k_jt_spectrum, mollified_spectrum_admissible, spectrum
from .operators import marcinkiewicz_dyadic, marcinkiewicz_mollified
from .sphere import AngularKernel, lq_sphere_norm


@dataclass(frozen=True, eq=False)
class KernelSymbol:
    """Centered transform of a node-lattice kernel; ``values[c, c]`` is xi = 0."""

    values: np.ndarray
    spacing: float  # frequency step 1 / (pad * N * h)
    grid: GridSpec

    def frequencies(self) -> np.ndarray:
        n = self.values.shape[0]
        return (np.arange(n) - n // 2) * self.spacing

    def radius(self) -> np.ndarray:
        f = self.frequencies()
        return np.hypot(f[:, None], f[None, :])

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)) * self.spacing)

    def inverse(self) -> SampledField:
        n = self.values.shape[0]
        h = self.grid.spacing
        raw = sfft.ifftn(sfft.ifftshift(self.values)) / (h * h)
        vals = sfft.fftshift(raw).real
        c0 = n // 2 - self.grid.resolution // 2
        sl = slice(c0, c0 + self.grid.resolution)
        return SampledField(self.grid, vals[sl, sl])


def kernel_symbol(K, pad: int = 1) -> KernelSymbol:
    """h^n-scaled DFT of a node-lattice kernel (a TruncatedKernel, Mollifier or field).

    ``pad`` zero-pads the kernel to pad*N samples per axis to refine the
    frequency step.
    """
    fld = getattr(K, "field", K)
    g = fld.grid
    if g.lattice != "node":
        raise ValueError("kernels live on the node lattice")
    N = g.resolution
    n = pad * N
    big = np.zeros((n, n))
    c0 = n // 2 - N // 2
    big[c0:c0 + N, c0:c0 + N] = fld.values
    vals = sfft.fftshift(sfft.fftn(sfft.ifftshift(big))) * g.cell_volume
    return KernelSymbol(vals, 1.0 / (n * g.spacing), g)


@dataclass(frozen=True)
class DecayProfile:
    radii: tuple[float, ...]
    magnitudes: tuple[float, ...]
    meta: dict = field(default_factory=dict)

    def rows(self):
        return list(zip(self.radii, self.magnitudes))


def _omega_norm(omega: AngularKernel, q: float | None) -> float:
    q = omega.q_class if q is None else q
    return lq_sphere_norm(omega, q)


def symbol_at(K, xi: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Exact transform sum_x K(x) exp(-2 pi i x.xi) h^2 of a node-lattice kernel at points ``xi`` (P, 2)."""
    fld = getattr(K, "field", K)
    g = fld.grid
    bb = fld.support_bbox
    xi = np.asarray(xi, dtype=float).reshape(-1, 2)
    if bb is None:
        return np.zeros(len(xi), dtype=complex)
    (a0, a1), (b0, b1) = bb
    Kc = fld.values[a0:a1 + 1, b0:b1 + 1]
    c = g.resolution // 2
    xa = (np.arange(a0, a1 + 1) - c) * g.spacing
    xb = (np.arange(b0, b1 + 1) - c) * g.spacing
    out = np.empty(len(xi), dtype=complex)
    for s in range(0, len(xi), chunk):
        p = xi[s:s + chunk]
        E1 = np.exp(-2j * np.pi * np.outer(xa, p[:, 0]))
        E2 = np.exp(-2j * np.pi * np.outer(xb, p[:, 1]))
        out[s:s + chunk] = np.einsum("ap,ap->p", E1, Kc @ E2)
    return out * g.cell_volume


def shell_samples(edges: np.ndarray, n_radii: int = 4, n_angles: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Log-polar sample radii (and their shell index) plus directions over a half circle."""
    ratio = edges[1:] / edges[:-1]
    u = (np.arange(n_radii) + 0.5) / n_radii
    radii = (edges[:-1, None] * ratio[:, None] ** u[None, :]).ravel()
    shell = np.repeat(np.arange(len(edges) - 1), n_radii)
    ang = np.pi * np.arange(n_angles) / n_angles
    return radii, shell, np.column_stack([np.cos(ang), np.sin(ang)])


def decay_profile(omega: AngularKernel, j: int, t: float, grid: GridSpec, shells: int = 32,
                  q: float | None = None, rho_min: float = 5e-3, rho_max: float | None = None,
                  n_radii: int = 4, n_angles: int = 64) -> DecayProfile:
    """Shell maxima of |K_t^j^(xi)| / ||Omega||_q against rho = |2^j xi| on log-spaced shells.

    The transform of the lattice kernel is evaluated exactly at log-polar
    samples, placed identically in the rho variable for every j so that
    profiles of different scales compare point by point. ``rho_max``
    defaults to a quarter of the Nyquist radius in rho.
    """
    if shells < 8:
        raise ValueError("need at least 8 shells")
    h = grid.spacing
    hi = 0.25 * (0.5 / h) * 2.0 ** j if rho_max is None else rho_max
    if not 0 < rho_min < hi:
        raise ValueError(f"empty shell range [{rho_min}, {hi}]")
    K = build_k_jt(omega, j, t, grid.with_lattice("node"))
    edges = np.geomspace(rho_min, hi, shells + 1)
    radii, shell, dirs = shell_samples(edges, n_radii, n_angles)
    rho = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
    mag = np.abs(symbol_at(K, rho / 2.0 ** j)).reshape(len(radii), -1).max(axis=1)
    best = np.zeros(shells)
    np.maximum.at(best, shell, mag)
    centers = np.sqrt(edges[:-1] * edges[1:])
    nrm = _omega_norm(omega, q)
    return DecayProfile(tuple(float(x) for x in centers), tuple(float(x) / nrm for x in best),
                        {"omega": omega.name, "j": j, "t": float(t), "q": q or omega.q_class})


def collapse_pair(omega: AngularKernel, j: int, t: float, grid: GridSpec, shells: int = 32,
                  rho_max: float | None = None) -> tuple[DecayProfile, DecayProfile, float]:
    """Profiles at j and j+1 on the same rho samples; returns both and their max relative gap."""
    hi = 0.25 * (0.5 / grid.spacing) * 2.0 ** j if rho_max is None else rho_max
    p0 = decay_profile(omega, j, t, grid, shells, rho_max=hi)
    p1 = decay_profile(omega, j + 1, t, grid, shells, rho_max=hi)
    return p0, p1, collapse_error(p0, p1)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    n: int


def loglog_fit(x, y) -> SlopeFit:
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(res ** 2) / ss if ss > 0 else 1.0
    return SlopeFit(float(coef[0]), float(coef[1]), float(r2), len(x))


def rise_slope(profile: DecayProfile, count: int = 3) -> float:
    """Log-log slope over the first ``count`` shells."""
    return loglog_fit(profile.radii[:count], profile.magnitudes[:count]).slope


def tail_slope(profile: DecayProfile, rho_from: float = 1.0) -> SlopeFit:
    r = np.asarray(profile.radii)
    m = np.asarray(profile.magnitudes)
    sel = (r >= rho_from) & (m > 0)
    return loglog_fit(r[sel], m[sel])


def collapse_error(p1: DecayProfile, p2: DecayProfile, floor: float = 1e-2) -> float:
    """Max relative gap between two profiles on common shells.

    Shells where both magnitudes sit below ``floor`` times the larger peak are
    skipped: there the symbol is a cancellation residue dominated by lattice error.
    """
    a = dict(zip(np.round(p1.radii, 12), p1.magnitudes))
    peak = max(max(p1.magnitudes), max(p2.magnitudes))
    worst = 0.0
    for r, m in zip(np.round(p2.radii, 12), p2.magnitudes):
        if r in a and max(a[r], m) > floor * peak:
            worst = max(worst, abs(a[r] - m) / max(a[r], m))
    return worst


@dataclass(frozen=True)
class MollifierSymbolRecord:
    l: int
    varsigma: float
    max_ratio: float
    argmax_radius: float
    origin_error: float
    max_modulus: float


def mollifier_symbol_check(l: int, varsigma: float, grid: GridSpec, pad: int = 1) -> MollifierSymbolRecord:
    """max over xi != 0 of |phi_l^(xi) - 1| / min(1, |2^l xi|^varsigma)."""
    if not 0 < varsigma < 1:
        raise ValueError("varsigma must lie in (0, 1)")
    phi = build_mollifier(l, grid.with_lattice("node"))
    sym = kernel_symbol(phi, pad)
    rho = sym.radius() * 2.0 ** l
    num = np.abs(sym.values - 1.0)
    c = sym.values.shape[0] // 2
    den = np.minimum(1.0, np.where(rho > 0, rho, 1.0) ** varsigma)
    ratio = num / den
    ratio[c, c] = 0.0
    k = np.unravel_index(np.argmax(ratio), ratio.shape)
    return MollifierSymbolRecord(l, varsigma, float(ratio[k]), float(rho[k]),
                                 float(num[c, c]), float(np.abs(sym.values).max()))


# ---------------------------------------------------------------------------
# approximation law


def _centered_phase(n_pad: int, center: int) -> np.ndarray:
    """exp(+2 pi i k c / n) per axis, moving a node kernel stored at index c to the origin."""
    k = np.arange(n_pad)
    return np.exp(2j * np.pi * k * center / n_pad)


def _rfft_phase(n_pad: int, center: int) -> tuple[np.ndarray, np.ndarray]:
    full = _centered_phase(n_pad, center)
    half = full[: n_pad // 2 + 1]
    return full[:, None], half[None, :]


def vector_error_frequency(omega: AngularKernel, f: SampledField, l: int, quad: QuadratureSpec) -> float:
    """(int_1^2 sum_j ||K^(1 - phi_{j-l}^) f^||_2^2 dt)^(1/2) on the padded frequency lattice."""
    g = f.grid
    N = g.resolution
    n_pad = 2 * N
    f_hat = spectrum(f)
    px, py = _rfft_phase(n_pad, N // 2)
    # rfft keeps half the columns; interior ones stand for a conjugate pair
    wcol = np.full(n_pad // 2 + 1, 2.0)
    wcol[0] = 1.0
    wcol[-1] = 1.0
    total = 0.0
    for j in quad.scales:
        phi = build_mollifier(j - l, g.with_lattice("node")).field
        phi_hat = spectrum(phi) * g.cell_volume * px * py
        for t, w in quad.t_nodes:
            _, k_hat = k_jt_spectrum(omega, j, t, g)
            prod = k_hat * g.cell_volume * (1.0 - phi_hat) * f_hat * g.cell_volume
            total += w * float(np.sum(wcol * np.abs(prod) ** 2))
    # Parseval on the padded lattice: sum |g|^2 h^2 = h^-2 n^-2 sum |h^2 G|^2 ... with G = DFT
    return float(np.sqrt(total / (n_pad ** 2 * g.cell_volume)))


def vector_error_space(omega: AngularKernel, f: SampledField, l: int, quad: QuadratureSpec) -> float:
    """(int_1^2 sum_j ||K_t^j * f - K_t^j * phi_{j-l} * f||_2^2 dt)^(1/2), computed in space."""
    from .kernels import convolve_spectra
    f_hat = spectrum(f)
    total = 0.0
    for j in quad.scales:
        for t, w in quad.t_nodes:
            a = convolve_spectra(f, f_hat, *k_jt_spectrum(omega, j, t, f.grid), crop=True).values
            b = convolve_spectra(f, f_hat, *k_jt_spectrum(omega, j, t, f.grid, l), crop=True).values
            total += w * float(np.sum((a - b) ** 2)) * f.grid.cell_volume
    return float(np.sqrt(total))


@dataclass(frozen=True)
class ApproximationRecord:
    l_list: tuple[int, ...]
    scenes: tuple[str, ...]
    scalar: dict          # scene -> errors ||M f - M^l f|| / ||f||
    vector_space: dict    # scene -> vector-valued errors, space route
    vector_freq: dict     # scene -> vector-valued errors, frequency route
    agreement: float      # max relative gap between the two vector routes
    theta_scalar: float
    theta_vector: float
    r2: float
    monotone: bool


def approximation_decay(omega: AngularKernel, scene_bank: dict, l_list, quad: QuadratureSpec | None = None,
                        slack: float = 0.10) -> ApproximationRecord:
    """Errors of the mollified operator against the dyadic one, and the fitted rate theta.

    theta is minus the least-squares slope of log2(error) against l, pooled
    over scenes after removing per-scene offsets.
    """
    l_list = [int(l) for l in l_list]
    if any(b <= a for a, b in zip(l_list, l_list[1:])):
        raise ValueError("l_list must be increasing")
    grid = next(iter(scene_bank.values())).grid
    quad = quad or QuadratureSpec.for_grid(grid, l=max(l_list))
    for l in l_list:
        for j in quad.scales:
            if not mollified_spectrum_admissible(j, l, grid):
                raise ValueError(f"l={l} inadmissible at scale j={j}")
    scal, vs, vf = {}, {}, {}
    for name, f in scene_bank.items():
        nf = float(np.sqrt(np.sum(f.values ** 2) * f.grid.cell_volume))
        if nf == 0:
            continue
        base = marcinkiewicz_dyadic(omega, f, quad).values
        s_err, v_err, f_err = [], [], []
        for l in l_list:
            ml = marcinkiewicz_mollified(omega, f, l, quad).values
            s_err.append(float(np.sqrt(np.sum((base - ml) ** 2) * f.grid.cell_volume)) / nf)
            v_err.append(vector_error_space(omega, f, l, quad) / nf)
            f_err.append(vector_error_frequency(omega, f, l, quad) / nf)
        scal[name], vs[name], vf[name] = s_err, v_err, f_err
    agree = max(abs(a - b) / max(a, b) for n in vs for a, b in zip(vs[n], vf[n]))
    th_s, r2 = _pooled_rate(l_list, scal)
    th_v, _ = _pooled_rate(l_list, vs)
    mono = all(b <= (1 + slack) * a for errs in scal.values() for a, b in zip(errs, errs[1:]))
    return ApproximationRecord(tuple(l_list), tuple(scal), scal, vs, vf, float(agree), th_s, th_v, r2, mono)


def _pooled_rate(l_list, errs: dict) -> tuple[float, float]:
    xs, ys = [], []
    for e in errs.values():
        y = np.log2(np.asarray(e))
        xs.append(np.asarray(l_list, float) - np.mean(l_list))
        ys.append(y - y.mean())
    x, y = np.concatenate(xs), np.concatenate(ys)
    slope = float(np.dot(x, y) / np.dot(x, x))
    ss = float(np.sum(y ** 2))
    r2 = 1.0 - float(np.sum((y - slope * x) ** 2)) / ss if ss > 0 else 1.0
    return -slope, r2
