import numpy as np
import pytest
from scipy.signal import convolve2d

from mzlab.grid import GridSpec, QuadratureSpec, SampledField
from mzlab.kernels import (CACHE_BYTES, _cache, build_k_jt, build_mollifier, cached_spectrum, clear_cache,
                           regularity_sum_check, smooth_kernel, spectral_convolve)
from mzlab.sphere import BANK_NAMES, get_kernel


def _direct(a: SampledField, b: SampledField) -> np.ndarray:
    N, h = a.grid.resolution, a.grid.spacing
    full = convolve2d(a.values, b.values, mode="full")
    return full[N // 2:N // 2 + N, N // 2:N // 2 + N] * h * h


@pytest.mark.parametrize("name", BANK_NAMES)
def test_mass_law(grid256, name):
    om = get_kernel(name)
    quad = QuadratureSpec.for_grid(grid256)
    g = grid256.with_lattice("node")
    for j in quad.scales:
        for t in quad.nodes:
            K = build_k_jt(om, j, t, g).field
            mass = np.abs(K.values).sum() * g.cell_volume
            assert mass == pytest.approx(0.5 * t * om.l1_norm(), rel=0.03)


@pytest.mark.parametrize("j,t", [(0, 1.0), (0, 2.0), (1, 1.3)])
def test_support_exact(grid256, j, t):
    K = build_k_jt(get_kernel("step"), j, t, grid256).field
    r = K.grid.radius()
    outside = (r <= 2.0 ** (j - 1) * t) | (r > 2.0 ** j * t)
    assert np.all(K.values[outside] == 0.0)
    assert np.count_nonzero(K.values[~outside]) > 0


def test_kernel_bad_inputs(grid256):
    om = get_kernel("cos")
    with pytest.raises(ValueError, match="outside"):
        build_k_jt(om, 0, 2.5, grid256)
    with pytest.raises(ValueError, match="not resolvable"):
        build_k_jt(om, -3, 1.0, grid256)
    with pytest.raises(ValueError, match="not resolvable"):
        build_k_jt(om, 3, 2.0, grid256)


@pytest.mark.parametrize("l", [-1, 0, 1])
def test_mollifier_unit_mass_and_support(grid256, l):
    phi = build_mollifier(l, grid256).field
    assert phi.integral() == pytest.approx(1.0, abs=1e-12)
    assert np.all(phi.values[phi.grid.radius() >= 2.0 ** (l - 2)] == 0)
    assert np.all(phi.values >= 0)


def test_mollifier_unresolvable(grid256):
    with pytest.raises(ValueError):
        build_mollifier(-4, grid256)


def test_smoothed_kernel_support(grid256):
    K = build_k_jt(get_kernel("sin3"), 1, 1.5, grid256)
    S = smooth_kernel(K, 1)
    r = S.grid.radius()
    off = (r < 2.0 ** (1 - 2)) | (r > 2.0 ** (1 + 2))
    assert np.abs(S.values[off]).max() <= 1e-10 * np.abs(S.values).max()
    # mean-zero Omega keeps the smoothed kernel mean-zero
    assert abs(S.integral()) < 1e-10


def test_spectral_convolve_matches_direct(rng):
    g = GridSpec(2, 8.0, 32)
    a = SampledField(g, rng.standard_normal(g.shape))
    gn = g.with_lattice("node")
    vals = np.zeros(gn.shape)
    vals[10:22, 12:20] = rng.standard_normal((12, 8))
    b = SampledField(gn, vals)
    out = spectral_convolve(a, b, crop=True)
    assert out.grid.lattice == "cell"
    assert np.max(np.abs(out.values - _direct(a, b))) < 1e-8


def test_spectral_convolve_rejects_wraparound(rng):
    g = GridSpec(2, 8.0, 32)
    a = SampledField(g, rng.standard_normal(g.shape))
    b = SampledField(g.with_lattice("node"), rng.standard_normal(g.shape))
    with pytest.raises(ValueError, match="wraparound"):
        spectral_convolve(a, b)


def test_convolution_with_delta_is_identity(rng):
    g = GridSpec(2, 4.0, 16)
    a = SampledField(g, rng.standard_normal(g.shape))
    gn = g.with_lattice("node")
    d = np.zeros(gn.shape)
    d[gn.origin_index(), gn.origin_index()] = 1.0 / gn.cell_volume
    out = spectral_convolve(a, SampledField(gn, d))
    np.testing.assert_allclose(out.values, a.values, atol=1e-12)


def test_cache_is_bounded_and_lru():
    clear_cache()
    g = GridSpec(2, 8.0, 16)
    calls = []

    def builder():
        calls.append(1)
        return SampledField(g, np.ones(g.shape))

    first = cached_spectrum(("t", 0), builder)
    again = cached_spectrum(("t", 0), builder)
    assert first is again and len(calls) == 1
    total = sum(f.values.nbytes + s.nbytes for f, s in _cache.values())
    assert total <= CACHE_BYTES
    clear_cache()
    assert len(_cache) == 0


def test_regularity_sum_bounded_q_infinity():
    g = GridSpec(2, 8.0, 256)
    om = get_kernel("cos")
    quad = QuadratureSpec.gauss(2, 0, 0)
    h = g.spacing
    ratios = [regularity_sum_check(om, 1, 1.0, (k * h, 0.0), 0, g, quad=quad, q=4.0) for k in (1, 2, 3)]
    assert all(np.isfinite(r) and r > 0 for r in ratios)
    assert max(ratios) / min(ratios) < 10


def test_regularity_sum_zero_shift():
    g = GridSpec(2, 8.0, 256)
    assert regularity_sum_check(get_kernel("cos"), 1, 1.0, (0.0, 0.0), 0, g,
                                quad=QuadratureSpec.gauss(2, 0, 0)) == 0.0


def test_regularity_sum_rejects_off_lattice():
    g = GridSpec(2, 8.0, 256)
    with pytest.raises(ValueError, match="multiple"):
        regularity_sum_check(get_kernel("cos"), 1, 1.0, (0.01, 0.0), 0, g)
