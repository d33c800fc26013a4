import numpy as np
import pytest

from mzlab.fourier import (DecayProfile, approximation_decay, collapse_error, collapse_pair, decay_profile,
                           kernel_symbol, loglog_fit, mollifier_symbol_check, rise_slope, symbol_at, tail_slope,
                           vector_error_frequency, vector_error_space)
from mzlab.grid import GridSpec, QuadratureSpec, SampledField, sample
from mzlab.kernels import build_k_jt
from mzlab.scenes import scene_bank
from mzlab.sphere import get_kernel


@pytest.fixture(scope="module")
def node128():
    return GridSpec(2, 8.0, 128).with_lattice("node")


def test_gaussian_symbol(node128):
    # exp(-pi |x|^2) is its own transform
    f = sample(lambda x, y: np.exp(-np.pi * (x * x + y * y)), node128)
    sym = kernel_symbol(f)
    ref = np.exp(-np.pi * sym.radius() ** 2)
    assert np.max(np.abs(sym.values - ref)) < 1e-10


def test_symbol_parseval_and_inverse(node128, rng):
    vals = np.zeros(node128.shape)
    vals[40:90, 50:70] = rng.standard_normal((50, 20))
    f = SampledField(node128, vals)
    sym = kernel_symbol(f)
    l2 = np.sqrt(np.sum(vals ** 2) * node128.cell_volume)
    assert sym.l2_norm() == pytest.approx(l2, rel=1e-12)
    np.testing.assert_allclose(sym.inverse().values, vals, atol=1e-12)


def test_symbol_at_matches_fft(node128):
    K = build_k_jt(get_kernel("sin3"), 1, 1.5, node128)
    sym = kernel_symbol(K)
    fr = sym.frequencies()
    idx = [(64, 64), (70, 61), (3, 100), (127, 0)]
    xi = np.array([[fr[a], fr[b]] for a, b in idx])
    np.testing.assert_allclose(symbol_at(K, xi), [sym.values[a, b] for a, b in idx], atol=1e-10)


def test_kernel_symbol_rejects_cells():
    with pytest.raises(ValueError, match="node"):
        kernel_symbol(SampledField.zeros(GridSpec(2, 8.0, 32)))


@pytest.mark.parametrize("name", ["cos", "sin3", "step"])
def test_mean_zero_symbol_vanishes_at_origin(node128, name):
    K = build_k_jt(get_kernel(name), 1, 1.2, node128)
    assert abs(symbol_at(K, np.zeros((1, 2)))[0]) < 1e-12


def test_decay_profile_shape():
    g = GridSpec(2, 8.0, 256)
    prof = decay_profile(get_kernel("cos"), 1, 1.5, g)
    assert len(prof.radii) == 32 and np.all(np.diff(prof.radii) > 0)
    assert rise_slope(prof) > 0.8
    assert tail_slope(prof).slope < -0.1
    with pytest.raises(ValueError):
        decay_profile(get_kernel("cos"), 1, 1.5, g, shells=4)


def test_collapse_same_scale_is_zero():
    g = GridSpec(2, 8.0, 256)
    p = decay_profile(get_kernel("cos"), 1, 1.5, g)
    assert collapse_error(p, p) == 0.0


def test_collapse_pair_fine_grid():
    g = GridSpec(2, 8.0, 1024)
    *_, err = collapse_pair(get_kernel("cos"), 0, 1.5, g)
    assert err < 0.1


def test_collapse_error_floor():
    a = DecayProfile((1.0, 2.0, 3.0), (1.0, 0.5, 1e-4))
    b = DecayProfile((1.0, 2.0, 3.0), (1.0, 0.4, 5e-4))
    assert collapse_error(a, b) == pytest.approx(0.2)
    assert collapse_error(a, b, floor=0.0) == pytest.approx(0.8)


def test_loglog_fit_exact():
    x = np.geomspace(0.1, 10, 9)
    fit = loglog_fit(x, 3 * x ** -1.7)
    assert fit.slope == pytest.approx(-1.7)
    assert fit.intercept == pytest.approx(np.log(3))
    assert fit.r2 == pytest.approx(1.0)


@pytest.mark.parametrize("l", [0, 1, 2])
def test_mollifier_symbol(l):
    rec = mollifier_symbol_check(l, 0.5, GridSpec(2, 8.0, 256))
    assert rec.origin_error < 1e-12
    assert rec.max_modulus <= 1 + 1e-12
    assert np.isfinite(rec.max_ratio) and rec.max_ratio < 4
    with pytest.raises(ValueError):
        mollifier_symbol_check(l, 1.5, GridSpec(2, 8.0, 256))


def test_vector_routes_agree():
    g = GridSpec(2, 8.0, 256)
    f = scene_bank(g, ["two-bump"])["two-bump"]
    quad = QuadratureSpec.gauss(2, 1, 1)
    a = vector_error_space(get_kernel("cos"), f, 1, quad)
    b = vector_error_frequency(get_kernel("cos"), f, 1, quad)
    assert a == pytest.approx(b, rel=1e-9)


def test_approximation_decay_small():
    g = GridSpec(2, 8.0, 256)
    bank = scene_bank(g, ["gaussian", "disk"])
    rec = approximation_decay(get_kernel("cos"), bank, [1, 2], QuadratureSpec.gauss(4, 1, 1))
    assert rec.monotone
    assert rec.agreement < 0.05
    assert rec.theta_scalar > 0.2
    assert set(rec.scenes) == {"gaussian", "disk"}


def test_approximation_decay_validates():
    g = GridSpec(2, 8.0, 256)
    bank = scene_bank(g, ["gaussian"])
    with pytest.raises(ValueError, match="inadmissible"):
        approximation_decay(get_kernel("cos"), bank, [1, 3], QuadratureSpec.gauss(4, 1, 1))
    with pytest.raises(ValueError, match="increasing"):
        approximation_decay(get_kernel("cos"), bank, [2, 1])
