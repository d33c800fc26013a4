import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mzlab.grid import (GridSpec, QuadratureSpec, SampledField, centered_box_mask, indicator, lp_norm,
                        sample, weighted_lp_norm)
from mzlab.weights import power_weight


def test_grid_geometry():
    g = GridSpec(2, 8.0, 256)
    assert g.spacing == 2 * 8.0 / 256
    c = g.coords()
    assert c[0] == pytest.approx(-8 + 0.5 * g.h)
    assert not np.any(g.radius() == 0)
    node = g.with_lattice("node")
    assert node.coords()[node.origin_index()] == 0.0


@pytest.mark.parametrize("kw", [dict(resolution=100), dict(resolution=8), dict(half_width=0.0),
                                dict(dim=1), dict(lattice="edge")])
def test_grid_rejects_bad_specs(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_sample_constant_and_disk():
    g = GridSpec(2, 8.0, 64)
    assert np.all(sample(lambda x, y: 1.0, g).values == 1.0)
    disk = sample(indicator(lambda x, y: np.hypot(x, y) <= 4.0), g)
    assert np.array_equal(disk.values == 1.0, g.radius() <= 4.0)


def test_sample_gaussian_pointwise():
    g = GridSpec(2, 8.0, 64)
    x, y = g.mesh()
    f = sample(lambda x, y: np.exp(-(x * x + y * y)), g)
    assert np.array_equal(f.values, np.exp(-(x * x + y * y)))


def test_sample_rejects_non_finite_and_names_point():
    g = GridSpec(2, 1.0, 16)
    with pytest.raises(ValueError, match="at point"):
        sample(lambda x, y: np.where(x > 0.9, np.nan, 0.0), g)


def test_field_immutable_and_grid_checked():
    g = GridSpec(2, 1.0, 16)
    f = SampledField.zeros(g)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0
    with pytest.raises(ValueError, match="grid mismatch"):
        f + SampledField.zeros(GridSpec(2, 2.0, 16))
    with pytest.raises(ValueError, match="non-finite"):
        SampledField(g, np.full(g.shape, np.inf))


def test_lp_norm_basics():
    g = GridSpec(2, 0.5, 16)
    one = SampledField(g, np.ones(g.shape))
    assert lp_norm(one, 2) == pytest.approx(1.0, rel=1e-14)
    assert lp_norm(SampledField.zeros(g), 3) == 0.0
    assert lp_norm(one * -3.0, np.inf) == 3.0
    with pytest.raises(ValueError):
        lp_norm(one, 0.5)


def test_disk_area_oracle():
    # unit disk area: fine-grid value at N=2048 against the N=256 value
    def area(N):
        g = GridSpec(2, 4.0, N)
        return lp_norm(sample(indicator(lambda x, y: x * x + y * y <= 1.0), g), 1)
    fine = area(2048)
    assert fine == pytest.approx(np.pi, rel=2e-3)
    assert area(256) == pytest.approx(fine, rel=0.02)


def test_weighted_norm_reductions():
    g = GridSpec(2, 0.5, 16)
    one = SampledField(g, np.ones(g.shape))
    assert weighted_lp_norm(one, one * 2.0, 2) == pytest.approx(np.sqrt(2.0), rel=1e-14)
    f = sample(lambda x, y: np.cos(3 * x) * y, g)
    assert weighted_lp_norm(f, one, 3) == pytest.approx(lp_norm(f, 3), rel=1e-14)
    with pytest.raises(ValueError, match="non-positive"):
        weighted_lp_norm(f, SampledField.zeros(g), 2)


def test_weighted_gaussian_refinement_oracle():
    def val(N):
        g = GridSpec(2, 4.0, N)
        f = sample(lambda x, y: np.exp(-(x * x + y * y)), g)
        return weighted_lp_norm(f, power_weight(1.0, g), 2)
    fine = val(2048)
    # closed form: 2 pi int_0^inf r^2 e^{-2 r^2} dr = 2 pi sqrt(pi / 2) / 8
    exact = np.sqrt(2 * np.pi * np.sqrt(np.pi / 2) / 8)
    assert fine == pytest.approx(exact, rel=1e-3)
    assert val(256) == pytest.approx(fine, rel=0.02)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6), p=st.sampled_from([1.0, 1.5, 2.0, 4.0, np.inf]),
       seed=st.integers(0, 2 ** 16))
def test_norm_homogeneity(c, p, seed):
    g = GridSpec(2, 1.0, 16)
    f = SampledField(g, np.random.default_rng(seed).normal(size=g.shape))
    assert lp_norm(f * c, p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_norm_monotone_in_p_on_unit_box(seed):
    # unit box is a probability space: ||f||_p grows with p (Holder) while int |f|^p shrinks for |f| <= 1
    g = GridSpec(2, 0.5, 16)
    f = SampledField(g, np.random.default_rng(seed).uniform(-1, 1, size=g.shape))
    ps = (1.0, 1.5, 2.0, 3.0, 8.0)
    norms = [lp_norm(f, p) for p in ps] + [lp_norm(f, np.inf)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(norms, norms[1:]))
    masses = [lp_norm(f, p) ** p for p in ps]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(masses, masses[1:]))


def test_refinement_stability():
    def val(N):
        g = GridSpec(2, 8.0, N)
        return lp_norm(sample(lambda x, y: np.exp(-(x * x + y * y)) * np.cos(x), g), 2)
    assert val(512) == pytest.approx(val(256), rel=0.01)


def test_quadrature_spec():
    q = QuadratureSpec.gauss(4, 0, 1)
    assert np.all((q.nodes >= 1) & (q.nodes <= 2))
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)
    g = GridSpec(2, 8.0, 256)
    f = QuadratureSpec.for_grid(g)
    assert (f.j_min, f.j_max) == (0, 1)
    f.check_grid(g)
    with pytest.raises(ValueError):
        QuadratureSpec.gauss(4, -5, 1).check_grid(g)
    with pytest.raises(ValueError):
        QuadratureSpec(((0.5, 1.0),), 0, 0)


def test_centered_box_mask():
    g = GridSpec(2, 8.0, 64)
    m = centered_box_mask(g, 0.5)
    assert m.sum() == 32 * 32
