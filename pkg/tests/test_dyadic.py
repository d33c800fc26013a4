import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mzlab.cubes import CubeBank
from mzlab.domination import conjugate, sparse_domination_check, weak11_check
from mzlab.dyadic import (Cube, DyadicGridSpec, SparseFamily, build_grids, build_sparse_family, covering_tile,
                          cz_decompose, dyadic_maximal, rle_decode, rle_encode, sparse_operator,
                          sparse_operator_Lr, sparse_operator_r)
from mzlab.grid import GridSpec, QuadratureSpec, SampledField
from mzlab.scenes import get_scene
from mzlab.sphere import get_kernel


def test_nine_grids():
    grids = build_grids(64)
    assert len(grids) == 9
    assert len({g.shift for g in grids}) == 9


def test_bad_shift():
    with pytest.raises(ValueError):
        DyadicGridSpec((0.5, 0.0), 64)


@pytest.mark.parametrize("shift", [0.0, 1 / 3, -1 / 3])
@pytest.mark.parametrize("n", [32, 64, 128])
def test_levels_nest(shift, n):
    spec = DyadicGridSpec((shift, shift), n)
    for k in range(1, spec.top_level + 1):
        coarse, _ = spec.axis_tiles(k, 0)
        fine, _ = spec.axis_tiles(k - 1, 0)
        assert set(coarse.tolist()) <= set(fine.tolist())
        assert coarse[0] == 0 and coarse[-1] == n
    # top tiles have side 2N, so at most two per axis
    assert len(spec.axis_tiles(spec.top_level, 0)[0]) <= 3


def test_physical_cuts_stable_under_refinement():
    # level-k cuts at N map to level-(k+1) cuts at 2N
    for shift in (1 / 3, -1 / 3):
        a = DyadicGridSpec((shift, 0.0), 64).axis_tiles(3, 0)[0]
        b = DyadicGridSpec((shift, 0.0), 128).axis_tiles(4, 0)[0]
        assert sorted(2 * a) == sorted(b)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 120), st.integers(0, 120), st.integers(1, 40))
def test_three_lattice_covering(x, y, s):
    n = 128
    x, y = min(x, n - s), min(y, n - s)
    Q = covering_tile(build_grids(n), (x, y), (x + s, y + s))
    assert Q is not None
    assert Q.lo[0] <= x and Q.lo[1] <= y and Q.hi[0] >= x + s and Q.hi[1] >= y + s
    assert 2 ** Q.level <= 8 * s


def test_dyadic_maximal_constant():
    np.testing.assert_allclose(dyadic_maximal(np.full((32, 32), 2.0)), 2.0)


# --- Calderon-Zygmund -------------------------------------------------------

@pytest.mark.parametrize("scene", ["disk", "two-bump", "spike", "random-3"])
@pytest.mark.parametrize("shift", [(0.0, 0.0), (1 / 3, -1 / 3)])
def test_cz_reconstruction(grid128, scene, shift):
    f = get_scene(scene, grid128)
    spec = DyadicGridSpec(shift, grid128.resolution)
    top = np.abs(f.values).mean() * 4
    cz = cz_decompose(f, max(top, 0.05 * np.abs(f.values).max()), spec)
    assert np.max(np.abs(cz.good.values + cz.bad.values - f.values)) <= 1e-12
    for Q, b in cz.bad_parts:
        assert abs(b.values[Q.slices].mean()) <= 1e-10 * max(1.0, np.abs(f.values).max())
        assert np.all(b.values[~_mask(Q, f.grid.shape)] == 0)
    # cubes are disjoint and the good part is controlled off the exemptions
    cover = np.zeros(f.grid.shape, dtype=int)
    for Q in cz.cubes:
        cover[Q.slices] += 1
    assert cover.max() <= 1
    assert np.all(np.abs(f.values[cover == 0]) <= cz.lam + 1e-12)
    for i, Q in enumerate(cz.cubes):
        if i not in cz.exempt:
            assert np.abs(f.values[Q.slices]).mean() <= 4 * cz.lam + 1e-12


def _mask(Q: Cube, shape):
    m = np.zeros(shape, dtype=bool)
    m[Q.slices] = True
    return m


def test_cz_rejects_low_level(grid128):
    f = get_scene("disk", grid128)
    spec = DyadicGridSpec((0.0, 0.0), grid128.resolution)
    with pytest.raises(ValueError, match="root"):
        cz_decompose(f, 1e-9, spec)
    with pytest.raises(ValueError):
        cz_decompose(f, -1.0, spec)


# --- sparse families --------------------------------------------------------

@pytest.mark.parametrize("scene", ["disk", "gaussian", "spike", "focused-4", "random-5"])
def test_sparse_family_certifies(grid128, scene):
    f = get_scene(scene, grid128)
    for spec in build_grids(grid128):
        S = build_sparse_family(f, spec, 0.5)
        S.certify()
        assert len(S) >= 1


def test_certify_detects_violations():
    spec = DyadicGridSpec((0.0, 0.0), 4)
    big = Cube(2, (0, 0), (0, 0), (4, 4))
    small = Cube(1, (0, 0), (0, 0), (2, 2))
    overlap = SparseFamily(spec, [big, small], [np.ones((4, 4), bool), np.ones((2, 2), bool)], 0.5)
    with pytest.raises(AssertionError, match="overlap"):
        overlap.certify()
    thin = SparseFamily(spec, [big], [np.zeros((4, 4), bool)], 0.5)
    with pytest.raises(AssertionError, match="eta"):
        thin.certify()


def test_sparse_family_bad_inputs(grid128):
    spec = DyadicGridSpec((0.0, 0.0), grid128.resolution)
    with pytest.raises(ValueError, match="eta"):
        build_sparse_family(get_scene("disk", grid128), spec, 1.5)
    with pytest.raises(ValueError, match="vanishes"):
        build_sparse_family(SampledField.zeros(grid128), spec)


def test_sparse_family_json_roundtrip(grid128):
    spec = DyadicGridSpec((1 / 3, 0.0), grid128.resolution)
    S = build_sparse_family(get_scene("two-bump", grid128), spec)
    T = SparseFamily.from_json(S.to_json())
    assert T.members == S.members and T.eta == S.eta and T.grid == S.grid
    assert all(np.array_equal(a, b) for a, b in zip(S.major_sets, T.major_sets))


@given(arrays(bool, st.tuples(st.integers(1, 9), st.integers(1, 9))))
def test_rle_roundtrip(mask):
    assert np.array_equal(rle_decode(rle_encode(mask), mask.shape), mask)


def _two_cube_family():
    spec = DyadicGridSpec((0.0, 0.0), 4)
    big = Cube(2, (0, 0), (0, 0), (4, 4))
    small = Cube(1, (0, 0), (0, 0), (2, 2))
    E_big = np.ones((4, 4), bool)
    E_big[:2, :2] = False
    return SparseFamily(spec, [big, small], [E_big, np.ones((2, 2), bool)], 0.5)


def test_sparse_operator_two_cubes():
    S = _two_cube_family()
    S.certify()
    f = np.arange(16.0).reshape(4, 4)
    expect = np.full((4, 4), 7.5)
    expect[:2, :2] += 2.5  # mean of [[0, 1], [4, 5]]
    assert np.array_equal(sparse_operator(S, f), expect)
    # r = 2: (7.5^2 + 2.5^2)^(1/2) on the small cube
    out = sparse_operator_r(S, f, 2.0)
    assert out[0, 0] == np.sqrt(7.5 ** 2 + 2.5 ** 2)
    assert out[3, 3] == 7.5
    # L^2 averages: <f^2>^(1/2)
    lr = sparse_operator_Lr(S, f, 2.0)
    assert lr[3, 3] == np.sqrt(np.mean(f ** 2))
    assert lr[0, 0] == np.sqrt(np.mean(f ** 2)) + np.sqrt(np.mean([0.0, 1.0, 16.0, 25.0]))


def test_sparse_operator_r_rejects_bad_r():
    with pytest.raises(ValueError):
        sparse_operator_r(_two_cube_family(), np.ones((4, 4)), 0.0)
    with pytest.raises(ValueError):
        sparse_operator_Lr(_two_cube_family(), np.ones((4, 4)), 0.5)


def test_conjugate():
    assert conjugate(np.inf) == 1.0
    assert conjugate(2.0) == 2.0
    assert conjugate(4.0) == pytest.approx(4 / 3)
    with pytest.raises(ValueError):
        conjugate(1.0)


# --- domination checks ------------------------------------------------------

def test_sparse_domination_finite():
    g = GridSpec(2, 8.0, 256)
    rec = sparse_domination_check(get_kernel("cos"), get_scene("disk", g), 1, quad=QuadratureSpec.gauss(4, 1, 1))
    assert np.isfinite(rec.constant) and rec.constant > 0
    assert rec.q_prime == 1.0 and len(rec.family_sizes) == 9


def test_sparse_domination_zero_input(grid128):
    rec = sparse_domination_check(get_kernel("cos"), SampledField.zeros(grid128), 1)
    assert rec.constant == 0.0


def test_weak11_record():
    g = GridSpec(2, 8.0, 256)
    rec = weak11_check(get_kernel("cos"), get_scene("spike", g), 2, quad=QuadratureSpec.gauss(4, 1, 1))
    assert rec.max_ratio == max(rec.ratios)
    assert rec.ratio_to_l == rec.max_ratio / 2
    assert all(np.diff(rec.measures) <= 0)
    with pytest.raises(ValueError):
        weak11_check(get_kernel("cos"), get_scene("spike", g), 2, lambda_grid=[-1.0],
                     quad=QuadratureSpec.gauss(4, 1, 1))


# --- cube banks -------------------------------------------------------------

def test_cube_banks():
    d = CubeBank.dyadic(64)
    assert len(d) > 0 and d.side.min() >= 4
    r = CubeBank.random(64, 200, seed=1)
    assert r.straddles_origin()[:100].all()
    c = CubeBank.centered(64)
    assert c.straddles_origin().all()
    u = d.union(d).unique()
    assert len(u) == len(d)
    with pytest.raises(ValueError):
        CubeBank(8, [[6, 6]], [4])
    with pytest.raises(ValueError):
        d.union(CubeBank.dyadic(32))
