import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr, ndtri
from scipy.stats import qmc, spearmanr

from ltqmc.errors import CapacityError
from ltqmc.sampling import (GeneratorSpec, direction_integers, hybrid_points, inv_norm,
                            lhs_uniforms, load_direction_numbers, property_a_holds,
                            pseudo_uniforms, sobol_points, substream)


def one_per_dyadic_interval(x, m):
    return np.unique(np.floor(x[:2 ** m] * 2 ** m)).size == 2 ** m


def one_per_stratum(u):
    n = u.shape[0]
    return all(np.array_equal(np.sort(np.ceil(n * col)), np.arange(1, n + 1)) for col in u.T)


def test_pseudo_uniforms_contract():
    a = pseudo_uniforms(1000, 3, seed=7, stream=2)
    np.testing.assert_array_equal(a, pseudo_uniforms(1000, 3, seed=7, stream=2))
    assert not np.array_equal(a, pseudo_uniforms(1000, 3, seed=7, stream=3))
    assert np.all((a > 0) & (a < 1))
    assert abs(pseudo_uniforms(10 ** 5, 1, seed=1).mean() - 0.5) < 0.005


def test_lhs_stratification_examples():
    u = lhs_uniforms(4, 1, seed=3)
    np.testing.assert_array_equal(np.sort(np.floor(4 * u[:, 0])), [0, 1, 2, 3])
    one = lhs_uniforms(1, 1, seed=3)
    assert 0 < one[0, 0] < 1
    u = lhs_uniforms(100, 2, seed=9)
    assert abs(spearmanr(u[:, 0], u[:, 1]).statistic) < 0.25


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 600), st.integers(1, 4), st.integers(0, 2 ** 32))
def test_lhs_always_stratified(n, d, seed):
    u = lhs_uniforms(n, d, seed)
    assert one_per_stratum(u)
    assert np.all((u > 0) & (u < 1))


def test_direction_file_parses():
    table = load_direction_numbers()
    assert len(table) == 49
    assert table[0] == (1, 0, (1,))
    assert direction_integers(50).shape == (50, 32)
    with pytest.raises(CapacityError):
        direction_integers(51)


def test_unscrambled_first_points():
    np.testing.assert_array_equal(sobol_points(3, 1)[:, 0], [0.5, 0.75, 0.25])


def test_unscrambled_points_match_reference_generator():
    ours = sobol_points(1024, 50, skip=0)
    ref = qmc.Sobol(50, scramble=False, bits=32).random(1024)
    ref[ref == 0.0] = ours[ref == 0.0]   # the origin is nudged off zero
    np.testing.assert_allclose(ours, ref, rtol=0, atol=1e-15)


def test_property_a():
    assert property_a_holds(50)


@pytest.mark.parametrize("seed", [0, 1])
def test_scrambled_points_are_equidistributed(seed):
    x = sobol_points(2 ** 13, 50, scramble=seed)
    assert np.all((x > 0) & (x < 1))
    for m in range(1, 14):
        assert all(one_per_dyadic_interval(x[:, j], m) for j in range(50)), m


def test_scramble_seeds_give_different_blocks():
    a, b = sobol_points(256, 5, scramble=1), sobol_points(256, 5, scramble=2)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, sobol_points(256, 5, scramble=1))
    x = sobol_points(256, 5, scramble=substream(4, 2))
    assert all(one_per_dyadic_interval(x[:, j], 8) for j in range(5))


def test_scrambled_two_dimensional_projections_are_nets():
    # first 2^m points of dims (0, j): each 2^-a x 2^-(m-a) box of the leading
    # pair holds one point, because the scramble preserves (0, m, 2)-nets
    x = sobol_points(2 ** 8, 2, scramble=3)
    for a in range(9):
        boxes = np.floor(x[:, 0] * 2 ** a) * 2 ** (8 - a) + np.floor(x[:, 1] * 2 ** (8 - a))
        assert np.unique(boxes).size == 2 ** 8


def test_hybrid_degenerate_cases():
    full = hybrid_points(64, 5, 5, seed=1, stream=2)
    np.testing.assert_array_equal(full, sobol_points(64, 5, scramble=substream(1, 2, 0)))
    lhs = hybrid_points(64, 5, 0, seed=1, stream=2)
    np.testing.assert_array_equal(lhs, lhs_uniforms(64, 5, 1, rng=substream(1, 2, 1)))
    with pytest.raises(CapacityError):
        hybrid_points(8, 60, 51, seed=0)


def test_hybrid_column_groups():
    x = hybrid_points(8192, 2500, 50, seed=5)
    for m in (1, 6, 13):
        assert all(one_per_dyadic_interval(x[:, j], m) for j in range(50))
    assert one_per_stratum(x[:, 50:])


def test_generator_spec():
    for kind in ("pseudo", "lhs", "hybrid"):
        g = GeneratorSpec(kind, seed=3)
        a = g.sample(128, 60, stream=1)
        assert a.shape == (128, 60)
        np.testing.assert_array_equal(a, g.sample(128, 60, stream=1))
        assert not np.array_equal(a, g.sample(128, 60, stream=2))
    with pytest.raises(ValueError):
        GeneratorSpec("sobol")
    with pytest.raises(CapacityError):
        GeneratorSpec("hybrid", sobol_dims=51)


def test_inv_norm_values():
    assert inv_norm(0.5) == 0.0
    assert inv_norm(0.975) == pytest.approx(1.959964, abs=1e-6)
    mpmath.mp.dps = 40
    for u in (1e-10, 1e-300, 0.02, 0.3, 0.9, 1 - 1e-12):
        exact = float(mpmath.findroot(lambda x: mpmath.ncdf(x) - u, ndtri(u)))
        assert inv_norm(u) == pytest.approx(exact, rel=1e-13)
    assert inv_norm(1e-10) == pytest.approx(-6.3613, abs=1e-4)
    for bad in (0.0, 1.0, -0.1, np.nan):
        with pytest.raises(ValueError):
            inv_norm(bad)


def test_inv_norm_round_trip_and_symmetry():
    u = (np.arange(1, 10 ** 6 + 1) - 0.5) / 10 ** 6
    z = inv_norm(u)
    assert np.max(np.abs(ndtr(z) - u)) <= 1e-9
    np.testing.assert_allclose(z, -z[::-1], atol=1e-12)
    assert np.all(np.diff(z) > 0)


def test_skip_is_configurable():
    plain = sobol_points(8, 2, skip=0)
    np.testing.assert_array_equal(sobol_points(7, 2), plain[1:])
    a = GeneratorSpec("hybrid", seed=1).sample(16, 3)
    b = GeneratorSpec("hybrid", seed=1, skip=1).sample(16, 3)
    np.testing.assert_array_equal(a, hybrid_points(16, 3, 3, seed=1, skip=0))
    assert not np.array_equal(a, b)
