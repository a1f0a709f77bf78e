import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pbchron.agedepth import AgeDepthFunction, SectionGrid, age_at, slopes_from_innovations


def f(slopes, dc=1.0, omega=0.0):
    return AgeDepthFunction(SectionGrid(dc, len(slopes)), np.asarray(slopes, float), omega)


def test_examples():
    assert age_at(f([2.0] * 5), 3.5) == pytest.approx(7.0)
    assert age_at(f([1, 2, 3]), 2.5) == pytest.approx(4.5)
    assert age_at(f([1, 2, 3]), 0.0) == 0.0
    assert f([1, 2, 3])(3.0) == pytest.approx(6.0)


def test_out_of_range():
    with pytest.raises(ValueError):
        age_at(f([1, 2, 3]), 3.5)
    with pytest.raises(ValueError):
        age_at(f([1, 2, 3]), -0.1)


def test_grid():
    g = SectionGrid.covering(27, 1.0)
    assert g.K == 27 and g.bottom == 27
    assert SectionGrid.covering(27.2, 2.0).K == 14
    np.testing.assert_allclose(SectionGrid(0.5, 4).c, [0, 0.5, 1, 1.5, 2])
    with pytest.raises(ValueError):
        SectionGrid(0, 3)


def test_rejects_bad_slopes():
    with pytest.raises(ValueError):
        f([1, 0, 2])
    with pytest.raises(ValueError):
        AgeDepthFunction(SectionGrid(1, 3), np.ones(2))


def test_innovation_examples():
    a = np.array([5.0, 7.0, 3.0])
    np.testing.assert_allclose(slopes_from_innovations(a, 0.0), a)
    np.testing.assert_allclose(slopes_from_innovations(a, 1.0), [3, 3, 3])
    # m_3 = 8, m_2 = 0.5*8 + 0.5*2 = 5, m_1 = 0.5*5 + 0.5*4 = 4.5
    np.testing.assert_allclose(slopes_from_innovations([4, 2, 8], 0.5), [4.5, 5, 8])
    # mirror recursion, anchored at the top section
    np.testing.assert_allclose(slopes_from_innovations([4, 2, 8], 0.5, anchor="top"), [4, 3, 5.5])


@pytest.mark.parametrize("alpha, omega", [([1, -1], 0.5), ([], 0.5), ([1, 2], 1.5), ([1, 2], -0.1)])
def test_innovation_errors(alpha, omega):
    with pytest.raises(ValueError):
        slopes_from_innovations(alpha, omega)


def cumsum_oracle(slopes, dc, d):
    """Walk the sections one by one."""
    age = 0.0
    top = 0.0
    for m in slopes:
        bottom = top + dc
        if d <= bottom:
            return age + m * (d - top)
        age += m * dc
        top = bottom
    return age


slope_arrays = st.integers(1, 40).flatmap(lambda k: arrays(float, k, elements=st.floats(0.01, 100)))


@given(slope_arrays, st.floats(0.1, 5), st.floats(0, 1))
def test_matches_oracle(slopes, dc, u):
    fn = f(slopes, dc)
    d = u * fn.grid.bottom
    assert fn(d) == pytest.approx(cumsum_oracle(slopes, dc, d), rel=1e-12, abs=1e-12)


@given(slope_arrays, st.sampled_from([0.25, 0.5, 1.0, 2.0]))
def test_exact_at_boundaries(slopes, dc):
    fn = f(slopes, dc)
    expected = dc * np.concatenate([[0], np.cumsum(slopes)])
    np.testing.assert_allclose(fn(fn.grid.c), expected, rtol=1e-14)
    np.testing.assert_allclose(fn.boundary_ages, expected, rtol=1e-14)


@given(slope_arrays, st.floats(0.1, 5))
def test_strictly_increasing_and_continuous(slopes, dc):
    fn = f(slopes, dc)
    d = np.linspace(0, fn.grid.bottom, 257)
    t = fn(d)
    assert np.all(np.diff(t) > 0)
    eps = 1e-9 * dc
    c = fn.grid.c[1:-1]
    np.testing.assert_allclose(fn(c - eps), fn(c + eps), atol=1e-6 * max(1.0, float(np.max(slopes))))


@given(st.integers(1, 40).flatmap(lambda k: arrays(float, k, elements=st.floats(0.01, 100))), st.floats(0, 1), st.sampled_from(["bottom", "top"]))
def test_convex_bound(alpha, omega, anchor):
    m = slopes_from_innovations(alpha, omega, anchor)
    assert np.all(m >= alpha.min() * (1 - 1e-12))
    assert np.all(m <= alpha.max() * (1 + 1e-12))
    assert np.all(m > 0)


def test_bottom_anchor_recursion_direction():
    alpha = np.array([1.0, 2.0, 3.0, 4.0])
    m = slopes_from_innovations(alpha, 0.3)
    assert m[-1] == alpha[-1]
    for j in range(3):
        assert m[j] == pytest.approx(0.3 * m[j + 1] + 0.7 * alpha[j])
