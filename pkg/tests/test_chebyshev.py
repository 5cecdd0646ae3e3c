import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as npcheb

from rmtclt.chebyshev import (
    TableTooSmallError,
    coeff_matrix,
    eval_chebyshev_series,
    eval_rescaled,
    eval_rescaled_all,
    expand_in_chebyshev,
    inverse_coeff_matrix,
    rescaled_inverse,
    table,
)


def test_low_degree_coefficients():
    T = coeff_matrix(4)
    assert T[2][:3] == (-2, 0, 1)
    assert T[3][:4] == (0, -3, 0, 1)
    assert T[4] == (2, 0, -4, 0, 1)


def test_inverse_rows():
    t = inverse_coeff_matrix(6)
    assert t[4] == (6, 0, 4, 0, 1, 0, 0)
    assert t[6][:7] == (20, 0, 15, 0, 6, 0, 1)
    # central row entries are Catalan-like central binomials
    assert [t[2 * k][0] for k in range(4)] == [1, 2, 6, 20]


def test_product_is_identity_degree_40():
    tab = table(40)
    assert tab.product() == [[int(i == j) for j in range(41)] for i in range(41)]


def test_trig_identity():
    theta = np.linspace(0.1, 3.0, 17)
    vals = eval_rescaled_all(12, 2 * np.cos(theta))
    for m in range(1, 13):
        np.testing.assert_allclose(vals[m], 2 * np.cos(m * theta), atol=1e-10)


def test_matches_numpy_chebyshev():
    x = np.linspace(-3, 3, 11)
    for m in range(1, 9):
        ref = 2 * npcheb.chebval(x / 2, [0] * m + [1])
        np.testing.assert_allclose(eval_rescaled(m, x), ref, rtol=1e-12, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(m=st.integers(0, 12), x=st.floats(-5, 5), s=st.floats(0.2, 3))
def test_rescaling(m, x, s):
    assert eval_rescaled(m, x, s) == pytest.approx(s**m * eval_rescaled(m, x / s), rel=1e-9, abs=1e-9 * s**m)


@settings(max_examples=50, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=8),
       x=st.floats(-2, 2), s=st.floats(0.3, 2.5))
def test_expansion_roundtrip(coeffs, x, s):
    c = expand_in_chebyshev(coeffs, s)
    direct = sum(a * x**k for k, a in enumerate(coeffs))
    assert eval_chebyshev_series(c, x, s) == pytest.approx(direct, rel=1e-9, abs=1e-8)


def test_rescaled_inverse_maps_monomials():
    s = 1.3
    ts = rescaled_inverse(5, s)
    x = np.linspace(-2, 2, 7)
    T = eval_rescaled_all(5, x, s)
    for k in range(6):
        np.testing.assert_allclose(ts[k] @ T, x**k, atol=1e-10)


def test_errors():
    with pytest.raises(TableTooSmallError):
        expand_in_chebyshev([0, 0, 0, 1], max_degree=2)
    with pytest.raises(ValueError):
        eval_rescaled(2, 1.0, s=0)
    with pytest.raises(ValueError):
        eval_rescaled(-1, 1.0)


def test_scalar_and_complex_inputs():
    assert isinstance(eval_rescaled(3, 1.5), float)
    z = eval_rescaled_all(3, np.array([1j]))
    assert z[2][0] == pytest.approx(-3)
