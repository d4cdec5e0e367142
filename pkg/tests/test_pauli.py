import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iccr.pauli import PauliString, commutes, multiply, support

from conftest import random_pauli


def P(text):
    return PauliString.parse(text)


def test_involution():
    assert multiply(P("X"), P("X")) == P("I")


def test_xz_is_minus_i_y():
    assert multiply(P("X"), P("Z")) == P("-iY")


def test_two_site_product_matches_matrices():
    a, b = P("XZ"), P("ZZ")
    prod = multiply(a, b)
    assert prod == P("-iYI")
    np.testing.assert_allclose(prod.to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)


def test_size_mismatch():
    with pytest.raises(ValueError):
        multiply(P("X"), P("XX"))
    with pytest.raises(ValueError):
        commutes(P("X"), P("XX"))


@pytest.mark.parametrize("a,b,expected", [
    ("X", "Z", False),
    ("XX", "ZZ", True),
    ("YZX", "ZZZ", True),  # two anticommuting sites
])
def test_commutes_examples(a, b, expected):
    assert commutes(P(a), P(b)) is expected
    ma, mb = P(a).to_matrix(), P(b).to_matrix()
    assert np.allclose(ma @ mb, mb @ ma) is expected


@pytest.mark.parametrize("text,expected", [
    ("IXI", [1]),
    ("III", []),
    ("XYZI", [0, 1, 2]),
])
def test_support(text, expected):
    assert support(P(text)) == expected


@pytest.mark.parametrize("text", ["-iXIZY", "+Z", "iY", "-XX", "IIII"])
def test_text_round_trip(text):
    p = P(text)
    assert PauliString.parse(str(p)) == p


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        P("XQ")


def test_immutable():
    p = P("XZ")
    with pytest.raises(AttributeError):
        p.phase = 1
    with pytest.raises(ValueError):
        p.x[0] = 0


def test_hermitian_flag():
    assert P("-XY").is_hermitian
    assert not P("iZ").is_hermitian
    with pytest.raises(ValueError):
        P("iZ").sign


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_random_algebra(n, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_pauli(rng, n, hermitian=False) for _ in range(3))
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
    np.testing.assert_allclose(multiply(a, b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)
    inv = PauliString(a.x, a.z, -a.phase)
    assert multiply(a, inv) == PauliString.identity(n)
    ma, mb = a.to_matrix(), b.to_matrix()
    assert commutes(a, b) == np.allclose(ma @ mb, mb @ ma)
    assert set(support(multiply(a, b))) <= set(support(a)) | set(support(b))
