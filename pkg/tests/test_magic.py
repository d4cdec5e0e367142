import math

import numpy as np
import pytest

from iccr import dense
from iccr.magic import magic_report, nullity, single_qubit_sre, sre
from iccr.product_state import CLASSES, ProductState, SingleQubitState, initial_angle_state

from conftest import random_gates, random_qubit

T_STATE = SingleQubitState.from_amplitudes([1, np.exp(1j * math.pi / 4)])
ANGLE = initial_angle_state()


@pytest.mark.parametrize("n", [0.5, 1, 2, 3])
def test_stabilizer_states_have_zero_sre(n):
    for name in CLASSES:
        assert single_qubit_sre(SingleQubitState.stabilizer(name), n) == 0.0


def test_closed_forms():
    assert single_qubit_sre(T_STATE, 2) == pytest.approx(math.log2(4 / 3), abs=1e-12)
    # <X> = sin(2pi/7), <Z> = cos(2pi/7); values confirmed by the dense sum below
    assert single_qubit_sre(ANGLE, 2) == pytest.approx(0.391420, abs=1e-6)
    assert single_qubit_sre(ANGLE, 1) == pytest.approx(0.481991, abs=1e-6)


def test_closed_forms_match_dense_single_qubit():
    for q in (T_STATE, ANGLE):
        d = dense.from_factors([q.amplitudes])
        for n in (1, 2, 3):
            assert single_qubit_sre(q, n) == pytest.approx(dense.exact_sre(d, n), abs=1e-12)


def test_additivity_examples():
    s = ProductState.uniform(10, ANGLE)
    assert sre(s, 2) == pytest.approx(3.914199, abs=1e-6)
    assert sre(ProductState.uniform(6, SingleQubitState.stabilizer("Y+")), 2) == 0.0
    mixed = ProductState([ANGLE] * 3 + [SingleQubitState.stabilizer("X-")] * 4)
    assert sre(mixed, 3) == pytest.approx(3 * single_qubit_sre(ANGLE, 3))


def test_sre_matches_dense(rng):
    for _ in range(30):
        n = int(rng.integers(1, 7))
        s = ProductState([random_qubit(rng) for _ in range(n)])
        d = dense.from_product(s)
        for order in (1, 2, 3):
            assert sre(s, order) == pytest.approx(dense.exact_sre(d, order), abs=1e-9)


def test_monotone_in_order_and_bounded_by_nullity(rng):
    for _ in range(100):
        q = SingleQubitState.from_amplitudes(random_qubit(rng))
        m1, m2, m3 = (single_qubit_sre(q, n) for n in (1, 2, 3))
        assert m1 >= m2 - 1e-12 >= m3 - 2e-12
        assert m1 <= 1.0


def test_invalid_order():
    with pytest.raises(ValueError):
        single_qubit_sre(T_STATE, 0)
    with pytest.raises(ValueError):
        sre(ProductState([T_STATE]), -1)


def test_nullity_examples():
    assert nullity(ProductState.uniform(100, ANGLE)) == 100
    assert nullity(ProductState.uniform(4, SingleQubitState.stabilizer("Z+"))) == 0


def test_dense_sre_clifford_invariant(rng):
    for _ in range(5):
        n = int(rng.integers(1, 5))
        s = ProductState([random_qubit(rng) for _ in range(n)])
        d = dense.from_product(s)
        moved = dense.apply_gates(d, random_gates(rng, n, 15))
        for order in (1, 2):
            assert dense.exact_sre(moved, order) == pytest.approx(sre(s, order), abs=1e-10)


def test_report_densities():
    rep = magic_report(ProductState.uniform(4, ANGLE))
    assert rep.nullity == 4
    assert set(rep.sre) == {1, 2, 3}
    d = rep.densities
    assert d["m2"] == pytest.approx(single_qubit_sre(ANGLE, 2))
    assert d["nullity"] == 1.0
