import numpy as np
import pytest

from iccr import dense
from iccr.pauli import PauliString
from iccr.tableau import GateRecord

ELEMENTARY = ["H", "S", "SDG", "X", "Y", "Z", "CX", "CY", "CZ", "SWAP"]


def random_pauli(rng, n, hermitian=True):
    x = rng.integers(0, 2, n)
    z = rng.integers(0, 2, n)
    phase = 2 * rng.integers(0, 2) if hermitian else rng.integers(0, 4)
    return PauliString(x, z, phase)


def random_gates(rng, n, count, kinds=ELEMENTARY):
    gates = []
    for _ in range(count):
        kind = kinds[rng.integers(len(kinds))]
        if kind in ("CX", "CY", "CZ", "SWAP", "C2"):
            if n < 2:
                continue
            a, b = rng.choice(n, 2, replace=False)
            idx = int(rng.integers(11520)) if kind == "C2" else None
            gates.append(GateRecord(kind, (a, b), idx))
        else:
            gates.append(GateRecord(kind, (int(rng.integers(n)),)))
    return gates


def unitary_of(gates, n):
    """Dense matrix of a gate sequence (application order)."""
    cols = []
    for k in range(2 ** n):
        d = dense.DenseState(np.eye(2 ** n, dtype=complex)[k], n)
        cols.append(dense.apply_gates(d, gates).amplitudes)
    return np.array(cols).T


def random_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criterion -> list of (passed, detail); printed after the run
ACCEPTANCE = {}


def record_acceptance(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} | " + "; ".join(d for _, d in parts))
