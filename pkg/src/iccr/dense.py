"""Exact statevector reference for small registers (validation only).

Basis convention: bit ``k`` of the amplitude index is qubit ``k``; a set bit
means the qubit is in the Z = -1 state.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import hadamard

from .pauli import PauliString
from .tableau import GateRecord, RecycledBlock

MAX_QUBITS = 14
MAX_SRE_QUBITS = 8
ZERO_PROBABILITY = 1e-14

_S = np.diag([1, 1j])
GATE_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "S": _S,
    "SDG": _S.conj(),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "T": np.diag([1, np.exp(1j * math.pi / 4)]),
}


def _controlled(u):
    # ordering: first tensor factor is the control
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


GATE_MATRICES["CX"] = _controlled(GATE_MATRICES["X"])
GATE_MATRICES["CY"] = _controlled(GATE_MATRICES["Y"])
GATE_MATRICES["CZ"] = _controlled(GATE_MATRICES["Z"])
GATE_MATRICES["SWAP"] = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


class DenseState:
    """``2**n`` amplitudes with the bit-``k``-is-qubit-``k`` convention."""

    def __init__(self, amplitudes, n_qubits: int | None = None):
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        n = int(round(math.log2(amps.size))) if n_qubits is None else n_qubits
        if amps.size != 2 ** n:
            raise ValueError("amplitude count is not a power of two")
        if n > MAX_QUBITS:
            raise ValueError(f"dense cap is {MAX_QUBITS} qubits")
        self.amplitudes = amps
        self.n_qubits = n

    def copy(self) -> DenseState:
        return DenseState(self.amplitudes.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> DenseState:
        return DenseState(self.amplitudes / self.norm(), self.n_qubits)

    def tensor(self) -> np.ndarray:
        # axis j of the C-ordered tensor is qubit n-1-j
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def __repr__(self) -> str:
        return f"DenseState(n_qubits={self.n_qubits})"


def basis_state(bits) -> DenseState:
    n = len(bits)
    amps = np.zeros(2 ** n, dtype=complex)
    amps[sum(int(b) << k for k, b in enumerate(bits))] = 1
    return DenseState(amps, n)


def from_product(state) -> DenseState:
    """Kronecker expansion of a :class:`~iccr.product_state.ProductState`."""
    return from_factors(state.amplitudes)


def from_factors(factors) -> DenseState:
    factors = [np.asarray(f, dtype=complex) for f in factors]
    if len(factors) > MAX_QUBITS:
        raise ValueError(f"dense cap is {MAX_QUBITS} qubits")
    out = np.ones(1, dtype=complex)
    for f in factors:
        out = np.kron(f, out)  # later qubits are more significant
    return DenseState(out, len(factors))


def apply_matrix(d: DenseState, matrix, sites) -> DenseState:
    """Apply a ``2**k`` unitary; the first listed site is the most significant
    factor of ``matrix``."""
    n = d.n_qubits
    sites = list(sites)
    if len(set(sites)) != len(sites) or min(sites) < 0 or max(sites) >= n:
        raise ValueError(f"invalid sites {sites} for {n} qubits")
    k = len(sites)
    psi = d.tensor()
    axes = [n - 1 - s for s in sites]
    op = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return DenseState(out.reshape(-1), n)


def gate_matrix(g: GateRecord) -> np.ndarray:
    if g.kind == "C2":
        from .clifford_group import two_qubit_cliffords

        cols = []
        for col in range(4):
            d = DenseState(np.eye(4, dtype=complex)[col], 2)
            for h in two_qubit_cliffords().gates_on(g.index, 1, 0):
                d = apply_matrix(d, GATE_MATRICES[h.kind], h.sites)
            cols.append(d.amplitudes)
        # basis index bits: site 0 = local qubit 1 (low bit), site 1 = local qubit 0
        return np.array(cols).T
    return GATE_MATRICES[g.kind]


def apply_gates(d: DenseState, gates) -> DenseState:
    """Replay a gate log (``GateRecord`` and ``RecycledBlock`` entries)."""
    for g in gates:
        if isinstance(g, RecycledBlock):
            d = _apply_block(d, g)
            continue
        if g.kind == "C2":
            from .clifford_group import two_qubit_cliffords

            for h in two_qubit_cliffords().gates_on(g.index, *g.sites):
                d = apply_matrix(d, GATE_MATRICES[h.kind], h.sites)
        else:
            d = apply_matrix(d, GATE_MATRICES[g.kind], g.sites)
    return d


def _remap(g, mapping):
    if isinstance(g, RecycledBlock):
        return RecycledBlock(tuple(_remap(h, mapping) for h in g.gates), mapping.get(g.ancilla, g.ancilla))
    return GateRecord(g.kind, tuple(mapping.get(s, s) for s in g.sites), g.index)


def _apply_block(d: DenseState, block: RecycledBlock) -> DenseState:
    n = d.n_qubits
    fresh = n  # temporary ancilla slot at the end of the register
    big = DenseState(np.concatenate([d.amplitudes, np.zeros_like(d.amplitudes)]), n + 1)
    gates = block.gates
    if block.ancilla != fresh:
        # the block's ancilla index may be taken by a live qubit here
        mapping = {block.ancilla: fresh}
        gates = tuple(_remap(g, mapping) for g in gates)
    big = apply_gates(big, gates)
    amps = big.amplitudes.reshape(2, -1)  # top bit = temporary qubit
    weights = np.sum(np.abs(amps) ** 2, axis=1)
    bit = int(np.argmax(weights))
    if weights[1 - bit] > 1e-9 * max(weights.sum(), 1e-300):
        raise ValueError("recycled ancilla did not return to a basis state")
    return DenseState(amps[bit], n)


def apply_pauli(d: DenseState, p: PauliString) -> DenseState:
    n = d.n_qubits
    if p.n_qubits != n:
        raise ValueError("size mismatch")
    idx = np.arange(2 ** n)
    xmask = sum(int(b) << k for k, b in enumerate(p.x))
    zmask = sum(int(b) << k for k, b in enumerate(p.z))
    ymask = xmask & zmask
    # P = i^phase * prod letters; Y = i X Z, Z acts first on |b>
    zsign = 1 - 2 * (np.bitwise_count(idx & zmask) % 2).astype(np.int64)
    phase = (1j ** p.phase) * (1j ** bin(ymask).count("1"))
    out = np.empty_like(d.amplitudes)
    out[idx ^ xmask] = phase * zsign * d.amplitudes
    return DenseState(out, n)


def expectation(d: DenseState, p: PauliString) -> complex:
    return complex(np.vdot(d.amplitudes, apply_pauli(d, p).amplitudes))


def project_pauli(d: DenseState, p: PauliString, s: int):
    """Normalized ``(1 + s p)/2 |d>`` and its Born probability."""
    if not p.is_hermitian:
        raise ValueError("projector needs a Hermitian string")
    if s not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    proj = 0.5 * (d.amplitudes + s * apply_pauli(d, p).amplitudes)
    prob = float(np.vdot(proj, proj).real)
    if prob < ZERO_PROBABILITY:
        raise ValueError("zero-probability projection")
    return DenseState(proj / math.sqrt(prob), d.n_qubits), prob


def overlap(a: DenseState, b: DenseState) -> complex:
    """``<a|b>``."""
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: DenseState, b: DenseState) -> float:
    return abs(overlap(a, b)) ** 2 / (a.norm() ** 2 * b.norm() ** 2)


def pauli_spectrum(d: DenseState) -> np.ndarray:
    """``|<X^a Z^b>|`` for all ``4**n`` unsigned strings, shape ``(2**n, 2**n)``."""
    n = d.n_qubits
    if n > MAX_SRE_QUBITS:
        raise ValueError(f"exact SRE cap is {MAX_SRE_QUBITS} qubits")
    psi = d.amplitudes
    dim = 2 ** n
    idx = np.arange(dim)
    # rows a: v_a[k] = conj(psi[k ^ a]) psi[k]; Walsh-Hadamard over k gives all b
    v = np.conj(psi[idx[:, None] ^ idx[None, :]]) * psi[None, :]
    return np.abs(v @ hadamard(dim))


def exact_sre(d: DenseState, n: float) -> float:
    """Stabilizer Renyi entropy in bits by summing over all Pauli strings."""
    if n <= 0:
        raise ValueError("order must be positive")
    nq = d.n_qubits
    d = d.normalized()
    sq = pauli_spectrum(d).ravel() ** 2
    if n == 1:
        nz = sq[sq > 1e-300]
        return float(-np.sum(nz * np.log2(nz)) / 2 ** nq)
    return float(math.log2(np.sum(sq ** n) / 2 ** nq) / (1 - n))


def exact_projected_replacement(psi1: DenseState, support, i_star: int, q_star: int, s: int) -> DenseState:
    """Exact renormalized state ``V^dag (1 + s prod_S Z)/2 |psi1>``, normalized.

    ``V = S^q* (prod CX_{i -> i*}) X^{(1-s)/2}`` on the support.
    """
    n = psi1.n_qubits
    zstring = PauliString.from_letters({i: "Z" for i in support}, n)
    projected, _ = project_pauli(psi1, zstring, s)
    v_dag = v_gates(support, i_star, q_star, s, adjoint=True)
    return apply_gates(projected, v_dag)


def v_gates(support, i_star: int, q_star: int, s: int, adjoint: bool = False) -> list[GateRecord]:
    """Gates of ``V`` (or ``V^dag``) in application order."""
    gates = []
    if s == -1:
        gates.append(GateRecord("X", (i_star,)))
    gates += [GateRecord("CX", (i, i_star)) for i in support if i != i_star]
    gates += [GateRecord("S", (i_star,))] * (q_star % 4)
    if adjoint:
        inv = {"S": "SDG", "SDG": "S"}
        gates = [GateRecord(inv.get(g.kind, g.kind), g.sites) for g in reversed(gates)]
    return gates
