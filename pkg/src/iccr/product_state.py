"""Product states of qubits with stabilizer/non-stabilizer classification.

Amplitudes are given in the Z eigenbasis ``(|0>, |1>)``.  Qubits found within
``CLASSIFY_TOL`` of one of the six single-qubit stabilizer states are snapped
to that state and carry an exact tag; Clifford rotations then act on the tag
through a lookup table, so stabilizer qubits never accumulate rounding error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dense import GATE_MATRICES
from .pauli import PauliString
from .tableau import SINGLE_QUBIT_GATES, GateRecord

CLASSIFY_TOL = 1e-9
NON_STABILIZER = "NonStabilizer"
CLASSES = ("Z+", "Z-", "X+", "X-", "Y+", "Y-")

_R = 1 / math.sqrt(2)
CANONICAL = np.array([
    [1, 0],
    [0, 1],
    [_R, _R],
    [_R, -_R],
    [_R, 1j * _R],
    [_R, -1j * _R],
], dtype=complex)
# orthogonal partner of each canonical state
_PARTNER = np.array([1, 0, 3, 2, 5, 4])
# Bloch vectors (X, Y, Z) of the canonical states
_CLASS_BLOCH = np.array([
    [0, 0, 1], [0, 0, -1], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0],
], dtype=float)


def classify(amplitudes) -> int:
    """Class code 0..5 (see ``CLASSES``) or -1 for a non-stabilizer state."""
    a = np.asarray(amplitudes, dtype=complex)
    a = a / np.linalg.norm(a)
    # sine distance to class c is |<c_perp|a>|
    dist = np.abs(CANONICAL[_PARTNER].conj() @ a)
    c = int(np.argmin(dist))
    return c if dist[c] < CLASSIFY_TOL else -1


def _class_table():
    table = {}
    for kind in SINGLE_QUBIT_GATES:
        m = GATE_MATRICES[kind]
        table[kind] = np.array([classify(m @ CANONICAL[c]) for c in range(6)], dtype=np.int8)
    return table


GATE_CLASS_TABLE = _class_table()


@dataclass(frozen=True)
class SingleQubitState:
    amplitudes: tuple
    classification: str

    @classmethod
    def from_amplitudes(cls, amplitudes) -> SingleQubitState:
        a = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(a)
        if a.shape != (2,) or norm == 0:
            raise ValueError("need two amplitudes with non-zero norm")
        a = a / norm
        code = classify(a)
        if code >= 0:
            return cls.stabilizer(CLASSES[code])
        return cls((complex(a[0]), complex(a[1])), NON_STABILIZER)

    @classmethod
    def stabilizer(cls, name: str) -> SingleQubitState:
        a = CANONICAL[CLASSES.index(name)]
        return cls((complex(a[0]), complex(a[1])), name)

    @classmethod
    def local(cls, q: int) -> SingleQubitState:
        """``(|0> + i**q |1>)/sqrt(2)``."""
        return cls.from_amplitudes([1, 1j ** q])

    @property
    def is_stabilizer(self) -> bool:
        return self.classification != NON_STABILIZER

    def bloch(self) -> np.ndarray:
        return _bloch(np.array(self.amplitudes)[None])[0]


def _bloch(amps) -> np.ndarray:
    a0, a1 = amps[:, 0], amps[:, 1]
    c = np.conj(a0) * a1
    return np.stack([2 * c.real, 2 * c.imag, np.abs(a0) ** 2 - np.abs(a1) ** 2], axis=1)


def initial_angle_state(theta: float = math.pi / 7) -> SingleQubitState:
    """``cos(theta)|0> + sin(theta)|1>``."""
    return SingleQubitState.from_amplitudes([math.cos(theta), math.sin(theta)])


class ProductState:
    """Ordered product of single-qubit states.

    Storage is an ``(n, 2)`` amplitude array plus an int8 class code per site
    (``-1`` for non-stabilizer).  Methods mutate in place and return ``self``.
    """

    def __init__(self, qubits):
        qubits = [q if isinstance(q, SingleQubitState) else SingleQubitState.from_amplitudes(q)
                  for q in qubits]
        if not qubits:
            raise ValueError("need at least one qubit")
        self.amplitudes = np.array([q.amplitudes for q in qubits], dtype=complex)
        self.classes = np.array([CLASSES.index(q.classification) if q.is_stabilizer else -1
                                 for q in qubits], dtype=np.int8)

    @classmethod
    def uniform(cls, n: int, qubit: SingleQubitState) -> ProductState:
        out = cls([qubit])
        out.amplitudes = np.repeat(out.amplitudes, n, axis=0)
        out.classes = np.repeat(out.classes, n)
        return out

    @classmethod
    def _raw(cls, amplitudes, classes) -> ProductState:
        out = cls.__new__(cls)
        out.amplitudes = amplitudes
        out.classes = classes
        return out

    def copy(self) -> ProductState:
        return ProductState._raw(self.amplitudes.copy(), self.classes.copy())

    @property
    def n_qubits(self) -> int:
        return len(self.classes)

    @property
    def qubits(self) -> list[SingleQubitState]:
        return [self[i] for i in range(self.n_qubits)]

    def __getitem__(self, i: int) -> SingleQubitState:
        code = int(self.classes[i])
        a = self.amplitudes[i]
        name = CLASSES[code] if code >= 0 else NON_STABILIZER
        return SingleQubitState((complex(a[0]), complex(a[1])), name)

    def __len__(self) -> int:
        return self.n_qubits

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.classes >= 0))

    @property
    def nullity(self) -> int:
        return self.n_qubits - self.rank

    def bloch(self, sites=None) -> np.ndarray:
        """``(m, 3)`` array of ``<X>, <Y>, <Z>``; exact on stabilizer qubits."""
        sites = np.arange(self.n_qubits) if sites is None else np.asarray(sites, dtype=np.intp)
        out = _bloch(self.amplitudes[sites])
        codes = self.classes[sites]
        stab = codes >= 0
        out[stab] = _CLASS_BLOCH[codes[stab]]
        return out

    def z_expectations(self, sites) -> np.ndarray:
        sites = np.asarray(sites, dtype=np.intp)
        a = self.amplitudes[sites]
        out = np.abs(a[:, 0]) ** 2 - np.abs(a[:, 1]) ** 2
        codes = self.classes[sites]
        stab = codes >= 0
        out[stab] = _CLASS_BLOCH[codes[stab], 2]
        return out

    def expect_pauli(self, p: PauliString) -> float:
        if p.n_qubits != self.n_qubits:
            raise ValueError("size mismatch")
        if not p.is_hermitian:
            raise ValueError("imaginary phase has no real expectation value")
        sites = np.flatnonzero(p.x | p.z)
        if sites.size == 0:
            return float(p.sign)
        bloch = self.bloch(sites)
        # letter code (x, z): X -> 0, Y -> 1, Z -> 2
        axis = np.where(p.x[sites] & p.z[sites], 1, np.where(p.x[sites], 0, 2))
        return float(p.sign * np.prod(bloch[np.arange(sites.size), axis]))

    def apply_gate(self, g: GateRecord) -> ProductState:
        if g.kind not in SINGLE_QUBIT_GATES:
            raise ValueError(f"{g.kind} is not a single-qubit gate")
        return self.apply_rotation(g.sites, g.kind)

    def apply_rotation(self, sites, kind: str) -> ProductState:
        """Apply the same single-qubit Clifford on every listed site."""
        sites = np.asarray(sites, dtype=np.intp)
        if sites.size == 0:
            return self
        codes = self.classes[sites]
        stab = codes >= 0
        if stab.all():
            new_codes = GATE_CLASS_TABLE[kind][codes]
            self.classes[sites] = new_codes
            self.amplitudes[sites] = CANONICAL[new_codes]
            return self
        m = GATE_MATRICES[kind]
        self.amplitudes[sites] = self.amplitudes[sites] @ m.T
        new_codes = np.where(stab, GATE_CLASS_TABLE[kind][np.maximum(codes, 0)], -1)
        self.classes[sites] = new_codes
        snap = sites[stab]
        self.amplitudes[snap] = CANONICAL[new_codes[stab]]
        return self

    def overlap_with_local(self, i: int, q: int) -> float:
        """``|<psi(q)|a_i>|**2`` with ``psi(q) = (|0> + i**q |1>)/sqrt(2)``."""
        return float(self.local_overlaps([i])[0, q % 4])

    def local_overlaps(self, sites) -> np.ndarray:
        """``(m, 4)`` overlaps with the four X/Y eigenstates."""
        sites = np.asarray(sites, dtype=np.intp)
        a = self.amplitudes[sites]
        phases = (-1j) ** np.arange(4)
        return np.abs(a[:, :1] + a[:, 1:2] * phases[None, :]) ** 2 / 2

    def set_qubit(self, i: int, new: SingleQubitState) -> ProductState:
        self.amplitudes[i] = new.amplitudes
        self.classes[i] = CLASSES.index(new.classification) if new.is_stabilizer else -1
        return self

    def set_amplitudes(self, sites, amplitudes) -> ProductState:
        """Overwrite many sites with normalized amplitudes and reclassify."""
        for i, a in zip(np.asarray(sites, dtype=np.intp), amplitudes):
            self.set_qubit(int(i), SingleQubitState.from_amplitudes(a))
        return self

    def append(self, q: SingleQubitState) -> ProductState:
        self.amplitudes = np.vstack([self.amplitudes, np.array(q.amplitudes, dtype=complex)[None]])
        code = CLASSES.index(q.classification) if q.is_stabilizer else -1
        self.classes = np.append(self.classes, np.int8(code))
        return self

    def remove(self, i: int) -> SingleQubitState:
        q = self[i]
        self.amplitudes = np.delete(self.amplitudes, i, axis=0)
        self.classes = np.delete(self.classes, i)
        return q

    def swap(self, i: int, j: int) -> ProductState:
        self.amplitudes[[i, j]] = self.amplitudes[[j, i]]
        self.classes[[i, j]] = self.classes[[j, i]]
        return self

    def to_csv(self) -> str:
        """``index, class, re(a0), im(a0), re(a1), im(a1)`` per site."""
        lines = []
        for i in range(self.n_qubits):
            q = self[i]
            a0, a1 = q.amplitudes
            lines.append(f"{i},{q.classification},{a0.real!r},{a0.imag!r},{a1.real!r},{a1.imag!r}")
        return "\n".join(lines)


def expect_pauli(s: ProductState, p: PauliString) -> float:
    return s.expect_pauli(p)


def apply_single_qubit_clifford(s: ProductState, i: int, g: GateRecord) -> ProductState:
    if g.sites != (i,):
        raise ValueError("gate must act on the given site")
    return s.copy().apply_gate(g)


def overlap_with_local(s: ProductState, i: int, q: int) -> float:
    return s.overlap_with_local(i, q)


def set_qubit(s: ProductState, i: int, new: SingleQubitState) -> ProductState:
    return s.copy().set_qubit(i, new)
