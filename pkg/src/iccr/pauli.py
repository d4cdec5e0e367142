"""Phased Pauli strings in symplectic form.

A string on ``n`` qubits is stored as two bit vectors ``x`` and ``z`` plus a
phase exponent ``k`` so that the operator is ``i**k`` times the tensor product
of single-qubit letters::

    (x, z) = (0, 0) -> I
    (1, 0) -> X
    (1, 1) -> Y
    (0, 1) -> Z

Letters are the Hermitian Pauli matrices, so a string is Hermitian iff ``k`` is
even. Sites are 0-based; the text form lists qubit 0 first, e.g. ``"-iXIZY"``.
"""
from __future__ import annotations

import numpy as np

_LETTERS = "IXZY"  # indexed by x + 2*z
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}


def phase_exponent(x1, z1, x2, z2):
    """Exponent of ``i`` picked up by the letter product ``P(x1, z1) P(x2, z2)``.

    Works elementwise on integer arrays; returns values in {-1, 0, 1}.
    """
    x1 = np.asarray(x1, dtype=np.int8)
    z1 = np.asarray(z1, dtype=np.int8)
    x2 = np.asarray(x2, dtype=np.int8)
    z2 = np.asarray(z2, dtype=np.int8)
    # X*X, Z*Z, Y*Y and products with I give 0; XY=iZ, YZ=iX, ZX=iY.
    return (
        x1 * z1 * (z2 - x2)
        + x1 * (1 - z1) * z2 * (2 * x2 - 1)
        + (1 - x1) * z1 * x2 * (1 - 2 * z2)
    )


class PauliString:
    """Immutable phased Pauli string ``i**phase * P_0 (x) ... (x) P_{n-1}``."""

    __slots__ = ("x", "z", "phase")

    def __init__(self, x, z, phase: int = 0):
        x = np.array(x, dtype=np.uint8).ravel()
        z = np.array(z, dtype=np.uint8).ravel()
        if x.shape != z.shape or x.size == 0:
            raise ValueError("x and z must be non-empty and of equal length")
        if np.any(x > 1) or np.any(z > 1):
            raise ValueError("bits must be 0 or 1")
        x.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(phase) % 4)

    def __setattr__(self, name, value):
        raise AttributeError("PauliString is immutable")

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def single(cls, n: int, site: int, letter: str, phase: int = 0) -> PauliString:
        """``letter`` acting on ``site`` of an ``n``-qubit register."""
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        code = _LETTERS.index(letter.upper())
        x[site] = code & 1
        z[site] = code >> 1
        return cls(x, z, phase)

    @classmethod
    def from_letters(cls, letters: dict, n: int, phase: int = 0) -> PauliString:
        """Build from a ``{site: letter}`` mapping."""
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        for site, letter in letters.items():
            code = _LETTERS.index(letter.upper())
            x[site] = code & 1
            z[site] = code >> 1
        return cls(x, z, phase)

    @classmethod
    def parse(cls, text: str) -> PauliString:
        """Inverse of :meth:`__str__`, e.g. ``"-iXIZY"`` or ``"ZZ"``."""
        s = text.strip()
        phase = 0
        if s[:1] in "+-":
            phase = 2 if s[0] == "-" else 0
            s = s[1:]
        if s[:1] == "i":
            phase += 1
            s = s[1:]
        if not s or any(c not in _LETTERS for c in s):
            raise ValueError(f"not a Pauli string: {text!r}")
        codes = np.array([_LETTERS.index(c) for c in s], dtype=np.uint8)
        return cls(codes & 1, codes >> 1, phase)

    @property
    def n_qubits(self) -> int:
        return self.x.size

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if not self.is_hermitian:
            raise ValueError("string has an imaginary phase")
        return 1 if self.phase == 0 else -1

    def letter(self, site: int) -> str:
        return _LETTERS[int(self.x[site]) + 2 * int(self.z[site])]

    def __str__(self) -> str:
        body = "".join(_LETTERS[c] for c in (self.x + 2 * self.z))
        return _PHASE_TEXT[self.phase] + body

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.phase, self.x.tobytes(), self.z.tobytes()))

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __neg__(self) -> PauliString:
        return PauliString(self.x, self.z, self.phase + 2)

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; qubit ``k`` is bit ``k`` of the basis index."""
        mats = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.ones((1, 1), dtype=complex)
        for site in reversed(range(self.n_qubits)):
            out = np.kron(out, mats[self.letter(site)])
        return (1j ** self.phase) * out


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"size mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Group product ``a * b`` with the accumulated phase."""
    _check_sizes(a, b)
    k = a.phase + b.phase + int(phase_exponent(a.x, a.z, b.x, b.z).sum())
    return PauliString(a.x ^ b.x, a.z ^ b.z, k)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_sizes(a, b)
    form = np.sum(a.x & b.z) + np.sum(a.z & b.x)
    return int(form) % 2 == 0


def support(p: PauliString) -> list[int]:
    """Ascending sites on which ``p`` is not the identity."""
    return np.flatnonzero(p.x | p.z).tolist()
