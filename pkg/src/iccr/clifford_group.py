"""Enumeration and uniform sampling of the two-qubit Clifford group.

The 11520 elements (modulo global phase) are generated once by breadth-first
search over ``{H_0, H_1, S_0, S_1, CX_01}``; every element is stored with a
shortest gate word and its signed tableau, which doubles as the canonical
identity of the element.
"""
from __future__ import annotations

import functools

import numpy as np

from .tableau import GateRecord, conjugate_columns

GROUP_ORDER = 11520
_GENERATORS = (("H", (0,)), ("H", (1,)), ("S", (0,)), ("S", (1,)), ("CX", (0, 1)))


class TwoQubitCliffordTable:
    """All two-qubit Cliffords: tableaus ``x, z, r`` and gate words."""

    def __init__(self, x, z, r, words):
        self.x = x  # (11520, 4, 2)
        self.z = z
        self.r = r  # (11520, 4)
        self.words = words  # tuples of (kind, local sites), application order
        self.index_of = {self._key(x[i], z[i], r[i]): i for i in range(len(words))}

    @staticmethod
    def _key(x, z, r) -> bytes:
        return x.tobytes() + z.tobytes() + r.tobytes()

    def __len__(self) -> int:
        return len(self.words)

    def lookup(self, x, z, r) -> int:
        """Group index of a two-qubit tableau."""
        return self.index_of[self._key(np.asarray(x, np.uint8), np.asarray(z, np.uint8),
                                       np.asarray(r, np.uint8))]

    def gates_on(self, index: int, a: int, b: int) -> list[GateRecord]:
        """Elementary gates of element ``index`` with local sites mapped to (a, b)."""
        sites = (a, b)
        return [GateRecord(kind, tuple(sites[s] for s in loc)) for kind, loc in self.words[index]]


@functools.lru_cache(maxsize=None)
def two_qubit_cliffords() -> TwoQubitCliffordTable:
    x0 = np.array([[1, 0], [0, 1], [0, 0], [0, 0]], np.uint8)
    z0 = np.array([[0, 0], [0, 0], [1, 0], [0, 1]], np.uint8)
    r0 = np.zeros(4, np.uint8)
    # Pauli-frame signs are reached through S^2 = Z and H S^2 H = X
    seen = {TwoQubitCliffordTable._key(x0, z0, r0): 0}
    xs, zs, rs, words = [x0], [z0], [r0], [()]
    frontier = [0]
    while frontier:
        nxt = []
        for idx in frontier:
            for kind, loc in _GENERATORS:
                x, z, r = xs[idx].copy(), zs[idx].copy(), rs[idx].copy()
                # U -> U g: g acts first on the state
                conjugate_columns(x.T, z.T, r, kind, *loc)
                key = TwoQubitCliffordTable._key(x, z, r)
                if key in seen:
                    continue
                seen[key] = len(words)
                xs.append(x)
                zs.append(z)
                rs.append(r)
                words.append(((kind, loc),) + words[idx])
                nxt.append(len(words) - 1)
        frontier = nxt
    if len(words) != GROUP_ORDER:
        raise AssertionError(f"enumerated {len(words)} two-qubit Cliffords")
    return TwoQubitCliffordTable(np.stack(xs), np.stack(zs), np.stack(rs), words)


def random_two_qubit_clifford(rng: np.random.Generator, sites) -> list[GateRecord]:
    """Uniformly random two-qubit Clifford on ``sites`` as a one-gate list.

    The gate is a ``C2`` record; expand it with
    :meth:`TwoQubitCliffordTable.gates_on` for elementary gates.
    """
    a, b = sites
    if a == b:
        raise ValueError("sites must be distinct")
    index = int(rng.integers(GROUP_ORDER))
    return [GateRecord("C2", (a, b), index)]
