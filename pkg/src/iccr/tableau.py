"""Stabilizer tableaus of Clifford unitaries.

A :class:`CliffordTableau` for ``U`` stores the Heisenberg images
``U^dag X_i U`` (rows ``0..n-1``) and ``U^dag Z_i U`` (rows ``n..2n-1``) as bit
matrices ``x``, ``z`` and a sign bit vector ``r``. Letters follow the
convention of :mod:`iccr.pauli` (``x=z=1`` is the Hermitian ``Y``).

Two ways of growing ``U`` are needed:

* :meth:`CliffordTableau.compose` appends gates that act *after* ``U``
  (``U <- G U``), which is how circuit layers are added.  Only the rows of
  the touched generators change.
* :meth:`CliffordTableau.precompose` inserts gates that act *before* ``U``
  on the state (``U <- U G``).  This is the update used when measurements are
  pushed back onto the initial state, e.g. ``U' = U_1 V``.  Every row is
  conjugated, which only touches the columns of the gate's sites.

Worked example: with ``U = H_0``, ``precompose([S_0])`` gives ``U = H_0 S_0``
(``S`` hits the state first) and ``U^dag Z_0 U = S^dag X_0 S = -Y_0``, while
``compose([S_0])`` gives ``U = S_0 H_0`` and ``U^dag Z_0 U = H Z H = X_0``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString

SINGLE_QUBIT_GATES = ("H", "S", "SDG", "X", "Y", "Z")
TWO_QUBIT_GATES = ("CX", "CY", "CZ", "SWAP", "C2")

# (x1 + 2 z1) * 4 + (x2 + 2 z2) -> exponent of i in the letter product
_PHASE_TABLE = np.zeros(16, dtype=np.int8)
for _c1 in range(4):
    for _c2 in range(4):
        _x1, _z1, _x2, _z2 = _c1 & 1, _c1 >> 1, _c2 & 1, _c2 >> 1
        _PHASE_TABLE[_c1 * 4 + _c2] = (
            _x1 * _z1 * (_z2 - _x2)
            + _x1 * (1 - _z1) * _z2 * (2 * _x2 - 1)
            + (1 - _x1) * _z1 * _x2 * (1 - 2 * _z2)
        )


def _product_phase(x1, z1, x2, z2, axis=-1):
    """Summed exponent of i for row-wise products of letter arrays."""
    code = (x1 + 2 * z1) * 4 + x2 + 2 * z2
    return _PHASE_TABLE[code].sum(axis=axis, dtype=np.int64)


@dataclass(frozen=True)
class GateRecord:
    """One gate of a replay log.

    ``kind`` is one of ``H, S, SDG, X, Y, Z, CX, CY, CZ, SWAP`` or ``C2``, the
    latter being element ``index`` of the enumerated two-qubit Clifford group
    (see :mod:`iccr.clifford_group`). For controlled gates ``sites`` is
    ``(control, target)``.
    """

    kind: str
    sites: tuple
    index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        if self.kind in SINGLE_QUBIT_GATES:
            if len(self.sites) != 1:
                raise ValueError(f"{self.kind} acts on one site")
        elif self.kind in TWO_QUBIT_GATES:
            if len(self.sites) != 2 or self.sites[0] == self.sites[1]:
                raise ValueError(f"{self.kind} needs two distinct sites")
            if self.kind == "C2" and self.index is None:
                raise ValueError("C2 gate needs a group index")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if min(self.sites) < 0:
            raise ValueError("negative site index")

    def __str__(self) -> str:
        tag = f"C2[{self.index}]" if self.kind == "C2" else self.kind
        return f"{tag}({','.join(str(s) for s in self.sites)})"


@dataclass(frozen=True)
class RecycledBlock:
    """Log entry for a unitary whose ancilla was dropped by :meth:`drop_qubit`.

    Replay: append a fresh ``|0>`` qubit playing site ``ancilla``, apply
    ``gates`` and remove the qubit again (it ends in a basis state).
    """

    gates: tuple
    ancilla: int


def conjugate_columns(x, z, r, kind: str, a, b=None) -> None:
    """In place ``R -> G^dag R G`` for every row ``R`` of a column-major tableau.

    ``x[j]`` and ``z[j]`` hold the letters of column (site) ``j`` for all rows
    and ``r`` the row signs.  Entries are either 0/1 bytes or bit-packed
    words; only bitwise operations are used, so both layouts work.  ``a`` may
    be an integer array of distinct sites for single-qubit gates.
    """
    if kind == "H":
        xa = x[a].copy()
        za = z[a]
        r ^= _xor_sites(xa & za)
        x[a] = za
        z[a] = xa
    elif kind == "S":  # S^dag X S = -Y, S^dag Y S = X
        xa = x[a]
        r ^= _xor_sites(xa & ~z[a])
        z[a] ^= xa
    elif kind == "SDG":  # S X S^dag = Y, S Y S^dag = -X
        xa = x[a]
        r ^= _xor_sites(xa & z[a])
        z[a] ^= xa
    elif kind == "X":
        r ^= _xor_sites(z[a])
    elif kind == "Z":
        r ^= _xor_sites(x[a])
    elif kind == "Y":
        r ^= _xor_sites(x[a] ^ z[a])
    elif kind == "CX":
        xc, zc, xt, zt = x[a], z[a], x[b], z[b]
        r ^= xc & zt & ~(xt ^ zc)
        x[b] = xt ^ xc
        z[a] = zc ^ zt
    elif kind == "CZ":
        conjugate_columns(x, z, r, "H", b)
        conjugate_columns(x, z, r, "CX", a, b)
        conjugate_columns(x, z, r, "H", b)
    elif kind == "CY":  # CY = S_t CX S_t^dag
        conjugate_columns(x, z, r, "S", b)
        conjugate_columns(x, z, r, "CX", a, b)
        conjugate_columns(x, z, r, "SDG", b)
    elif kind == "SWAP":
        x[[a, b]] = x[[b, a]]
        z[[a, b]] = z[[b, a]]
    else:
        raise ValueError(f"cannot conjugate by {kind!r}")


def _xor_sites(bits):
    if bits.ndim == 1:
        return bits
    return np.bitwise_xor.reduce(bits, axis=0)


def local_tableau(kind: str, index: int | None = None):
    """``(x, z, r)`` of a one- or two-qubit gate acting on local sites 0(,1)."""
    if kind == "C2":
        from .clifford_group import two_qubit_cliffords

        table = two_qubit_cliffords()
        return table.x[index], table.z[index], table.r[index]
    k = 1 if kind in SINGLE_QUBIT_GATES else 2
    x = np.vstack([np.eye(k, dtype=np.uint8), np.zeros((k, k), np.uint8)])
    z = np.vstack([np.zeros((k, k), np.uint8), np.eye(k, dtype=np.uint8)])
    r = np.zeros(2 * k, np.uint8)
    conjugate_columns(x.T, z.T, r, kind, 0, 1 if k == 2 else None)
    return x, z, r


def _pack(bits: np.ndarray, words: int) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian uint64 words."""
    packed = np.packbits(bits, axis=-1, bitorder="little")
    pad = words * 8 - packed.shape[-1]
    if pad:
        packed = np.concatenate([packed, np.zeros(packed.shape[:-1] + (pad,), np.uint8)], axis=-1)
    return np.ascontiguousarray(packed).view(np.uint64)


def _unpack(words: np.ndarray, count: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), axis=-1, count=count, bitorder="little")


class CliffordTableau:
    """Heisenberg-picture tableau of an ``n``-qubit Clifford unitary.

    Internally each site's column of the ``2n`` generator rows is packed into
    64-bit words, so conjugating by a gate touches ``O(n / 64)`` words per
    site.  The ``x``, ``z`` and ``r`` properties expose unpacked copies.
    """

    def __init__(self, x, z, r, keep_log: bool = False, log=None):
        x = np.asarray(x, dtype=np.uint8)
        z = np.asarray(z, dtype=np.uint8)
        r = np.asarray(r, dtype=np.uint8)
        n = x.shape[1]
        if x.shape != (2 * n, n) or z.shape != x.shape or r.shape != (2 * n,):
            raise ValueError("tableau must be (2n, n)")
        self._n = n
        self._words = (2 * n + 63) // 64
        self._x = _pack(x.T, self._words)
        self._z = _pack(z.T, self._words)
        self._r = _pack(r, self._words)
        self.keep_log = keep_log
        self.log = deque(log or ()) if keep_log else None

    @classmethod
    def _from_packed(cls, n, xp, zp, rp, keep_log=False, log=None) -> CliffordTableau:
        out = cls.__new__(cls)
        out._n = n
        out._words = xp.shape[1]
        out._x, out._z, out._r = xp, zp, rp
        out.keep_log = keep_log
        out.log = deque(log or ()) if keep_log else None
        return out

    @classmethod
    def identity(cls, n: int, keep_log: bool = False) -> CliffordTableau:
        if n < 1:
            raise ValueError("need at least one qubit")
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), np.uint8)
        return cls(np.vstack([eye, zero]), np.vstack([zero, eye]),
                   np.zeros(2 * n, np.uint8), keep_log=keep_log)

    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def x(self) -> np.ndarray:
        """``(2n, n)`` X bits (copy)."""
        return np.ascontiguousarray(_unpack(self._x, 2 * self._n).T)

    @property
    def z(self) -> np.ndarray:
        return np.ascontiguousarray(_unpack(self._z, 2 * self._n).T)

    @property
    def r(self) -> np.ndarray:
        return _unpack(self._r, 2 * self._n)

    def _set_dense(self, x, z, r) -> None:
        n = x.shape[1]
        self._n = n
        self._words = (2 * n + 63) // 64
        self._x = _pack(x.T, self._words)
        self._z = _pack(z.T, self._words)
        self._r = _pack(r, self._words)

    def row_bits(self, k: int):
        """``(x, z, sign_bit)`` of generator row ``k`` as 0/1 arrays."""
        w, s = divmod(k, 64)
        shift = np.uint64(s)
        one = np.uint64(1)
        xs = ((self._x[:, w] >> shift) & one).astype(np.uint8)
        zs = ((self._z[:, w] >> shift) & one).astype(np.uint8)
        return xs, zs, int((self._r[w] >> shift) & one)

    def rows_bits(self, rows):
        """Stacked :meth:`row_bits` for many rows: ``(R, n)``, ``(R, n)``, ``(R,)``."""
        rows = np.asarray(rows, dtype=np.int64)
        w = rows // 64
        shift = (rows % 64).astype(np.uint64)
        one = np.uint64(1)
        xs = ((self._x[:, w] >> shift) & one).astype(np.uint8).T
        zs = ((self._z[:, w] >> shift) & one).astype(np.uint8).T
        rs = ((self._r[w] >> shift) & one).astype(np.uint8)
        return xs, zs, rs

    def _set_rows(self, rows, xs, zs, rs) -> None:
        rows = np.asarray(rows, dtype=np.int64)
        order = np.argsort(rows, kind="stable")
        rows = rows[order]
        w = rows // 64
        shift = (rows % 64).astype(np.uint64)
        words, starts = np.unique(w, return_index=True)
        mask = ~np.bitwise_or.reduceat(np.uint64(1) << shift, starts)

        def fold(bits):
            # bits: (R, n) -> per touched word (n, len(words))
            shifted = bits[order].T.astype(np.uint64) << shift
            return np.bitwise_or.reduceat(shifted, starts, axis=1)

        self._x[:, words] = (self._x[:, words] & mask) | fold(xs)
        self._z[:, words] = (self._z[:, words] & mask) | fold(zs)
        rbits = np.asarray(rs)[order].astype(np.uint64) << shift
        self._r[words] = (self._r[words] & mask) | np.bitwise_or.reduceat(rbits, starts)

    def copy(self) -> CliffordTableau:
        return CliffordTableau._from_packed(self._n, self._x.copy(), self._z.copy(), self._r.copy(),
                                            keep_log=self.keep_log, log=self.log)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CliffordTableau):
            return NotImplemented
        return (self._n == other._n and np.array_equal(self._x, other._x)
                and np.array_equal(self._z, other._z) and np.array_equal(self.r, other.r))

    def row(self, k: int) -> PauliString:
        xs, zs, rb = self.row_bits(k)
        return PauliString(xs, zs, 2 * rb)

    def x_image(self, i: int) -> PauliString:
        """``U^dag X_i U``."""
        return self.row(i)

    def z_image(self, i: int) -> PauliString:
        """``U^dag Z_i U``."""
        return self.row(self.n_qubits + i)

    @property
    def x_images(self) -> list[PauliString]:
        return [self.x_image(i) for i in range(self.n_qubits)]

    @property
    def z_images(self) -> list[PauliString]:
        return [self.z_image(i) for i in range(self.n_qubits)]

    def dump(self) -> str:
        """One line per generator image, X images first."""
        n = self.n_qubits
        lines = [f"X{i} -> {self.row(i)}" for i in range(n)]
        lines += [f"Z{i} -> {self.row(n + i)}" for i in range(n)]
        return "\n".join(lines)

    def is_symplectic(self) -> bool:
        n = self.n_qubits
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        form = (x @ z.T + z @ x.T) % 2
        expected = np.zeros((2 * n, 2 * n), np.int64)
        expected[:n, n:] = np.eye(n, dtype=np.int64)
        expected[n:, :n] = np.eye(n, dtype=np.int64)
        return bool(np.array_equal(form, expected))

    def _check_gate(self, g: GateRecord) -> None:
        if max(g.sites) >= self.n_qubits:
            raise ValueError(f"gate {g} out of range for {self.n_qubits} qubits")

    def conjugate_adjoint(self, p: PauliString) -> PauliString:
        """``U^dag p U`` for a Hermitian string ``p``."""
        n = self.n_qubits
        if p.n_qubits != n:
            raise ValueError(f"size mismatch: {p.n_qubits} vs {n}")
        if not p.is_hermitian:
            raise ValueError("conjugate_adjoint expects a Hermitian string")
        sites = np.flatnonzero(p.x | p.z)
        rows = []
        k = p.phase
        for i in sites:
            if p.x[i]:
                rows.append(i)
            if p.z[i]:
                rows.append(n + i)
            if p.x[i] and p.z[i]:
                k += 1  # Y = i X Z
        acc_x = np.zeros(n, np.uint8)
        acc_z = np.zeros(n, np.uint8)
        if rows:
            rx, rz, rr = self.rows_bits(rows)
            for j in range(len(rows)):
                k += 2 * int(rr[j]) + int(_product_phase(acc_x, acc_z, rx[j], rz[j]))
                acc_x ^= rx[j]
                acc_z ^= rz[j]
        return PauliString(acc_x, acc_z, k)

    def compose(self, gates: Iterable[GateRecord]) -> CliffordTableau:
        """Append ``gates`` (in application order) acting after ``U``; in place."""
        for g in gates:
            self._check_gate(g)
            lx, lz, lr = local_tableau(g.kind, g.index)
            self._left_multiply(np.array([g.sites]), lx[None], lz[None], lr[None])
            if self.log is not None:
                self.log.append(g)
        return self

    def compose_layer(self, gates: Sequence[GateRecord]) -> CliffordTableau:
        """Like :meth:`compose` for gates on pairwise disjoint sites, batched."""
        if not gates:
            return self
        arity = {len(g.sites) for g in gates}
        if len(arity) != 1:
            return self.compose(gates)
        sites = np.array([g.sites for g in gates])
        if np.unique(sites).size != sites.size:
            raise ValueError("layer gates must act on disjoint sites")
        if sites.max() >= self.n_qubits:
            raise ValueError("gate out of range")
        locs = [local_tableau(g.kind, g.index) for g in gates]
        lx = np.stack([l[0] for l in locs])
        lz = np.stack([l[1] for l in locs])
        lr = np.stack([l[2] for l in locs])
        self._left_multiply(sites, lx, lz, lr)
        if self.log is not None:
            self.log.extend(gates)
        return self

    def _left_multiply(self, sites, lx, lz, lr) -> None:
        # sites: (G, k); local tableaus lx/lz: (G, 2k, k), lr: (G, 2k)
        n = self.n_qubits
        G, k = sites.shape
        gen_rows = np.concatenate([sites, sites + n], axis=1)  # (G, 2k)
        dense = n > 128 and gen_rows.size > 128
        if dense:
            x, z, r = self.x, self.z, self.r
            ox, oz, orr = x[gen_rows], z[gen_rows], r[gen_rows]
        else:
            fx, fz, fr = self.rows_bits(gen_rows.ravel())
            ox = fx.reshape(G, 2 * k, n)
            oz = fz.reshape(G, 2 * k, n)
            orr = fr.reshape(G, 2 * k)
        osign = 2 * orr.astype(np.int64)
        new_x = np.empty_like(ox)
        new_z = np.empty_like(oz)
        new_r = np.empty((G, 2 * k), np.uint8)
        for j in range(2 * k):
            acc_x = np.zeros((G, n), np.uint8)
            acc_z = np.zeros((G, n), np.uint8)
            # letters of the local image; each Y contributes Y = i X Z
            phase = 2 * lr[:, j].astype(np.int64) + (lx[:, j] & lz[:, j]).sum(axis=1)
            for m in range(k):
                for f, coeff in ((m, lx[:, j, m]), (k + m, lz[:, j, m])):
                    mask = coeff.astype(bool)
                    if not mask.any():
                        continue
                    fx = ox[:, f] * coeff[:, None]
                    fz = oz[:, f] * coeff[:, None]
                    phase += osign[:, f] * coeff + _product_phase(acc_x, acc_z, fx, fz)
                    acc_x ^= fx
                    acc_z ^= fz
            phase %= 4
            if np.any(phase % 2):
                raise AssertionError("non-Hermitian image, tableau corrupted")
            new_x[:, j] = acc_x
            new_z[:, j] = acc_z
            new_r[:, j] = phase // 2
        if dense:
            x[gen_rows] = new_x
            z[gen_rows] = new_z
            r[gen_rows] = new_r
            self._set_dense(x, z, r)
        else:
            self._set_rows(gen_rows.ravel(), new_x.reshape(-1, n), new_z.reshape(-1, n), new_r.ravel())

    def precompose(self, gates: Sequence[GateRecord]) -> CliffordTableau:
        """Insert ``gates`` (in application order) before ``U``; in place.

        The result is ``U g_k ... g_1`` for ``gates = [g_1, ..., g_k]``.
        """
        gates = list(gates)
        for g in reversed(gates):
            self._check_gate(g)
            self._right_multiply(g)
        if self.log is not None:
            self.log.extendleft(reversed(gates))
        return self

    def _right_multiply(self, g: GateRecord) -> None:
        if g.kind == "C2":
            from .clifford_group import two_qubit_cliffords

            a, b = g.sites
            for h in reversed(two_qubit_cliffords().gates_on(g.index, a, b)):
                self._right_multiply(h)
            return
        conjugate_columns(self._x, self._z, self._r, g.kind, *g.sites)

    def precompose_rotations(self, sites, kind: str) -> None:
        """Right-multiply by the same single-qubit gate on many distinct sites."""
        sites = np.asarray(sites, dtype=np.intp)
        if sites.size == 0:
            return
        conjugate_columns(self._x, self._z, self._r, kind, sites)
        if self.log is not None:
            self.log.extendleft(GateRecord(kind, (int(s),)) for s in sites[::-1])

    def precompose_cx_fan_in(self, controls, target: int) -> None:
        """Right-multiply by ``prod_c CX_{c -> target}`` (the CX gates commute)."""
        controls = np.asarray(controls, dtype=np.intp)
        if controls.size == 0:
            return
        x, z = self._x, self._z
        xc = x[controls]  # (m, words)
        zc = z[controls]
        xt = x[target].copy()
        zt = z[target]
        # running x_t before each CX in the product
        cum = np.bitwise_xor.accumulate(xc, axis=0)
        before = np.empty_like(xc)
        before[0] = xt
        before[1:] = xt[None, :] ^ cum[:-1]
        self._r ^= np.bitwise_xor.reduce(xc & zt[None, :] & ~(before ^ zc), axis=0)
        x[target] = xt ^ cum[-1]
        z[controls] = zc ^ zt[None, :]
        if self.log is not None:
            self.log.extendleft(GateRecord("CX", (int(c), target)) for c in controls[::-1])

    def add_qubit(self) -> CliffordTableau:
        """Tensor an identity qubit at index ``n``; in place."""
        n = self.n_qubits
        ox, oz, orr = self.x, self.z, self.r
        x = np.zeros((2 * n + 2, n + 1), np.uint8)
        z = np.zeros_like(x)
        r = np.zeros(2 * n + 2, np.uint8)
        x[:n, :n] = ox[:n]
        z[:n, :n] = oz[:n]
        r[:n] = orr[:n]
        x[n + 1:2 * n + 1, :n] = ox[n:]
        z[n + 1:2 * n + 1, :n] = oz[n:]
        r[n + 1:2 * n + 1] = orr[n:]
        x[n, n] = 1
        z[2 * n + 1, n] = 1
        self._set_dense(x, z, r)
        return self

    def drop_qubit(self, a: int) -> CliffordTableau:
        """Remove a qubit that ``U`` leaves unentangled; returns a new tableau.

        Requires ``U^dag Z_a U = +-Z_a`` and ``U^dag X_a U`` supported on ``a``
        only.
        """
        n = self.n_qubits
        if n < 2:
            raise ValueError("cannot drop the last qubit")
        others = np.arange(n) != a
        fx, fz, fr = self.x, self.z, self.r
        zx, zz = fx[n + a], fz[n + a]
        xx, xz = fx[a], fz[a]
        if (zx[a] or not zz[a] or zx[others].any() or zz[others].any()
                or xx[others].any() or xz[others].any() or not xx[a]):
            raise ValueError("ancilla entangled")
        keep_rows = np.concatenate([np.flatnonzero(others), n + np.flatnonzero(others)])
        sub_x = fx[np.ix_(keep_rows, others)]
        sub_z = fz[np.ix_(keep_rows, others)]
        if fx[keep_rows, a].any() or fz[keep_rows, a].any():
            raise ValueError("ancilla entangled")
        out = CliffordTableau(sub_x, sub_z, fr[keep_rows])
        if self.log is not None and a == n - 1:
            out.keep_log = True
            out.log = deque([RecycledBlock(tuple(self.log), a)])
        return out


def identity(n: int, keep_log: bool = False) -> CliffordTableau:
    return CliffordTableau.identity(n, keep_log=keep_log)


def conjugate_adjoint(u: CliffordTableau, p: PauliString) -> PauliString:
    return u.conjugate_adjoint(p)


def compose(u: CliffordTableau, gates: Iterable[GateRecord]) -> CliffordTableau:
    """Copy of ``u`` followed by ``gates``."""
    return u.copy().compose(gates)


def drop_qubit(u: CliffordTableau, a: int) -> CliffordTableau:
    return u.drop_qubit(a)
