"""T-gate injection through a postselected gadget with one recycled ancilla.

``T|psi>|0>_A = sqrt(2) (1 + Z_A)/2 CX_{t -> A} |psi>|T>_A``: the ancilla is
appended in the resource state, coupled with a CX, and its ``Z`` measurement
is removed by an ICCR step postselected on ``+1``.  Afterwards the qubit left
in ``|0>`` is swapped to the ancilla slot and decoupled from the tableau with
controlled Paulis, which act trivially because their control is ``|0>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import POSTSELECT, VariationalConfig, iccr_step
from .product_state import CANONICAL, ProductState, SingleQubitState
from .tableau import CliffordTableau, GateRecord

T_STATE = SingleQubitState.from_amplitudes([1, np.exp(1j * math.pi / 4)])

# gates (application order) taking each stabilizer class to |0>
_TO_ZERO = {
    0: (),
    1: ("X",),
    2: ("H",),
    3: ("H", "X"),
    4: ("SDG", "H"),
    5: ("SDG", "H", "X"),
}
_INVERSE = {"H": "H", "X": "X", "S": "SDG", "SDG": "S"}
_CONTROLLED = {(1, 0): "CX", (1, 1): "CY", (0, 1): "CZ"}


class RecycleError(RuntimeError):
    """The ancilla could not be decoupled; indicates an internal logic error."""


@dataclass
class GadgetContext:
    """Bookkeeping for gadget runs on an ``n``-qubit register."""

    n_qubits: int
    resource_state: SingleQubitState = field(default=T_STATE)
    injected: int = 0

    @property
    def ancilla_index(self) -> int:
        return self.n_qubits


def inject_t_gate(state: ProductState, u: CliffordTableau, target: int, rng=None,
                  config: VariationalConfig = VariationalConfig(),
                  context: GadgetContext | None = None):
    """Apply ``T`` on ``target`` after ``u``; returns ``(state, u, report)``.

    ``state`` is updated in place; the returned tableau replaces ``u``.
    """
    n = state.n_qubits
    if u.n_qubits != n:
        raise ValueError("state and tableau sizes differ")
    if not 0 <= target < n:
        raise ValueError(f"site {target} out of range")
    resource = context.resource_state if context else T_STATE
    a = n
    state.append(resource)
    u.add_qubit()
    u.compose([GateRecord("CX", (target, a))])
    state, u, report = iccr_step(state, u, a, POSTSELECT, rng, config)
    state, u = recycle_ancilla(state, u, a, report.target_site)
    if context is not None:
        context.injected += 1
    return state, u, report


def recycle_ancilla(state: ProductState, u: CliffordTableau, a: int, i_star: int | None = None):
    """Decouple qubit ``a`` (or the step target ``i_star``) and drop it."""
    touched = False
    if i_star is not None and i_star != a:
        touched = True
        u.precompose([GateRecord("SWAP", (i_star, a))])
        state.swap(i_star, a)
    n = state.n_qubits

    # clear stabilizer residue from the Z_a image: each extra letter sits on
    # an eigenstate; rotate it to |0> and fold it into Z_a with a CX
    row = n + a
    zx, zz, _ = u.row_bits(row)
    for k in np.flatnonzero(zx | zz):
        k = int(k)
        if k == a:
            continue
        code = int(state.classes[k])
        if code < 0:
            raise RecycleError(f"Z image touches non-stabilizer qubit {k}")
        gates = _TO_ZERO[code]
        state.amplitudes[k] = CANONICAL[0]
        state.classes[k] = 0
        u.precompose([GateRecord(_INVERSE[g], (k,)) for g in reversed(gates)])
        if u.row_bits(row)[0][k]:
            raise RecycleError(f"letter on qubit {k} is not diagonalized by its state")
        u.precompose([GateRecord("CX", (k, a))])
        touched = True

    # controlled Paulis from the ancilla strip the X_a image down to site a
    xs, zs, _ = u.row_bits(a)
    ctrl = [GateRecord(_CONTROLLED[(int(xs[i]), int(zs[i]))], (a, int(i)))
            for i in np.flatnonzero(xs | zs) if i != a]
    if ctrl:
        u.precompose(ctrl)
        touched = True

    zx, zz, zr = u.row_bits(row)
    if zx.any() or zz.sum() != 1 or not zz[a] or zr:
        raise RecycleError("Z image of the ancilla is not +Z_a")
    xx, xz, xr = u.row_bits(a)
    if not xx[a] or (xx | xz).sum() != 1:
        raise RecycleError("X image of the ancilla is not local")
    identity_on_a = xz[a] == 0 and xr == 0
    # an untouched ancilla may hold anything; otherwise it must be |0>
    if state.classes[a] != 0 and (touched or not identity_on_a):
        raise RecycleError("ancilla slot is not |0>")
    u = u.drop_qubit(a)
    state.remove(a)
    return state, u
