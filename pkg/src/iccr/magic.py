"""Stabilizer Renyi entropies and nullity of product states (in bits)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .product_state import ProductState, SingleQubitState

DEFAULT_ORDERS = (1, 2, 3)


def _sre_from_bloch(bloch: np.ndarray, n: float) -> np.ndarray:
    """Per-qubit SRE for an ``(m, 3)`` array of Bloch vectors."""
    if n <= 0:
        raise ValueError("Renyi order must be positive")
    sq = np.clip(bloch ** 2, 0.0, 1.0)
    if n == 1:
        # limit n -> 1: -sum_P (<P>^2 / 2) log2 <P>^2, with 0 log 0 = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(sq > 0, sq * np.log2(np.where(sq > 0, sq, 1.0)), 0.0)
        return -terms.sum(axis=1) / 2
    total = (1 + np.sum(sq ** n, axis=1)) / 2
    out = np.log2(total) / (1 - n)
    return np.maximum(out, 0.0)


def single_qubit_sre(q: SingleQubitState, n: float) -> float:
    if q.is_stabilizer:
        if n <= 0:
            raise ValueError("Renyi order must be positive")
        return 0.0
    return float(_sre_from_bloch(q.bloch()[None], n)[0])


def sre(state: ProductState, n: float) -> float:
    """Additive SRE: sum of the single-qubit values."""
    values = _sre_from_bloch(state.bloch(), n)
    values[state.classes >= 0] = 0.0
    return float(values.sum())


def nullity(state: ProductState) -> int:
    return state.nullity


@dataclass
class MagicReport:
    sre: dict = field(default_factory=dict)
    nullity: int = 0
    n_qubits: int = 1

    @property
    def densities(self) -> dict:
        out = {f"m{n:g}": v / self.n_qubits for n, v in self.sre.items()}
        out["nullity"] = self.nullity / self.n_qubits
        return out


def magic_report(state: ProductState, orders=DEFAULT_ORDERS) -> MagicReport:
    return MagicReport({n: sre(state, n) for n in orders}, nullity(state), state.n_qubits)
