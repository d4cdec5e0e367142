"""One iteration of Iterative Clifford Circuit Renormalization.

A measurement of ``Z_j`` after the Clifford ``U`` is pulled back onto the
renormalized product state ``|Psi>`` as the Pauli string ``P = U^dag Z_j U``.
The projector is then traded for the Clifford

    V = S^q (prod_{i in S, i != t} CX_{i -> t}) X^{(1-s)/2}

applied right before ``U``, and ``|Psi>`` is replaced by a state whose target
qubit ``t`` sits in ``|0>``.  When ``t`` was a stabilizer qubit the
replacement is exact; otherwise the other support qubits are refit as a
product state by alternating single-site maximization of the overlap.
"""
from __future__ import annotations

import cmath
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .product_state import CANONICAL, ProductState, SingleQubitState
from .tableau import CliffordTableau

log = logging.getLogger(__name__)

ZERO_PROBABILITY = 1e-14

TRIVIAL_DROP = "TrivialDrop"
STABILIZER_TARGET = "StabilizerTarget"
VARIATIONAL_TARGET = "VariationalTarget"

# class code -> q with (|0> + i^q |1>)/sqrt(2) equal to that class (X+, X-, Y+, Y-)
_CLASS_TO_Q = {2: 0, 3: 2, 4: 1, 5: 3}
# [class code + 1, letter x + 2 z] -> 1 (+1 eigenstate), -1 (-1 eigenstate) or 0
_EIGEN = np.zeros((7, 4), np.int8)
for _code, _letter in enumerate((2, 2, 1, 1, 3, 3)):
    _EIGEN[_code + 1, _letter] = 1 - 2 * (_code % 2)


class ZeroProbabilityError(ValueError):
    """A postselected or sampled outcome has (numerically) zero probability."""


@dataclass(frozen=True)
class OutcomePolicy:
    mode: str = "born"

    def __post_init__(self):
        if self.mode not in ("born", "postselect"):
            raise ValueError(f"unknown outcome policy {self.mode!r}")


BORN = OutcomePolicy("born")
POSTSELECT = OutcomePolicy("postselect")


@dataclass(frozen=True)
class VariationalConfig:
    max_sweeps: int = 200
    tol: float = 1e-12


@dataclass
class IterationReport:
    measured_site: int
    outcome_s: int
    support_size: int
    branch: str
    target_site: int | None = None
    target_q: int | None = None
    step_fidelity: float = 1.0
    ln_fidelity: float = 0.0
    rank_delta: int = 0
    probability: float = 1.0
    sweeps: int = 0
    converged: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class VariationalResult:
    betas: list
    overlap: complex
    raw_overlap: complex
    fidelity: float
    ln_fidelity: float
    sweeps: int
    converged: bool
    history: list = field(default_factory=list)


def _log(c: complex) -> complex:
    return cmath.log(c) if c != 0 else complex(-math.inf, 0.0)


def _log_abs_sum(la: complex, lb: complex, s: int) -> float:
    """``ln|e^la + s e^lb|``."""
    if la.real == -math.inf and lb.real == -math.inf:
        return -math.inf
    if la.real >= lb.real:
        return la.real + math.log(abs(1 + s * cmath.exp(lb - la)) or 1e-320)
    return lb.real + math.log(abs(s + cmath.exp(la - lb)) or 1e-320)


def step_fidelity(raw_overlap: complex, norm_sq: float) -> float:
    """``|raw_overlap|**2 / N**2`` where ``N**2`` is the projected norm squared."""
    if norm_sq < ZERO_PROBABILITY:
        raise ZeroProbabilityError("projected state has zero norm")
    return abs(raw_overlap) ** 2 / norm_sq


def optimize_support(alphas, star: int, q_star: int, s: int,
                     config: VariationalConfig = VariationalConfig()) -> VariationalResult:
    """Best product approximation of the renormalized support state.

    ``alphas`` are the support qubits (SingleQubitState or amplitude pairs)
    after rotation to the Z-string frame, ``star`` the position of the target
    inside ``alphas``, ``s`` the effective outcome of ``prod Z``.  Returns the
    new qubits (target set to ``|0>``), the overlap ``<approx|exact>`` and the
    squared overlap ``fidelity``.  ``raw_overlap`` is the same overlap before
    dividing by the projected norm.
    """
    amps = np.array([a.amplitudes if isinstance(a, SingleQubitState) else a for a in alphas],
                    dtype=complex)
    amps /= np.linalg.norm(amps, axis=1)[:, None]
    m = len(amps)
    if not 0 <= star < m:
        raise ValueError("target position outside the support")
    zs = (np.abs(amps[:, 0]) ** 2 - np.abs(amps[:, 1]) ** 2).tolist()
    norm_sq = (1 + s * float(np.prod(zs))) / 2
    if norm_sq < ZERO_PROBABILITY:
        raise ZeroProbabilityError("projected state has zero norm")

    phase = (-1j) ** (q_star % 4)
    a0, a1 = complex(amps[star, 0]), complex(amps[star, 1])
    A = [1 + 0j] * m  # <beta_i|alpha_i>
    B = [complex(z) for z in zs]  # <beta_i|Z|alpha_i>
    A[star] = a0 + phase * a1
    B[star] = a0 - phase * a1
    coeff = [(1 + 0j, 0j)] * m  # beta_i ∝ u alpha_i + v Z alpha_i
    free = [i for i in range(m) if i != star]

    def objective():
        la = sum(_log(a) for a in A)
        lb = sum(_log(b) for b in B)
        return la, lb, _log_abs_sum(la, lb, s)

    la, lb, best = objective()
    history = [best]
    sweeps = 0
    converged = True
    if free:
        converged = False
        for sweeps in range(1, config.max_sweeps + 1):
            for j in free:
                if A[j] != 0 and B[j] != 0:
                    ex_a = la - _log(A[j])
                    ex_b = lb - _log(B[j])
                else:
                    ex_a = sum(_log(A[i]) for i in range(m) if i != j)
                    ex_b = sum(_log(B[i]) for i in range(m) if i != j)
                d = ex_b - ex_a
                if cmath.isnan(d):
                    continue
                if d.real <= 0:
                    u, v = 1 + 0j, s * cmath.exp(d)
                else:
                    u, v = cmath.exp(-d), complex(s)
                z = zs[j]
                nrm = math.sqrt(abs(u) ** 2 + abs(v) ** 2 + 2 * (u.conjugate() * v).real * z)
                A[j] = (u.conjugate() + v.conjugate() * z) / nrm
                B[j] = (u.conjugate() * z + v.conjugate()) / nrm
                coeff[j] = (u / nrm, v / nrm)
                la = ex_a + _log(A[j])
                lb = ex_b + _log(B[j])
            la, lb, value = objective()
            history.append(value)
            gain = value - best
            best = max(best, value)
            if gain < config.tol:
                converged = True
                break
        if not converged:
            log.warning("variational sweep did not converge after %d sweeps", sweeps)

    ln_abs = _log_abs_sum(la, lb, s)
    ln_fid = 2 * ln_abs - math.log(4) - math.log(norm_sq)
    ln_fid = min(ln_fid, 0.0)
    raw = cmath.exp(la) * (1 + s * cmath.exp(lb - la)) / 2 if la.real > -math.inf else s * cmath.exp(lb) / 2
    betas = []
    zmat = np.array([1, -1])
    for i in range(m):
        if i == star:
            betas.append(SingleQubitState.stabilizer("Z+"))
            continue
        u, v = coeff[i]
        vec = u * amps[i] + v * zmat * amps[i]
        betas.append(SingleQubitState.from_amplitudes(vec))
    return VariationalResult(
        betas=betas,
        overlap=raw / math.sqrt(norm_sq),
        raw_overlap=raw,
        fidelity=math.exp(ln_fid),
        ln_fidelity=ln_fid,
        sweeps=sweeps,
        converged=converged,
        history=history,
    )


def iccr_step(state: ProductState, u: CliffordTableau, j: int, policy: OutcomePolicy = BORN,
              rng: np.random.Generator | None = None,
              config: VariationalConfig = VariationalConfig()):
    """Remove a ``Z_j`` measurement that follows ``u``; mutates and returns
    ``(state, u, report)``."""
    n = state.n_qubits
    if u.n_qubits != n:
        raise ValueError("state and tableau sizes differ")
    if not 0 <= j < n:
        raise ValueError(f"site {j} out of range")
    row = n + j
    px, pz, rbit = u.row_bits(row)
    letters = px + 2 * pz
    sites = np.flatnonzero(letters)
    letters = letters[sites]

    # drop letters acting on stabilizer qubits that are eigenstates of them
    eig = _EIGEN[state.classes[sites] + 1, letters]
    eigen_sign = -1 if np.count_nonzero(eig < 0) % 2 else 1
    free = eig == 0
    keep = sites[free]
    keep_letters = letters[free]

    if keep.size == 0:
        outcome = (-1 if rbit else 1) * eigen_sign
        if policy.mode == "postselect" and outcome == -1:
            raise ZeroProbabilityError("postselected outcome is forbidden")
        return state, u, IterationReport(j, outcome, 0, TRIVIAL_DROP)

    # rotate the remaining letters to Z: X -> H, Y -> H S^dag on the state;
    # neither rotation changes the sign of the string
    if (keep_letters != 2).any():
        ys = keep[keep_letters == 3]
        rot = keep[keep_letters != 2]
        state.apply_rotation(ys, "SDG").apply_rotation(rot, "H")
        u.precompose_rotations(ys, "S")
        u.precompose_rotations(rot, "H")
    sign = (-1 if rbit else 1) * eigen_sign

    zexp = state.z_expectations(keep)
    parity = float(np.prod(zexp))
    prob_plus = min(max((1 + sign * parity) / 2, 0.0), 1.0)
    if policy.mode == "postselect":
        if prob_plus < ZERO_PROBABILITY:
            raise ZeroProbabilityError("postselected outcome has zero probability")
        outcome = 1
    else:
        if rng is None:
            raise ValueError("Born sampling needs an rng")
        outcome = 1 if rng.random() < prob_plus else -1
    prob = prob_plus if outcome == 1 else 1 - prob_plus
    if prob < ZERO_PROBABILITY:
        raise ZeroProbabilityError("sampled a zero-probability outcome")
    s_eff = outcome * sign

    stab = keep[state.classes[keep] >= 0]
    if stab.size:
        target = int(stab[0])
        q_star = _CLASS_TO_Q[int(state.classes[target])]
    else:
        ov = state.local_overlaps(keep)
        flat = int(np.argmax(ov))
        target, q_star = int(keep[flat // 4]), flat % 4

    controls = keep[keep != target]
    if q_star == 1:
        u.precompose_rotations([target], "S")
    elif q_star == 2:
        u.precompose_rotations([target], "Z")
    elif q_star == 3:
        u.precompose_rotations([target], "SDG")
    u.precompose_cx_fan_in(controls, target)
    if s_eff == -1:
        u.precompose_rotations([target], "X")

    report = IterationReport(j, outcome, int(keep.size), STABILIZER_TARGET, target, q_star,
                             probability=prob)
    if stab.size:
        state.amplitudes[target] = CANONICAL[0]
        state.classes[target] = 0
        return state, u, report

    rank_before = state.rank
    star = int(np.flatnonzero(keep == target)[0])
    res = optimize_support(state.amplitudes[keep], star, q_star, s_eff, config)
    for i, beta in zip(keep, res.betas):
        state.set_qubit(int(i), beta)
    report.branch = VARIATIONAL_TARGET
    report.step_fidelity = res.fidelity
    report.ln_fidelity = res.ln_fidelity
    report.sweeps = res.sweeps
    report.converged = res.converged
    report.rank_delta = state.rank - rank_before
    return state, u, report
