"""Dense statevector cross-checks of the ICCR pipeline on small registers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dense
from .core import POSTSELECT, VARIATIONAL_TARGET, iccr_step
from .experiment import ExperimentConfig, Trajectory, run_experiment
from .gadget import T_STATE, recycle_ancilla
from .magic import single_qubit_sre, sre
from .pauli import PauliString
from .product_state import ProductState, SingleQubitState, initial_angle_state
from .tableau import CliffordTableau, GateRecord


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class CoSimulation:
    fidelity: float  # |<dense truth|replayed ICCR state>|^2
    product_f: float  # prod of reported step fidelities
    step_errors: list  # |f_n(reported) - f_n(dense)| per step
    branches: list  # (branch, support size) per step

    @property
    def exact_only(self) -> bool:
        return all(b != VARIATIONAL_TARGET or s <= 2 for b, s in self.branches)

    @property
    def has_large_variational(self) -> bool:
        return any(b == VARIATIONAL_TARGET and s >= 3 for b, s in self.branches)


def replay(state: ProductState, u: CliffordTableau) -> dense.DenseState:
    """Dense ``U |Psi>`` from the gate log of ``u``."""
    if u.log is None:
        raise ValueError("tableau was built without a gate log")
    return dense.apply_gates(dense.from_product(state), u.log)


def unitary_from_tableau(u: CliffordTableau) -> np.ndarray:
    """Dense matrix of ``U`` (up to a global phase) read off its tableau.

    The rows are the Schroedinger images of ``V = U^dag``: ``V X_i V^dag`` and
    ``V Z_i V^dag``.  ``V|0>`` is the joint +1 eigenvector of the Z images and
    ``V|b> = prod_i (V X_i V^dag)^{b_i} V|0>``.
    """
    n = u.n_qubits
    if n > dense.MAX_QUBITS:
        raise ValueError("register too large for a dense unitary")
    rng = np.random.default_rng(12345)
    v0 = dense.DenseState(rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n), n)
    for i in range(n):
        v0, _ = dense.project_pauli(v0, u.z_image(i), 1)
    cols = [v0.amplitudes]
    for k in range(n):
        xk = u.x_image(k)
        cols += [dense.apply_pauli(dense.DenseState(c, n), xk).amplitudes for c in cols]
    return np.array(cols).T  # column b is V|b>


def materialize(state: ProductState, u: CliffordTableau) -> dense.DenseState:
    """Dense ``U |Psi>`` without a gate log."""
    m = unitary_from_tableau(u)
    return dense.DenseState(m.conj().T @ dense.from_product(state).amplitudes, u.n_qubits)


def cosimulate(cfg: ExperimentConfig, index: int = 0, step_checks: bool = True) -> CoSimulation:
    """Run one trajectory with the exact state tracked alongside.

    The dense truth follows the sampled outcomes.  With ``step_checks`` each
    reported step fidelity is recomputed densely from the trajectory's own
    state just before that step.  Without T gates the final ICCR state is
    rebuilt by replaying the gate log; with them, from the tableau itself.
    """
    if cfg.n_qubits > dense.MAX_QUBITS - 1:
        raise ValueError("register too large for dense co-simulation")
    use_log = cfg.t_gate_rate == 0
    traj = Trajectory(cfg, index, keep_log=use_log)
    n = cfg.n_qubits
    truth = dense.from_product(traj.state)
    t_gate = dense.GATE_MATRICES["T"]
    pending = []

    def snapshot(tr, kind, site):
        pending.append(materialize(tr.state, tr.u))

    step_errors, branches = [], []
    for _ in range(cfg.depth):
        pending.clear()
        gates, events = traj.advance(before_event=snapshot if step_checks else None)
        if truth is not None:
            truth = dense.apply_gates(truth, gates)
        for k, (kind, j, rep) in enumerate(events):
            branches.append((rep.branch, rep.support_size))
            if kind == "measure":
                z = PauliString.from_letters({j: "Z"}, n)
                if truth is not None:
                    try:
                        truth, _ = dense.project_pauli(truth, z, rep.outcome_s)
                    except ValueError:
                        # outcome sampled from the approximation is forbidden
                        # for the exact state: zero overlap from here on
                        truth = None
            elif truth is not None:
                truth = dense.apply_matrix(truth, t_gate, [j])
            if not step_checks:
                continue
            before = pending[k]
            after = pending[k + 1] if k + 1 < len(events) else materialize(traj.state, traj.u)
            if kind == "measure":
                exact, _ = dense.project_pauli(before, z, rep.outcome_s)
            else:
                exact = dense.apply_matrix(before, t_gate, [j])
            step_errors.append(abs(dense.fidelity(exact, after) - rep.step_fidelity))
    final = replay(traj.state, traj.u) if use_log else materialize(traj.state, traj.u)
    fid = 0.0 if truth is None else dense.fidelity(truth, final)
    return CoSimulation(fid, math.exp(traj.ln_fidelity), step_errors, branches)


def _random_circuit_configs(seed: int, max_n: int, max_depth: int = 10, rates=(0.2, 0.5, 1.0),
                            t_gate_rate: float = 0.0):
    """Endless stream of small seeded circuit configurations."""
    rng = np.random.default_rng(seed)
    k = 0
    while True:
        yield ExperimentConfig(
            n_qubits=int(rng.integers(2, max_n + 1)),
            depth=int(rng.integers(1, max_depth + 1)),
            meas_rate=float(rates[k % len(rates)]),
            seed=int(rng.integers(2 ** 32)),
            initial_angle=float(rng.uniform(0, math.pi)),
            t_gate_rate=t_gate_rate,
        )
        k += 1


def check_exact_branches(max_n: int = 6, count: int = 500, tol: float = 1e-8, seed: int = 1) -> CheckResult:
    """Circuits whose steps are all exact must reproduce the dense run."""
    worst, tried, kept = 0.0, 0, 0
    for cfg in _random_circuit_configs(seed, max_n):
        tried += 1
        if tried > 50 * count:
            break
        sim = cosimulate(cfg, step_checks=False)
        if not sim.exact_only:
            continue
        kept += 1
        worst = max(worst, 1 - sim.fidelity)
        if kept == count:
            break
    ok = kept == count and worst < tol
    return CheckResult("exact-branch oracle equivalence", ok,
                       f"{kept} circuits (of {tried} drawn), worst 1-F = {worst:.2e} (tol {tol:g})")


def _variational_sims(max_n: int, count: int, seed: int):
    sims, tried = [], 0
    for cfg in _random_circuit_configs(seed, max_n, rates=(0.2, 0.3, 0.5)):
        tried += 1
        if tried > 50 * count:
            break
        sim = cosimulate(cfg, step_checks=True)
        if sim.has_large_variational:
            sims.append(sim)
            if len(sims) == count:
                break
    return sims, tried


def check_fidelity_bookkeeping(max_n: int = 6, count: int = 200, tol: float = 1e-6,
                               seed: int = 2) -> list[CheckResult]:
    """Global fidelity against the product of step fidelities, plus each step alone.

    The global comparison is not an identity: a later projection can undo part
    of an earlier approximation error, so the two drift apart.  The per-step
    comparison is exact and is reported separately.
    """
    sims, tried = _variational_sims(max_n, count, seed)
    gap = max((abs(s.fidelity - s.product_f) for s in sims), default=math.inf)
    step = max((max(s.step_errors) for s in sims if s.step_errors), default=math.inf)
    n_steps = sum(len(s.step_errors) for s in sims)
    full = len(sims) == count
    return [
        CheckResult("global fidelity = product of step fidelities", full and gap < tol,
                    f"{len(sims)} circuits with |S|>=3 fits (of {tried}), worst gap {gap:.2e} (tol {tol:g})"),
        CheckResult("step fidelities match dense projections", full and step < tol,
                    f"{n_steps} steps, worst error {step:.2e} (tol {tol:g})"),
    ]


def _random_clifford(rng, n: int, count: int) -> list[GateRecord]:
    from .clifford_group import GROUP_ORDER

    gates = []
    for _ in range(count):
        if n == 1:
            gates.append(GateRecord(("H", "S", "X")[rng.integers(3)], (0,)))
            continue
        a, b = rng.choice(n, 2, replace=False)
        gates.append(GateRecord("C2", (int(a), int(b)), int(rng.integers(GROUP_ORDER))))
    return gates


def _random_qubit(rng) -> SingleQubitState:
    return SingleQubitState.from_amplitudes(rng.normal(size=2) + 1j * rng.normal(size=2))


def check_gadget(max_n: int = 4, count: int = 100, seed: int = 3) -> list[CheckResult]:
    """T-gadget circuit identity, then ancilla recycling against the full register."""
    rng = np.random.default_rng(seed)
    t_gate = dense.GATE_MATRICES["T"]
    worst = 0.0
    for k in range(count):
        n = 1 + k % max_n
        v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
        d = dense.DenseState(v / np.linalg.norm(v), n)
        t = int(rng.integers(n))
        lhs = dense.apply_matrix(d, t_gate, [t]).amplitudes
        big = dense.DenseState(np.kron(np.array(T_STATE.amplitudes), d.amplitudes), n + 1)
        big = dense.apply_gates(big, [GateRecord("CX", (t, n))])
        z_a = PauliString.from_letters({n: "Z"}, n + 1)
        proj = 0.5 * (big.amplitudes + dense.apply_pauli(big, z_a).amplitudes)
        rhs = math.sqrt(2) * proj.reshape(2, -1)
        worst = max(worst, np.linalg.norm(rhs[0] - lhs), np.linalg.norm(rhs[1]))
    identity = CheckResult("T-gadget circuit identity", worst < 1e-12,
                           f"{count} random states, N<={max_n}, worst error {worst:.2e}")

    worst_f = 0.0
    for k in range(count):
        n = 1 + k % max_n
        state = ProductState([_random_qubit(rng) if rng.random() < 0.6 else
                              SingleQubitState.stabilizer(("Z+", "X-", "Y+")[rng.integers(3)])
                              for _ in range(n)])
        u = CliffordTableau.identity(n).compose(_random_clifford(rng, n, 3 * n))
        t = int(rng.integers(n))
        state.append(T_STATE)
        u.add_qubit()
        u.compose([GateRecord("CX", (t, n))])
        state, u, rep = iccr_step(state, u, n, POSTSELECT)
        full = materialize(state, u).amplitudes.reshape(2, -1)
        reduced = dense.DenseState(full[0] / np.linalg.norm(full[0]), n)
        state, u = recycle_ancilla(state, u, n, rep.target_site)
        worst_f = max(worst_f, 1 - dense.fidelity(reduced, materialize(state, u)),
                      float(np.linalg.norm(full[1])))
    recycling = CheckResult("recycled ancilla matches full register", worst_f < 1e-10,
                            f"{count} random circuits, worst 1-F {worst_f:.2e}")
    return [identity, recycling]


def check_sre(max_n: int = 6, count: int = 100, seed: int = 4, tol: float = 1e-9) -> list[CheckResult]:
    """Product-state SRE formula against Pauli enumeration, and closed forms."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(count):
        n = 1 + k % max_n
        state = ProductState([_random_qubit(rng) for _ in range(n)])
        d = dense.from_product(state)
        for order in (1, 2, 3):
            worst = max(worst, abs(sre(state, order) - dense.exact_sre(d, order)))
    enum = CheckResult("SRE against exact enumeration", worst < tol,
                       f"{count} product states, N<={max_n}, orders 1-3, worst {worst:.2e}")
    t_m2 = single_qubit_sre(T_STATE, 2)
    t_ok = abs(t_m2 - math.log2(4 / 3)) < tol
    angle = initial_angle_state(math.pi / 7)
    angle_m2 = single_qubit_sre(angle, 2)
    enumerated = dense.exact_sre(dense.from_factors([angle.amplitudes]), 2)
    quoted = 0.391346
    closed = [
        CheckResult("m2 of |T>", t_ok, f"{t_m2:.9f} vs log2(4/3) = {math.log2(4 / 3):.9f}"),
        CheckResult("m2 of the initial angle state, quoted value", abs(angle_m2 - quoted) < tol,
                    f"{angle_m2:.9f} vs quoted {quoted} (enumeration: {enumerated:.9f})"),
    ]
    return [enum] + closed


def check_determinism(seed: int = 11) -> CheckResult:
    """Same seed, one or two workers, two consecutive runs: identical CSV bytes."""
    cfg = ExperimentConfig(n_qubits=12, depth=12, meas_rate=0.2, n_trajectories=4, seed=seed)
    outputs = [run_experiment(cfg, workers=w).to_csv().encode() for w in (1, 2, 1, 2)]
    same = all(o == outputs[0] for o in outputs)
    return CheckResult("byte-identical output across runs and workers", same,
                       f"{len(outputs)} runs, {len(outputs[0])} bytes")


def run_validation(max_n: int = 6, quick: bool = False) -> list[CheckResult]:
    """All dense-oracle checks; ``quick`` shrinks the sample counts."""
    if max_n < 2:
        raise ValueError("max_n must be at least 2")
    scale = 10 if quick else 1
    results = [check_exact_branches(max_n, 500 // scale)]
    results += check_fidelity_bookkeeping(max_n, 200 // scale)
    results += check_gadget(min(max_n, 4), 100 // scale)
    results += check_sre(min(max_n, dense.MAX_SRE_QUBITS), 100 // scale)
    results.append(check_determinism())
    return results
