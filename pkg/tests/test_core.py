import itertools
import math

import numpy as np
import pytest

from iccr import dense
from iccr.core import (
    BORN,
    POSTSELECT,
    STABILIZER_TARGET,
    TRIVIAL_DROP,
    VARIATIONAL_TARGET,
    IterationReport,
    OutcomePolicy,
    ZeroProbabilityError,
    iccr_step,
    optimize_support,
    step_fidelity,
)
from iccr.pauli import PauliString, support
from iccr.product_state import ProductState, SingleQubitState, initial_angle_state
from iccr.tableau import CliffordTableau, GateRecord

from conftest import random_gates, random_qubit

ANGLE = initial_angle_state()


def replay(state, u):
    return dense.apply_gates(dense.from_product(state), u.log)


def measured(true_state, j, s):
    n = true_state.n_qubits
    return dense.project_pauli(true_state, PauliString.from_letters({j: "Z"}, n), s)


def run_step(state, u, j, policy=BORN, rng=None):
    """One step with the dense truth tracked alongside."""
    before = replay(state, u)
    state, u, rep = iccr_step(state, u, j, policy, rng)
    truth, prob = measured(before, j, rep.outcome_s)
    return truth, prob, rep


def test_trivial_drop():
    state = ProductState.uniform(3, SingleQubitState.stabilizer("Z+"))
    u = CliffordTableau.identity(3, keep_log=True)
    _, _, rep = iccr_step(state, u, 0, BORN, np.random.default_rng(0))
    assert rep.branch == TRIVIAL_DROP and rep.outcome_s == 1
    assert rep.step_fidelity == 1.0 and rep.rank_delta == 0
    assert len(u.log) == 0


def test_trivial_drop_negative_and_postselect():
    state = ProductState.uniform(2, SingleQubitState.stabilizer("Z+"))
    u = CliffordTableau.identity(2, keep_log=True).compose([GateRecord("X", (1,))])
    _, _, rep = iccr_step(state, u, 1, BORN, np.random.default_rng(0))
    assert rep.outcome_s == -1
    with pytest.raises(ZeroProbabilityError):
        iccr_step(state, u, 1, POSTSELECT)


def test_postselect_zero_probability_nontrivial():
    # P = X_0 Z_1 on |Y+>|Z-> ... simplification leaves X_0 on Z-eigen? use Z1 fixed: <prod Z> = -1
    state = ProductState([SingleQubitState.stabilizer("X-")])
    u = CliffordTableau.identity(1, keep_log=True).compose([GateRecord("H", (0,))])
    # P = X_0 on |X-> is an eigen-drop with outcome -1
    with pytest.raises(ZeroProbabilityError):
        iccr_step(state, u, 0, POSTSELECT)


def test_invalid_inputs():
    state = ProductState.uniform(2, ANGLE)
    with pytest.raises(ValueError):
        iccr_step(state, CliffordTableau.identity(3), 0, BORN, np.random.default_rng(0))
    with pytest.raises(ValueError):
        iccr_step(state, CliffordTableau.identity(2), 2, BORN, np.random.default_rng(0))
    with pytest.raises(ValueError):
        OutcomePolicy("sometimes")


def test_two_site_variational_is_exact():
    for s in (1, -1):
        state = ProductState.uniform(2, ANGLE)
        u = CliffordTableau.identity(2, keep_log=True).compose([GateRecord("CX", (0, 1))])
        before = replay(state, u)
        rng = np.random.default_rng(3)
        while True:
            trial_state, trial_u = state.copy(), u.copy()
            _, _, rep = iccr_step(trial_state, trial_u, 1, BORN, rng)
            if rep.outcome_s == s:
                break
        assert rep.branch == VARIATIONAL_TARGET and rep.support_size == 2
        assert rep.step_fidelity == pytest.approx(1.0, abs=1e-10)
        # for s = -1 the partner lands exactly on |X+>, so the rank can jump by two
        assert rep.rank_delta >= 1
        truth, _ = measured(before, 1, s)
        assert dense.fidelity(truth, replay(trial_state, trial_u)) == pytest.approx(1.0, abs=1e-10)


def test_stabilizer_target_example():
    state = ProductState([SingleQubitState.stabilizer("X+"), ANGLE])
    u = CliffordTableau.identity(2, keep_log=True).compose([GateRecord("CX", (0, 1))])
    truth, _, rep = run_step(state, u, 1, BORN, np.random.default_rng(5))
    assert (rep.branch, rep.target_site, rep.target_q) == (STABILIZER_TARGET, 0, 0)
    assert rep.step_fidelity == 1.0 and rep.rank_delta == 0
    # the target qubit is left in the Z eigenstate |0>
    assert state[0].classification == "Z+"
    assert dense.fidelity(truth, replay(state, u)) == pytest.approx(1.0, abs=1e-12)


def test_target_tie_break_lowest_site():
    state = ProductState([ANGLE, ANGLE, ANGLE])
    u = CliffordTableau.identity(3, keep_log=True).compose([GateRecord("CX", (0, 2)), GateRecord("CX", (1, 2))])
    _, _, rep = iccr_step(state, u, 2, POSTSELECT)
    assert rep.target_site == 0 and rep.target_q == 0


def test_exact_branch_matches_projected_replacement(rng):
    # single-step check of the exact projected state against the dense helper
    for _ in range(20):
        m = int(rng.integers(1, 5))
        qubits = [SingleQubitState.from_amplitudes(random_qubit(rng)) for _ in range(m)]
        pos = int(rng.integers(m))
        qubits[pos] = SingleQubitState.stabilizer(["X+", "X-", "Y+", "Y-"][rng.integers(4)])
        state = ProductState(qubits)
        psi1 = dense.from_product(state)
        zstring = PauliString.from_letters({i: "Z" for i in range(m)}, m)
        u = CliffordTableau.identity(m, keep_log=True)
        # make the measured string prod Z by a CX fan-in onto the last site
        u.compose([GateRecord("CX", (i, m - 1)) for i in range(m - 1)])
        assert u.z_image(m - 1) == zstring
        _, _, rep = iccr_step(state, u, m - 1, BORN, rng)
        exact = dense.exact_projected_replacement(psi1, range(m), rep.target_site, rep.target_q, rep.outcome_s)
        assert dense.fidelity(exact, dense.from_product(state)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_random_step_against_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    state = ProductState([random_qubit(rng) if rng.random() < 0.6 else
                          SingleQubitState.stabilizer(["Z+", "X-", "Y+"][rng.integers(3)]).amplitudes
                          for _ in range(n)])
    u = CliffordTableau.identity(n, keep_log=True).compose(random_gates(rng, n, 12))
    j = int(rng.integers(n))
    before = replay(state, u)
    z_image = u.z_image(j)
    nullity = state.nullity
    _, _, rep = iccr_step(state, u, j, BORN, rng)
    assert u.is_symplectic()
    truth, prob = measured(before, j, rep.outcome_s)
    assert rep.probability == pytest.approx(prob, abs=1e-10)
    f = dense.fidelity(truth, replay(state, u))
    assert f == pytest.approx(rep.step_fidelity, abs=1e-9)
    if rep.branch != VARIATIONAL_TARGET:
        assert f == pytest.approx(1.0, abs=1e-10)
    assert nullity - state.nullity == rep.rank_delta
    assert (rep.rank_delta >= 1) == (rep.branch == VARIATIONAL_TARGET)
    assert rep.support_size <= len(support(z_image))


def test_born_statistics():
    state = ProductState.uniform(3, ANGLE)
    u = CliffordTableau.identity(3).compose([GateRecord("CX", (0, 2)), GateRecord("CX", (1, 2)),
                                             GateRecord("H", (1,))])
    rng = np.random.default_rng(11)
    trials = 10000
    plus = 0
    for _ in range(trials):
        _, _, rep = iccr_step(state.copy(), u.copy(), 2, BORN, rng)
        plus += rep.outcome_s == 1
    want = (1 + state.expect_pauli(u.z_image(2))) / 2
    sigma = math.sqrt(want * (1 - want) / trials)
    assert abs(plus / trials - want) < 4 * sigma


def test_postselect_equals_certain_born():
    # a deterministic +1 outcome: Born and postselection give identical results
    state = ProductState([ANGLE, SingleQubitState.stabilizer("Z+")])
    u = CliffordTableau.identity(2, keep_log=True).compose([GateRecord("H", (1,)), GateRecord("H", (1,))])
    a_state, a_u = state.copy(), u.copy()
    b_state, b_u = state.copy(), u.copy()
    _, _, ra = iccr_step(a_state, a_u, 1, BORN, np.random.default_rng(0))
    _, _, rb = iccr_step(b_state, b_u, 1, POSTSELECT)
    assert ra == rb
    assert np.array_equal(a_state.amplitudes, b_state.amplitudes) and a_u == b_u


def test_deterministic_replay():
    def stream(seed):
        rng = np.random.default_rng(seed)
        n = 5
        state = ProductState.uniform(n, ANGLE)
        u = CliffordTableau.identity(n)
        out = []
        for _ in range(30):
            u.compose(random_gates(rng, n, 4))
            out.append(iccr_step(state, u, int(rng.integers(n)), BORN, rng)[2].to_json())
        return out

    assert stream(9) == stream(9)


def test_report_json():
    rep = IterationReport(1, -1, 2, VARIATIONAL_TARGET, 0, 3, 0.9, math.log(0.9), 1)
    text = rep.to_json()
    assert '"branch": "VariationalTarget"' in text and '"outcome_s": -1' in text


# optimize_support ------------------------------------------------------------

def _exact_support_state(alphas, star, q, s):
    m = len(alphas)
    psi1 = dense.from_factors(alphas)
    return dense.exact_projected_replacement(psi1, range(m), star, q, s)


def test_optimize_two_sites_exact(rng):
    for _ in range(20):
        alphas = [random_qubit(rng) for _ in range(2)]
        s = int(rng.choice([-1, 1]))
        res = optimize_support(alphas, 0, int(rng.integers(4)), s)
        assert res.fidelity == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_optimize_overlap_matches_dense(rng, m):
    for _ in range(10):
        alphas = [random_qubit(rng) for _ in range(m)]
        star, q, s = int(rng.integers(m)), int(rng.integers(4)), int(rng.choice([-1, 1]))
        res = optimize_support(alphas, star, q, s)
        exact = _exact_support_state(alphas, star, q, s)
        approx = dense.from_factors([b.amplitudes for b in res.betas])
        ov = dense.overlap(approx, exact)
        assert ov == pytest.approx(res.overlap, abs=1e-10)
        assert res.fidelity == pytest.approx(abs(ov) ** 2, abs=1e-10)
        assert res.converged
        assert all(b - a >= -1e-12 for a, b in zip(res.history, res.history[1:]))


def test_optimize_three_sites_against_grid_search(rng):
    # brute force over the two free Bloch spheres, then local polish
    from scipy.optimize import minimize

    def neg_fid(params, alphas, star, q, s, exact):
        factors = []
        k = 0
        for i in range(3):
            if i == star:
                factors.append(np.array([1, 0]))
                continue
            th, ph = params[k], params[k + 1]
            factors.append(np.array([math.cos(th / 2), np.exp(1j * ph) * math.sin(th / 2)]))
            k += 2
        return -dense.fidelity(dense.from_factors(factors), exact)

    for _ in range(3):
        # non-stabilizer qubits near |0>
        alphas = [np.array([1, 0.3 * rng.normal() + 0.3j * rng.normal()]) for _ in range(3)]
        alphas = [a / np.linalg.norm(a) for a in alphas]
        star, q, s = 1, int(rng.integers(4)), int(rng.choice([-1, 1]))
        exact = _exact_support_state(alphas, star, q, s)
        grid = np.linspace(0, 2 * math.pi, 13)
        thetas = np.linspace(0, math.pi, 7)
        best = max(((-neg_fid([a, b, c, d], alphas, star, q, s, exact), (a, b, c, d))
                    for a, b, c, d in itertools.product(thetas, grid, thetas, grid)))
        polished = minimize(neg_fid, best[1], args=(alphas, star, q, s, exact), method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
        grid_f = max(best[0], -polished.fun)
        res = optimize_support(alphas, star, q, s)
        assert res.fidelity == pytest.approx(grid_f, abs=1e-4)
        assert res.fidelity >= grid_f - 1e-8


def test_optimize_fixed_point_x_eigenstates():
    alphas = [np.array([1, 1]) / math.sqrt(2), np.array([1, 1j]) / math.sqrt(2),
              np.array([1, -1]) / math.sqrt(2)]
    res = optimize_support(alphas, 0, 0, 1)
    for a, b in zip(alphas[1:], res.betas[1:]):
        assert abs(np.vdot(a, b.amplitudes)) == pytest.approx(1.0)
    assert res.sweeps <= 2


def test_optimize_rejects_bad_input():
    with pytest.raises(ValueError):
        optimize_support([np.array([1, 0])], 3, 0, 1)
    with pytest.raises(ZeroProbabilityError):
        optimize_support([np.array([1, 0]), np.array([1, 0])], 0, 0, -1)


def test_step_fidelity_convention():
    assert step_fidelity(0.5, 0.25) == pytest.approx(1.0)
    with pytest.raises(ZeroProbabilityError):
        step_fidelity(0.0, 1e-16)


def test_large_support_is_finite(rng):
    alphas = [random_qubit(rng) for _ in range(3000)]
    res = optimize_support(alphas, 17, 0, 1)
    assert 0 < res.fidelity <= 1 and math.isfinite(res.ln_fidelity)
