"""State-vector core: conventions, gate application, measurement.

The gate-application oracle here builds the full 2^n x 2^n operator with a
kron product plus an explicit basis-relabeling permutation, sharing no code
with apply_gate's tensor contraction.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catnet import qstate
from catnet.errors import ImpossibleBranchError
from catnet.gates import CNOT, H, SWAP, TOFFOLI, X, Z, make_rk
from catnet.qstate import (
    ATOL,
    GateMatrix,
    StateVector,
    apply_gate,
    basis_state,
    fidelity_up_to_global_phase,
    from_amplitudes,
    measure,
    partial_state_check,
    random_state,
    reduced_density_matrix,
)

SQRT2_INV = 1 / np.sqrt(2)


def embed_oracle(matrix: np.ndarray, n: int, targets: list[int]) -> np.ndarray:
    """Full-space operator via kron + basis relabeling (independent route)."""
    rest = [q for q in range(n) if q not in targets]
    big = np.kron(matrix, np.eye(2 ** len(rest), dtype=complex))
    perm = np.zeros((2**n, 2**n))
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        new = 0
        for q in list(targets) + rest:
            new = (new << 1) | bits[q]
        perm[new, idx] = 1
    return perm.T @ big @ perm


# ---- conventions -------------------------------------------------------


def test_qubit_zero_is_most_significant():
    """X on qubit 0 of |00> must set basis index 0b10, not 0b01."""
    state = apply_gate(basis_state(2, 0), X, [0])
    assert np.allclose(state.amplitudes, [0, 0, 1, 0])
    state = apply_gate(basis_state(2, 0), X, [1])
    assert np.allclose(state.amplitudes, [0, 1, 0, 0])


def test_basis_state_bounds():
    assert np.allclose(basis_state(3, 5).amplitudes[5], 1.0)
    with pytest.raises(ValueError):
        basis_state(2, 4)


def test_from_amplitudes_normalizes():
    s = from_amplitudes([3, 0, 0, 4])
    assert np.allclose(s.amplitudes, [0.6, 0, 0, 0.8])
    with pytest.raises(ValueError):
        from_amplitudes([1, 2, 3])  # not a power of two
    with pytest.raises(ValueError):
        from_amplitudes([0, 0])


def test_statevector_shape_checked():
    with pytest.raises(ValueError):
        StateVector(2, np.ones(3))


def test_cnot_target_order():
    # first listed target is the control (most significant gate wire)
    s = apply_gate(basis_state(2, 0b10), CNOT, [0, 1])
    assert np.allclose(s.amplitudes, basis_state(2, 0b11).amplitudes)
    s = apply_gate(basis_state(2, 0b10), CNOT, [1, 0])
    assert np.allclose(s.amplitudes, basis_state(2, 0b10).amplitudes)
    s = apply_gate(basis_state(2, 0b01), CNOT, [1, 0])
    assert np.allclose(s.amplitudes, basis_state(2, 0b11).amplitudes)


def test_bell_pair_construction():
    s = apply_gate(basis_state(2, 0), H, [0])
    s = apply_gate(s, CNOT, [0, 1])
    assert np.allclose(s.amplitudes, [SQRT2_INV, 0, 0, SQRT2_INV])


# ---- GateMatrix validation -------------------------------------------------


def test_gate_matrix_rejects_non_unitary():
    with pytest.raises(ValueError):
        GateMatrix(np.array([[1, 0], [0, 2]], dtype=complex))
    with pytest.raises(ValueError):
        GateMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        GateMatrix(np.eye(3))  # not a power-of-two dimension


def test_gate_kind_classification():
    assert X.kind == "permutation"
    assert CNOT.kind == "permutation"
    assert Z.kind == "diagonal"
    assert make_rk(3).kind == "diagonal"
    assert H.kind == "general"


def test_apply_gate_bad_targets():
    s = basis_state(3)
    with pytest.raises(ValueError):
        apply_gate(s, CNOT, [0])  # arity mismatch
    with pytest.raises(ValueError):
        apply_gate(s, CNOT, [0, 0])  # duplicate
    with pytest.raises(ValueError):
        apply_gate(s, X, [3])  # out of range


# ---- gate application vs the kron oracle ----------------------------------


@pytest.mark.parametrize("gate,targets,n", [
    (X, [1], 3),
    (H, [2], 3),
    (Z, [0], 2),
    (CNOT, [2, 0], 3),
    (CNOT, [0, 2], 4),
    (SWAP, [3, 1], 4),
    (TOFFOLI, [0, 2, 1], 3),
    (TOFFOLI, [4, 1, 2], 5),
    (make_rk(2), [1], 2),
])
def test_apply_matches_kron_oracle(gate, targets, n):
    rng = np.random.default_rng(17)
    state = random_state(n, rng)
    got = apply_gate(state, gate, targets).amplitudes
    want = embed_oracle(gate.matrix, n, targets) @ state.amplitudes
    assert np.max(np.abs(got - want)) < 1e-12


@given(st.integers(0, 10_000), st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_random_unitary_matches_oracle(seed, n):
    rng = np.random.default_rng(seed)
    mat = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, _ = np.linalg.qr(mat)
    gate = GateMatrix(q)
    targets = list(rng.permutation(n)[:2])
    state = random_state(n, rng)
    got = apply_gate(state, gate, targets).amplitudes
    want = embed_oracle(q, n, targets) @ state.amplitudes
    assert np.max(np.abs(got - want)) < 1e-11


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_unitaries_preserve_norm(seed):
    rng = np.random.default_rng(seed)
    state = random_state(3, rng)
    for gate, t in [(H, [0]), (CNOT, [1, 2]), (TOFFOLI, [0, 1, 2]), (make_rk(4), [2])]:
        state = apply_gate(state, gate, t)
    assert abs(state.norm() - 1.0) < 1e-12


# ---- measurement ------------------------------------------------------------


def test_measure_plus_state_both_branches():
    plus = apply_gate(basis_state(1), H, [0])
    for outcome in (0, 1):
        post, rec = measure(plus, 0, forced=outcome)
        assert rec.outcome == outcome
        assert abs(rec.probability - 0.5) < 1e-12
        assert np.allclose(post.amplitudes, basis_state(1, outcome).amplitudes)


def test_measure_impossible_branch():
    with pytest.raises(ImpossibleBranchError):
        measure(basis_state(1, 0), 0, forced=1)


def test_measure_needs_exactly_one_source():
    plus = apply_gate(basis_state(1), H, [0])
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        measure(plus, 0)
    with pytest.raises(ValueError):
        measure(plus, 0, rng=rng, forced=0)


def test_measure_collapses_entanglement():
    bell = apply_gate(apply_gate(basis_state(2), H, [0]), CNOT, [0, 1])
    post, rec = measure(bell, 0, forced=1)
    assert np.allclose(post.amplitudes, basis_state(2, 0b11).amplitudes)
    assert abs(rec.probability - 0.5) < 1e-12


def test_norm_stable_over_many_measurements():
    """Regression: renormalization must not compound drift across a long
    measurement chain (1 - p_other amplifies error by 1/p each step)."""
    state = basis_state(2)
    for _ in range(60):
        state = apply_gate(state, H, [0])
        state, rec = measure(state, 0, forced=0)
        assert abs(rec.probability - 0.5) < 1e-12
    assert abs(state.norm() - 1.0) < 1e-13


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_branch_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    state = random_state(3, rng)
    _, rec0 = measure(state, 1, forced=0)
    _, rec1 = measure(state, 1, forced=1)
    assert abs(rec0.probability + rec1.probability - 1.0) < 1e-12


# ---- fidelity and reduced states --------------------------------------------


def test_fidelity_ignores_global_phase():
    rng = np.random.default_rng(5)
    a = random_state(3, rng)
    b = StateVector(3, a.amplitudes * np.exp(1j * 0.83))
    assert fidelity_up_to_global_phase(a, b) > 1 - 1e-12
    c = basis_state(3, 1)
    assert fidelity_up_to_global_phase(a, c) < 1.0
    with pytest.raises(ValueError):
        fidelity_up_to_global_phase(a, basis_state(2))


def test_partial_state_check():
    bell = apply_gate(apply_gate(basis_state(2), H, [0]), CNOT, [0, 1])
    assert not partial_state_check(bell, 0, 0)
    post, _ = measure(bell, 0, forced=0)
    assert partial_state_check(post, 0, 0)
    assert partial_state_check(post, 1, 0)


def test_reduced_density_matrix_bell():
    bell = apply_gate(apply_gate(basis_state(2), H, [0]), CNOT, [0, 1])
    rho = reduced_density_matrix(bell, [0])
    assert np.allclose(rho, np.eye(2) / 2)


def test_reduced_density_matrix_product():
    s = apply_gate(basis_state(3, 0b010), H, [0])
    rho = reduced_density_matrix(s, [1])
    want = np.zeros((2, 2))
    want[1, 1] = 1.0
    assert np.allclose(rho, want)
    assert abs(np.trace(rho) - 1.0) < 1e-12


def test_reduced_density_matrix_keeps_order():
    # keep=[1,0] must transpose the marginal relative to keep=[0,1]
    s = apply_gate(basis_state(2, 0b10), H, [1])
    rho01 = reduced_density_matrix(s, [0, 1])
    rho10 = reduced_density_matrix(s, [1, 0])
    probs01 = np.real(np.diag(rho01))
    probs10 = np.real(np.diag(rho10))
    # qubit 0 is |1>, qubit 1 is |+>: orders 10,11 vs 01,11
    assert np.allclose(probs01, [0, 0, 0.5, 0.5])
    assert np.allclose(probs10, [0, 0.5, 0, 0.5])
