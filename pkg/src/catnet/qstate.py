"""Exact state-vector core.

Conventions used everywhere in this package:

* Qubit 0 is the MOST significant bit of a basis index, so basis labels read
  left to right like a ket: index 0b10 of a two-qubit state is |10>.
* Gate matrices follow the same convention on their own wires: the first
  target qubit is the most significant bit of the matrix row/column index.
* States are always kept normalized; comparisons use a 1e-10 tolerance and
  amplitudes below 1e-12 count as exactly zero when validating forced
  measurement outcomes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ImpossibleBranchError

ATOL = 1e-10
ZERO_CUTOFF = 1e-12

_gate_uids = itertools.count()


class GateMatrix:
    """A unitary acting on a fixed number of qubits.

    The matrix is validated (square, power-of-two dimension, unitary within
    1e-10) and frozen at construction. Instances are classified once as
    permutation / diagonal / general so repeated applications can take a
    cheap path.
    """

    __slots__ = ("matrix", "arity", "uid", "kind", "perm_source", "diag")

    def __init__(self, matrix) -> None:
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"gate matrix must be square, got shape {m.shape}")
        dim = m.shape[0]
        arity = dim.bit_length() - 1
        if 2**arity != dim or arity < 1:
            raise ValueError(f"gate dimension must be a power of two >= 2, got {dim}")
        if not np.allclose(m.conj().T @ m, np.eye(dim), atol=ATOL):
            raise ValueError("gate matrix is not unitary within 1e-10")
        m.setflags(write=False)
        self.matrix = m
        self.arity = arity
        self.uid = next(_gate_uids)
        self._classify()

    def _classify(self) -> None:
        m = self.matrix
        dim = m.shape[0]
        self.perm_source = None
        self.diag = None
        nonzero_rows = m.nonzero()[0]
        if len(nonzero_rows) == dim and np.all((m == 0) | (m == 1)):
            # exactly one 1 per column: out[row] <- in[col]
            rows, cols = m.nonzero()
            source = np.empty(dim, dtype=np.intp)
            source[rows] = cols
            self.kind = "permutation"
            self.perm_source = source
        elif np.count_nonzero(m - np.diag(np.diagonal(m))) == 0:
            self.kind = "diagonal"
            self.diag = np.ascontiguousarray(np.diagonal(m))
        else:
            self.kind = "general"

    def __repr__(self) -> str:
        return f"GateMatrix(arity={self.arity}, kind={self.kind})"


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes over 2**num_qubits basis states."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class MeasurementRecord:
    """One measurement: where it happened, what came out, how likely it was.

    `address` is a global qubit index at the state layer and a QubitAddress
    at the network layer.
    """

    address: object
    outcome: int
    probability: float


def basis_state(num_qubits: int, index: int = 0) -> StateVector:
    """|index> on num_qubits wires, index read with qubit 0 as MSB."""
    if not 0 <= index < 2**num_qubits:
        raise ValueError(f"basis index {index} out of range for {num_qubits} qubits")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def from_amplitudes(amps: Sequence[complex]) -> StateVector:
    """Build a state from raw amplitudes, normalizing them."""
    arr = np.asarray(amps, dtype=complex)
    n = arr.size.bit_length() - 1
    if 2**n != arr.size:
        raise ValueError(f"amplitude count {arr.size} is not a power of two")
    nrm = np.linalg.norm(arr)
    if nrm < ZERO_CUTOFF:
        raise ValueError("cannot normalize an all-zero amplitude vector")
    return StateVector(n, arr / nrm)


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-ish random pure state (normalized complex Gaussian)."""
    v = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(num_qubits, v / np.linalg.norm(v))


def _check_targets(state: StateVector, targets: Sequence[int], arity: int) -> tuple:
    targets = tuple(int(t) for t in targets)
    if len(targets) != arity:
        raise ValueError(f"gate acts on {arity} qubits, got targets {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits: {targets}")
    for t in targets:
        if not 0 <= t < state.num_qubits:
            raise ValueError(f"target {t} out of range for {state.num_qubits} qubits")
    return targets


# Cached application plans keyed by (gate uid, num_qubits, targets). Gates are
# immutable and few, so this stays small and makes repeated protocol runs and
# exhaustive branch sweeps cheap.
_APPLY_CACHE: dict[tuple, tuple] = {}


def _apply_plan(gate: GateMatrix, n: int, targets: tuple) -> tuple:
    key = (gate.uid, n, targets)
    plan = _APPLY_CACHE.get(key)
    if plan is not None:
        return plan
    dim = 2**n
    shifts = np.array([n - 1 - t for t in targets], dtype=np.intp)
    idx = np.arange(dim, dtype=np.intp)
    sub = np.zeros(dim, dtype=np.intp)
    a = gate.arity
    for j, sh in enumerate(shifts):
        sub |= ((idx >> sh) & 1) << (a - 1 - j)
    if gate.kind == "permutation":
        src_sub = gate.perm_source[sub]
        src = idx.copy()
        for j, sh in enumerate(shifts):
            bit = (src_sub >> (a - 1 - j)) & 1
            src = (src & ~(1 << sh)) | (bit << sh)
        plan = ("permutation", src)
    elif gate.kind == "diagonal":
        plan = ("diagonal", gate.diag[sub])
    else:
        plan = ("general", np.ascontiguousarray(gate.matrix.reshape((2,) * (2 * a))))
    _APPLY_CACHE[key] = plan
    return plan


def apply_gate(state: StateVector, gate: GateMatrix, targets: Sequence[int]) -> StateVector:
    """Apply `gate` to the listed qubits; returns a new state.

    The first listed target is the gate's most significant wire.
    """
    targets = _check_targets(state, targets, gate.arity)
    n = state.num_qubits
    kind, payload = _apply_plan(gate, n, targets)
    amps = state.amplitudes
    if kind == "permutation":
        out = amps[payload]
    elif kind == "diagonal":
        out = amps * payload
    else:
        psi = amps.reshape((2,) * n)
        a = gate.arity
        res = np.tensordot(payload, psi, axes=(tuple(range(a, 2 * a)), targets))
        res = np.moveaxis(res, tuple(range(a)), targets)
        out = np.ascontiguousarray(res).reshape(-1)
    return StateVector(n, out)


def _bit_probability(state: StateVector, qubit: int) -> float:
    """Probability that `qubit` reads 1."""
    n = state.num_qubits
    view = state.amplitudes.reshape(2**qubit, 2, -1)
    ones = view[:, 1, :]
    return float(np.sum(ones.real**2 + ones.imag**2))


def measure(
    state: StateVector,
    qubit: int,
    *,
    rng: np.random.Generator | None = None,
    forced: int | None = None,
) -> tuple[StateVector, MeasurementRecord]:
    """Projective Z measurement of one qubit.

    Exactly one of `rng` / `forced` must be given: sampled outcomes come from
    the generator, forced outcomes select a branch for deterministic
    enumeration. Forcing an outcome whose probability is below 1e-12 raises
    ImpossibleBranchError.
    """
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    if (rng is None) == (forced is None):
        raise ValueError("supply exactly one of rng= or forced=")
    split = state.amplitudes.reshape(2**qubit, 2, -1)
    # per-outcome weights summed from their own slices: renormalizing by the
    # kept slice's weight leaves the state with unit norm exactly, whereas
    # 1 - p_other would let rounding drift compound over many measurements
    weights = np.sum(split.real**2 + split.imag**2, axis=(0, 2))
    if forced is not None:
        outcome = int(forced)
        if outcome not in (0, 1):
            raise ValueError(f"forced outcome must be 0 or 1, got {forced}")
    else:
        outcome = int(rng.random() < weights[1])
    p = float(weights[outcome])
    if p < ZERO_CUTOFF:
        raise ImpossibleBranchError(
            f"outcome {outcome} on qubit {qubit} has probability {p:.3e}"
        )
    new = state.amplitudes.copy()
    view = new.reshape(2**qubit, 2, -1)
    view[:, 1 - outcome, :] = 0
    new /= np.sqrt(p)
    return StateVector(state.num_qubits, new), MeasurementRecord(qubit, outcome, p)


def fidelity_up_to_global_phase(a: StateVector, b: StateVector) -> float:
    """|<a|b>| for normalized pure states; 1 means equal up to global phase."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(
            f"state sizes differ: {a.num_qubits} vs {b.num_qubits} qubits"
        )
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def partial_state_check(state: StateVector, qubit: int, expected: int) -> bool:
    """True when `qubit` is |expected> with probability 1 within 1e-10."""
    if expected not in (0, 1):
        raise ValueError(f"expected bit must be 0 or 1, got {expected}")
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    p1 = _bit_probability(state, qubit)
    wrong = p1 if expected == 0 else 1.0 - p1
    return wrong <= ATOL


def reduced_density_matrix(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    """Density matrix of the listed qubits with everything else traced out.

    Row/column indices follow the order of `keep` (first listed = MSB).
    """
    keep = tuple(int(q) for q in keep)
    keep = _check_targets(state, keep, len(keep))
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n)
    psi = np.moveaxis(psi, keep, tuple(range(len(keep))))
    m = psi.reshape(2 ** len(keep), -1)
    return m @ m.conj().T
