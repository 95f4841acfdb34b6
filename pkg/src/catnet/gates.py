"""Gate constructors: fixed gates, controlled wrappers, phase rotations, and
the local cat/GHZ preparation circuits in their two shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .qstate import GateMatrix, StateVector, apply_gate, partial_state_check

SQRT2_INV = 1.0 / math.sqrt(2.0)

IDENTITY = GateMatrix(np.eye(2))
X = GateMatrix(np.array([[0, 1], [1, 0]], dtype=complex))
Z = GateMatrix(np.array([[1, 0], [0, -1]], dtype=complex))
H = GateMatrix(np.array([[SQRT2_INV, SQRT2_INV], [SQRT2_INV, -SQRT2_INV]]))
CNOT = GateMatrix(
    np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
)
SWAP = GateMatrix(
    np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    )
)

EM_SHAPES = ("linear", "binary-tree")


@dataclass(frozen=True)
class ControlledSpec:
    """How to wrap a base unitary in control qubits.

    Control wires come first (most significant), the base acts on the least
    significant wires only when every control reads 1.
    """

    num_controls: int
    base: GateMatrix


def make_controlled(spec: ControlledSpec) -> GateMatrix:
    """Build the controlled gate described by `spec`.

    The result is the identity on the full space except that the final block
    (all controls 1) equals the base matrix. num_controls=0 returns a gate
    equal to the base itself.
    """
    if spec.num_controls < 0:
        raise ValueError(f"num_controls must be >= 0, got {spec.num_controls}")
    base = spec.base.matrix
    dim = base.shape[0] * 2**spec.num_controls
    out = np.eye(dim, dtype=complex)
    out[-base.shape[0]:, -base.shape[0]:] = base
    return GateMatrix(out)


CZ = make_controlled(ControlledSpec(1, Z))
TOFFOLI = make_controlled(ControlledSpec(2, X))


@lru_cache(maxsize=None)
def make_rk(k: int) -> GateMatrix:
    """Phase rotation diag(1, e^(2*pi*i / 2^k)); k=1 is Z."""
    if k < 1:
        raise ValueError(f"rotation order k must be >= 1, got {k}")
    return GateMatrix(np.diag([1.0, np.exp(2j * np.pi / 2**k)]))


def em_schedule(m: int, shape: str) -> list[list[tuple[int, int]]]:
    """CNOT rounds that grow |0..0> + |1..1> over m wires after H on wire 0.

    Returns a list of rounds; each round is a list of (control, target)
    index pairs into the caller's qubit list. "linear" chains one CNOT per
    round; "binary-tree" lets every already-entangled wire fan out to a fresh
    one each round (lowest entangled index pairs with lowest fresh index).
    """
    if m < 2:
        raise ValueError(f"cat preparation needs at least 2 qubits, got {m}")
    if shape not in EM_SHAPES:
        raise ValueError(f"shape must be one of {EM_SHAPES}, got {shape!r}")
    if shape == "linear":
        return [[(i, i + 1)] for i in range(m - 1)]
    rounds: list[list[tuple[int, int]]] = []
    entangled = 1
    while entangled < m:
        fresh = min(entangled, m - entangled)
        rounds.append([(src, entangled + src) for src in range(fresh)])
        entangled += fresh
    return rounds


def local_entangle_em(
    state: StateVector, qubits: Sequence[int], shape: str = "linear"
) -> tuple[StateVector, int]:
    """Entangle `qubits` (all required |0>) into (|0..0> + |1..1>)/sqrt(2).

    Returns the new state and the circuit depth counted in CNOT rounds
    (the initial H is excluded): m-1 for linear, ceil(log2(m)) for
    binary-tree.
    """
    qubits = [int(q) for q in qubits]
    rounds = em_schedule(len(qubits), shape)
    for q in qubits:
        if not partial_state_check(state, q, 0):
            raise ValueError(f"qubit {q} must be |0> before cat preparation")
    state = apply_gate(state, H, [qubits[0]])
    for rnd in rounds:
        for src, dst in rnd:
            state = apply_gate(state, CNOT, [qubits[src], qubits[dst]])
    return state, len(rounds)
