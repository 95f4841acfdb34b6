"""Multi-node execution layer.

A Network owns one global state vector spanning every qubit of every node,
but the operation surface only permits what distributed hardware could do:
gates act on qubits of a single node, qubits move between nodes only via
transport, and classical bits are usable at a node only after being measured
there or received in a message. Resource counters (ebits, cbits, transports,
rounds) are maintained by the operations themselves.

Each node owns a register pool (long-lived data qubits) and a channel pool
(communication qubits). All slots start occupied by |0> qubits.
"""

from __future__ import annotations

import collections
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import qstate
from .errors import (
    CapacityError,
    CausalityError,
    LocalityError,
    PoolError,
    PreconditionError,
)
from .gates import CNOT, H
from .qstate import GateMatrix, MeasurementRecord, StateVector

REGISTER = "register"
CHANNEL = "channel"


@dataclass(frozen=True, order=True)
class QubitAddress:
    """Where a qubit lives: node id, pool kind, slot index."""

    node: str
    pool: str
    slot: int

    def __post_init__(self) -> None:
        if self.pool not in (REGISTER, CHANNEL):
            raise ValueError(f"pool must be {REGISTER!r} or {CHANNEL!r}, got {self.pool!r}")

    def __str__(self) -> str:
        return f"{self.node}.{self.pool}[{self.slot}]"


@dataclass(frozen=True)
class ClassicalMessage:
    """A classical bit in flight: sender, recipients, payload, label."""

    sender: str
    to: tuple[str, ...]
    bit: int
    tag: str

    def __post_init__(self) -> None:
        to = (self.to,) if isinstance(self.to, str) else tuple(self.to)
        object.__setattr__(self, "to", to)
        if self.bit not in (0, 1):
            raise ValueError(f"message bit must be 0 or 1, got {self.bit}")


@dataclass
class ResourceLedger:
    """Cumulative cost counters for a network or a protocol section."""

    ebits_consumed: int = 0
    cbits_sent: int = 0
    qubits_transported: int = 0
    rounds: int = 0

    def snapshot(self) -> "ResourceLedger":
        return ResourceLedger(
            self.ebits_consumed, self.cbits_sent, self.qubits_transported, self.rounds
        )

    def delta_since(self, snap: "ResourceLedger") -> "ResourceLedger":
        return ResourceLedger(
            self.ebits_consumed - snap.ebits_consumed,
            self.cbits_sent - snap.cbits_sent,
            self.qubits_transported - snap.qubits_transported,
            self.rounds - snap.rounds,
        )

    def as_dict(self) -> dict[str, int]:
        return {
            "ebits": self.ebits_consumed,
            "cbits": self.cbits_sent,
            "qubits_transported": self.qubits_transported,
            "rounds": self.rounds,
        }


@dataclass(frozen=True)
class NodeSpec:
    name: str
    registers: int
    channels: int


ControlToken = MeasurementRecord | ClassicalMessage


class Network:
    """A set of nodes sharing one exact global state."""

    def __init__(
        self,
        nodes: Sequence[tuple[str, int, int]],
        seed: int | None = None,
    ) -> None:
        specs = [NodeSpec(str(n), int(r), int(c)) for n, r, c in nodes]
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate node names: {names}")
        for s in specs:
            if s.registers < 0 or s.channels < 0 or s.registers + s.channels == 0:
                raise ValueError(f"node {s.name} needs at least one qubit slot")
        self.nodes: dict[str, NodeSpec] = {s.name: s for s in specs}
        self.ownership: dict[QubitAddress, int] = {}
        gidx = 0
        for s in specs:
            for slot in range(s.registers):
                self.ownership[QubitAddress(s.name, REGISTER, slot)] = gidx
                gidx += 1
            for slot in range(s.channels):
                self.ownership[QubitAddress(s.name, CHANNEL, slot)] = gidx
                gidx += 1
        self.num_qubits = gidx
        self.state: StateVector = qstate.basis_state(gidx, 0)
        self.ledger = ResourceLedger()
        self.message_log: list[ClassicalMessage] = []
        self.records: list[MeasurementRecord] = []
        self.rng = np.random.default_rng(seed)
        self.branch_probability = 1.0
        self._forced: collections.deque[int] = collections.deque()
        self._in_round = False
        self._round_touched: set[int] = set()

    # ---- addressing -----------------------------------------------------

    def reg(self, node: str, slot: int = 0) -> QubitAddress:
        return self._checked_address(QubitAddress(node, REGISTER, slot))

    def chan(self, node: str, slot: int = 0) -> QubitAddress:
        return self._checked_address(QubitAddress(node, CHANNEL, slot))

    def _checked_address(self, addr: QubitAddress) -> QubitAddress:
        if addr.node not in self.nodes:
            raise ValueError(f"unknown node {addr.node!r}")
        spec = self.nodes[addr.node]
        cap = spec.registers if addr.pool == REGISTER else spec.channels
        if not 0 <= addr.slot < cap:
            raise ValueError(f"slot out of range for {addr}")
        return addr

    def global_index(self, addr: QubitAddress) -> int:
        try:
            return self.ownership[addr]
        except KeyError:
            raise ValueError(f"no qubit currently held at {addr}") from None

    def owner_of(self, gidx: int) -> QubitAddress:
        for addr, g in self.ownership.items():
            if g == gidx:
                return addr
        raise ValueError(f"global index {gidx} is unowned")

    def addresses(self, node: str | None = None, pool: str | None = None) -> list[QubitAddress]:
        out = [
            a
            for a in self.ownership
            if (node is None or a.node == node) and (pool is None or a.pool == pool)
        ]
        return sorted(out)

    def free_slots(self, node: str, pool: str = CHANNEL) -> list[int]:
        """Slots whose qubit sits idle in |0>, available as fresh carriers."""
        spec = self.nodes[node]
        cap = spec.registers if pool == REGISTER else spec.channels
        return [
            s
            for s in range(cap)
            if QubitAddress(node, pool, s) in self.ownership
            and self.qubit_is(QubitAddress(node, pool, s), 0)
        ]

    # ---- round accounting ------------------------------------------------

    @contextmanager
    def parallel_round(self):
        """Group the enclosed operations into one scheduling round.

        Operations inside the batch must touch pairwise-disjoint qubits.
        """
        if self._in_round:
            raise ValueError("parallel rounds do not nest")
        self._in_round = True
        self._round_touched = set()
        self.ledger.rounds += 1
        try:
            yield self
        finally:
            self._in_round = False
            self._round_touched = set()

    def _account_round(self, indices: Iterable[int]) -> None:
        if self._in_round:
            overlap = self._round_touched.intersection(indices)
            if overlap:
                raise ValueError(
                    f"operations in one parallel round must touch disjoint qubits "
                    f"(global indices {sorted(overlap)} reused)"
                )
            self._round_touched.update(indices)
        else:
            self.ledger.rounds += 1

    # ---- quantum operations ----------------------------------------------

    def local_apply(self, gate: GateMatrix, targets: Sequence[QubitAddress]) -> None:
        """Apply a gate whose targets all sit on one node."""
        targets = [self._checked_address(t) for t in targets]
        if not targets:
            raise ValueError("no target qubits given")
        nodes = {t.node for t in targets}
        if len(nodes) > 1:
            raise LocalityError(
                f"gate targets span nodes {sorted(nodes)}; gates are node-local"
            )
        idx = [self.global_index(t) for t in targets]
        self._account_round(idx)
        self.state = qstate.apply_gate(self.state, gate, idx)

    def measure(
        self,
        addr: QubitAddress,
        forced: int | None = None,
    ) -> MeasurementRecord:
        """Measure one qubit in the Z basis.

        Outcomes come from, in priority order: the `forced` argument, the
        queue loaded by force_outcomes(), or the network RNG.
        """
        addr = self._checked_address(addr)
        gidx = self.global_index(addr)
        self._account_round([gidx])
        if forced is None and self._forced:
            forced = self._forced.popleft()
        if forced is not None:
            new_state, rec = qstate.measure(self.state, gidx, forced=forced)
        else:
            new_state, rec = qstate.measure(self.state, gidx, rng=self.rng)
        self.state = new_state
        record = MeasurementRecord(addr, rec.outcome, rec.probability)
        self.records.append(record)
        self.branch_probability *= rec.probability
        return record

    def measure_x(self, addr: QubitAddress, forced: int | None = None) -> MeasurementRecord:
        """X-basis measurement (H then Z-measure) as one scheduling step."""
        addr = self._checked_address(addr)
        gidx = self.global_index(addr)
        self._account_round([gidx])
        self.state = qstate.apply_gate(self.state, H, [gidx])
        if forced is None and self._forced:
            forced = self._forced.popleft()
        if forced is not None:
            new_state, rec = qstate.measure(self.state, gidx, forced=forced)
        else:
            new_state, rec = qstate.measure(self.state, gidx, rng=self.rng)
        self.state = new_state
        record = MeasurementRecord(addr, rec.outcome, rec.probability)
        self.records.append(record)
        self.branch_probability *= rec.probability
        return record

    def force_outcomes(self, bits: Iterable[int]) -> None:
        """Queue outcomes for upcoming measurements (branch enumeration)."""
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"forced outcomes must be bits, got {b}")
            self._forced.append(int(b))

    # ---- classical communication ------------------------------------------

    def send_cbit(self, msg: ClassicalMessage) -> ClassicalMessage:
        """Send one classical bit; each remote recipient costs one cbit."""
        if msg.sender not in self.nodes:
            raise ValueError(f"unknown sender {msg.sender!r}")
        for dest in msg.to:
            if dest not in self.nodes:
                raise ValueError(f"unknown recipient {dest!r}")
        self._account_round([])
        self.message_log.append(msg)
        self.ledger.cbits_sent += sum(1 for dest in msg.to if dest != msg.sender)
        return msg

    def _token_bit_at(self, token: ControlToken, node: str) -> int:
        if isinstance(token, MeasurementRecord):
            if not any(token is r for r in self.records):
                raise CausalityError("measurement record does not belong to this network")
            if token.address.node != node:
                raise CausalityError(
                    f"bit measured at {token.address.node} was never sent to {node}"
                )
            return token.outcome
        if isinstance(token, ClassicalMessage):
            if not any(token is m for m in self.message_log):
                raise CausalityError("message was never sent on this network")
            if node != token.sender and node not in token.to:
                raise CausalityError(
                    f"message {token.tag!r} from {token.sender} was not addressed to {node}"
                )
            return token.bit
        raise ValueError(f"control must be a record or message, got {type(token).__name__}")

    def classically_controlled_apply(
        self,
        controls: ControlToken | Sequence[ControlToken],
        gate: GateMatrix,
        targets: QubitAddress | Sequence[QubitAddress],
    ) -> bool:
        """Apply `gate` iff the XOR of the control bits is 1.

        Every control bit must be available at the target node: measured
        there, or delivered there by a logged message. The scheduling round
        is charged whether or not the gate fires, so costs do not depend on
        measurement outcomes. Returns True when the gate was applied.
        """
        if isinstance(targets, QubitAddress):
            targets = [targets]
        targets = [self._checked_address(t) for t in targets]
        nodes = {t.node for t in targets}
        if len(nodes) > 1:
            raise LocalityError(f"controlled correction spans nodes {sorted(nodes)}")
        node = targets[0].node
        if isinstance(controls, (MeasurementRecord, ClassicalMessage)):
            controls = [controls]
        bit = 0
        for token in controls:
            bit ^= self._token_bit_at(token, node)
        idx = [self.global_index(t) for t in targets]
        self._account_round(idx)
        if bit:
            self.state = qstate.apply_gate(self.state, gate, idx)
        return bool(bit)

    # ---- qubit movement ----------------------------------------------------

    def transport_qubit(self, addr: QubitAddress, to_node: str) -> QubitAddress:
        """Physically move a channel qubit to another node's channel pool.

        The destination must have a free slot (a channel qubit idling in
        |0>); the payload and that idle carrier trade addresses, so the
        state vector is untouched and only the labeling moves. One
        transport is charged; the returning empty carrier is not.
        """
        addr = self._checked_address(addr)
        if addr.pool != CHANNEL:
            raise PoolError(f"only channel qubits travel; {addr} is a register qubit")
        if to_node not in self.nodes:
            raise ValueError(f"unknown node {to_node!r}")
        if to_node == addr.node:
            raise ValueError(f"{addr} is already at {to_node}")
        free = self.free_slots(to_node, CHANNEL)
        if not free:
            raise CapacityError(f"channel pool of {to_node} is full")
        new_addr = QubitAddress(to_node, CHANNEL, free[0])
        self.ownership[addr], self.ownership[new_addr] = (
            self.ownership[new_addr],
            self.ownership[addr],
        )
        self.ledger.qubits_transported += 1
        self._account_round([])
        return new_addr

    def exchange_channel_qubits(
        self, addr_a: QubitAddress, addr_b: QubitAddress
    ) -> tuple[QubitAddress, QubitAddress]:
        """Two nodes swap one channel qubit each, as one crossing shipment.

        Counts two transports and one round. Returns the new addresses of
        the qubits formerly at addr_a and addr_b (they trade slots, so no
        free capacity is needed).
        """
        addr_a = self._checked_address(addr_a)
        addr_b = self._checked_address(addr_b)
        if addr_a.pool != CHANNEL or addr_b.pool != CHANNEL:
            raise PoolError("only channel qubits travel")
        if addr_a.node == addr_b.node:
            raise ValueError("exchange requires two different nodes")
        ga, gb = self.global_index(addr_a), self.global_index(addr_b)
        self.ownership[addr_a], self.ownership[addr_b] = gb, ga
        self.ledger.qubits_transported += 2
        self._account_round([])
        return addr_b, addr_a

    # ---- state inspection ---------------------------------------------------

    def qubit_is(self, addr: QubitAddress, bit: int) -> bool:
        """True when the qubit at addr reads `bit` with probability 1."""
        return qstate.partial_state_check(self.state, self.global_index(addr), bit)

    def last_record(self, addr: QubitAddress) -> MeasurementRecord | None:
        for rec in reversed(self.records):
            if rec.address == addr:
                return rec
        return None

    # ---- bootstrap helpers ----------------------------------------------------

    def preshare_epr(self, addr_a: QubitAddress, addr_b: QubitAddress) -> None:
        """Write (|00> + |11>)/sqrt(2) onto two |0> qubits directly.

        Setup-only shortcut standing in for entanglement distributed before
        the protocol under study begins; it bypasses locality on purpose and
        charges nothing. The in-model path is establish_epr_exchange.
        """
        self.preshare_cat([addr_a, addr_b])

    def preshare_cat(self, addrs: Sequence[QubitAddress]) -> None:
        """Write (|0..0> + |1..1>)/sqrt(2) onto the listed |0> qubits."""
        addrs = [self._checked_address(a) for a in addrs]
        if len(addrs) < 2:
            raise ValueError("a shared cat state needs at least 2 qubits")
        idx = [self.global_index(a) for a in addrs]
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate addresses in cat preparation")
        for a in addrs:
            if not self.qubit_is(a, 0):
                raise PreconditionError(f"{a} must hold |0> before entanglement setup")
        self.state = qstate.apply_gate(self.state, H, [idx[0]])
        for other in idx[1:]:
            self.state = qstate.apply_gate(self.state, CNOT, [idx[0], other])

    def inject_state(self, addrs: Sequence[QubitAddress], amplitudes) -> None:
        """Overwrite the global state with a chosen input (setup only).

        The listed qubits receive the given joint amplitudes (first address
        = most significant bit); every other qubit is |0>. Normalizes.
        """
        addrs = [self._checked_address(a) for a in addrs]
        idx = [self.global_index(a) for a in addrs]
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate addresses in input preparation")
        k = len(idx)
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**k:
            raise ValueError(f"expected {2**k} amplitudes for {k} qubits, got {amps.shape[0]}")
        norm = np.linalg.norm(amps)
        if norm < qstate.ZERO_CUTOFF:
            raise ValueError("cannot inject the zero vector")
        rest = np.zeros(2 ** (self.num_qubits - k), dtype=complex)
        rest[0] = 1.0
        tensor = np.outer(amps / norm, rest).reshape((2,) * self.num_qubits)
        tensor = np.moveaxis(tensor, range(k), idx)
        self.state = StateVector(self.num_qubits, np.ascontiguousarray(tensor.reshape(-1)))
