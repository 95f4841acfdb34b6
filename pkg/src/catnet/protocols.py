"""Composite distributed protocols built on the cat-state primitives.

Every operation here mutates the network in place and returns a
ProtocolReport carrying the resource delta (ebits, cbits, transports,
rounds) plus, when check=True, the outcome of an independent oracle
comparison: the protocol's effect on the surviving qubits is compared,
via reduced density matrices, against the ideal gate applied to the
pre-protocol state. Consumed helper qubits (measured channel qubits,
released ancillas) are excluded from that comparison and are instead
required to end in known classical states.

Entanglement policy: protocols consume pre-established EPR pairs. Callers
either pass them in, enable the auto flag (which writes fresh pairs onto
free channel qubits as a stand-in for earlier distribution, charging
nothing until consumption), or run establish_epr_exchange, the in-model
establishment that actually ships qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import qstate
from .errors import (
    CannotResetError,
    CapacityError,
    LocalityError,
    PreconditionError,
    ResourceError,
)
from .gates import (
    CNOT,
    CZ,
    H,
    SWAP,
    TOFFOLI,
    X,
    ControlledSpec,
    em_schedule,
    make_controlled,
)
from .network import (
    CHANNEL,
    REGISTER,
    ClassicalMessage,
    Network,
    QubitAddress,
    ResourceLedger,
)
from .primitives import _require_fresh_cat, cat_entangler, cat_shrink, teleport
from .qstate import ATOL, MeasurementRecord

C3X = make_controlled(ControlledSpec(3, X))
C4X = make_controlled(ControlledSpec(4, X))


@dataclass
class ProtocolReport:
    """What one protocol run cost and whether it checked out."""

    name: str
    ledger: ResourceLedger
    rounds: int
    branches_tested: int = 1
    verified: bool | None = None
    max_infidelity: float | None = None
    details: dict[str, Any] = field(default_factory=dict)
    messages: list[ClassicalMessage] = field(default_factory=list)

    def as_dict(self) -> dict[str, Any]:
        return {
            "protocol": self.name,
            "branches_tested": self.branches_tested,
            "ebits": self.ledger.ebits_consumed,
            "cbits": self.ledger.cbits_sent,
            "qubits_transported": self.ledger.qubits_transported,
            "rounds": self.rounds,
            "max_infidelity": self.max_infidelity,
            "verified": self.verified,
            "message_log": [
                {"from": m.sender, "to": list(m.to), "bit": m.bit, "tag": m.tag}
                for m in self.messages
            ],
            "details": self.details,
        }


class _Scope:
    """Captures ledger, message, and state baselines for one protocol body."""

    def __init__(self, net: Network) -> None:
        self.net = net
        self.snap = net.ledger.snapshot()
        self.msg_start = len(net.message_log)
        self.pre_state = net.state

    def report(self, name: str, *, rounds: int | None = None, **kwargs: Any) -> ProtocolReport:
        delta = self.net.ledger.delta_since(self.snap)
        return ProtocolReport(
            name=name,
            ledger=delta,
            rounds=delta.rounds if rounds is None else rounds,
            messages=list(self.net.message_log[self.msg_start:]),
            **kwargs,
        )

    def oracle_infidelity(
        self,
        ideal: Sequence[tuple[Any, Sequence[QubitAddress]]],
        exclude: Sequence[QubitAddress] = (),
    ) -> float:
        """Distance from the ideal-gate result on all non-excluded qubits.

        Excluded qubits are the protocol's consumables; everything else must
        carry exactly the state the ideal gates would have produced.
        """
        net = self.net
        expected = self.pre_state
        for gate, addrs in ideal:
            expected = qstate.apply_gate(expected, gate, [net.global_index(a) for a in addrs])
        skip = {net.global_index(a) for a in exclude}
        keep = [i for i in range(net.num_qubits) if i not in skip]
        rho_e = qstate.reduced_density_matrix(expected, keep)
        rho_a = qstate.reduced_density_matrix(net.state, keep)
        overlap = float(np.trace(rho_a @ rho_e).real)
        return max(0.0, 1.0 - overlap)


def _free_zero_channel(
    net: Network, node: str, exclude: Sequence[QubitAddress] = ()
) -> QubitAddress:
    """First channel qubit on `node` that holds |0> and is not reserved."""
    for addr in net.addresses(node, CHANNEL):
        if addr in exclude:
            continue
        if net.qubit_is(addr, 0):
            return addr
    raise ResourceError(f"no |0> channel qubit available on {node}")


def _resolve_epr(
    net: Network,
    node_a: str,
    node_b: str,
    epr: tuple[QubitAddress, QubitAddress] | None,
    auto_establish: bool,
) -> tuple[QubitAddress, QubitAddress]:
    if epr is not None:
        e_a, e_b = epr
        if e_a.node != node_a or e_b.node != node_b:
            raise ValueError(
                f"EPR pair ({e_a}, {e_b}) does not span nodes {node_a} and {node_b}"
            )
        return e_a, e_b
    if not auto_establish:
        raise ResourceError(
            f"no EPR pair between {node_a} and {node_b}; pass epr=... or set "
            f"auto_establish=True"
        )
    a = _free_zero_channel(net, node_a)
    b = _free_zero_channel(net, node_b, exclude=(a,))
    net.preshare_epr(a, b)
    return a, b


# ---- entanglement lifecycle -------------------------------------------------


def establish_epr_exchange(
    net: Network,
    node_a: str,
    node_b: str,
    *,
    slots_a: tuple[int, int] = (0, 1),
    slots_b: tuple[int, int] = (0, 1),
    check: bool = True,
) -> tuple[list[tuple[QubitAddress, QubitAddress]], ProtocolReport]:
    """Create two EPR pairs between two nodes with one crossing shipment.

    Each node entangles a stay-home channel qubit with a traveler, then the
    travelers trade places: two qubits shipped, two shared pairs gained.
    Returns the pairs as (qubit at node_a, qubit at node_b) address tuples.
    All four channel qubits must start in |0>.
    """
    if node_a == node_b:
        raise ValueError("entanglement establishment needs two distinct nodes")
    keep_a, move_a = net.chan(node_a, slots_a[0]), net.chan(node_a, slots_a[1])
    keep_b, move_b = net.chan(node_b, slots_b[0]), net.chan(node_b, slots_b[1])
    for addr in (keep_a, move_a, keep_b, move_b):
        if not net.qubit_is(addr, 0):
            raise PreconditionError(f"channel qubit {addr} must be |0> before entangling")
    scope = _Scope(net)
    with net.parallel_round():
        net.local_apply(H, [keep_a])
        net.local_apply(H, [keep_b])
    with net.parallel_round():
        net.local_apply(CNOT, [keep_a, move_a])
        net.local_apply(CNOT, [keep_b, move_b])
    net.exchange_channel_qubits(move_a, move_b)
    # ownership swapped in place: node_a's traveler is now addressed by
    # move_b's slot and vice versa
    pairs = [(keep_a, move_b), (keep_b, move_a)]
    verified = None
    if check:
        for pair in pairs:
            _require_fresh_cat(net, pair)
        verified = True
    return pairs, scope.report(
        "establish-epr",
        verified=verified,
        max_infidelity=0.0 if check else None,
        details={"pairs": [[str(p), str(q)] for p, q in pairs]},
    )


def reset_channel_qubits(
    net: Network, records: Sequence[MeasurementRecord | None]
) -> list[QubitAddress]:
    """Return measured qubits to |0> using their recorded outcomes.

    A qubit can only be erased when its state is known, so each record must
    still describe its qubit exactly; anything less raises CannotResetError.
    Works for register qubits too (e.g. released ancillas).
    """
    checked: list[MeasurementRecord] = []
    for rec in records:
        if rec is None:
            raise CannotResetError("no measurement record available for reset")
        if not any(rec is r for r in net.records):
            raise CannotResetError("measurement record does not belong to this network")
        if not net.qubit_is(rec.address, rec.outcome):
            raise CannotResetError(
                f"{rec.address} no longer holds the recorded state |{rec.outcome}>; "
                f"a qubit in an unknown state cannot be erased"
            )
        checked.append(rec)
    if not checked:
        return []
    with net.parallel_round():
        for rec in checked:
            net.classically_controlled_apply(rec, X, rec.address)
    return [rec.address for rec in checked]


# ---- non-local gates --------------------------------------------------------


def nonlocal_cnot(
    net: Network,
    control: QubitAddress,
    target: QubitAddress,
    *,
    epr: tuple[QubitAddress, QubitAddress] | None = None,
    auto_establish: bool = False,
    check: bool = True,
    tag: str = "nl-cnot",
) -> ProtocolReport:
    """CNOT between qubits on different nodes over one shared EPR pair.

    The control is spliced into the pair, the remote half drives a local
    CNOT, and the splice is undone; the control line ends restored on its
    home node. Costs exactly 1 ebit and 2 cbits. Both pair qubits end
    measured, so reset_channel_qubits can reclaim them.
    """
    if control.node == target.node:
        raise ValueError(f"{control} and {target} share a node; apply a local CNOT")
    e_c, e_t = _resolve_epr(net, control.node, target.node, epr, auto_establish)
    scope = _Scope(net)
    group = cat_entangler(net, control, (e_c, e_t), tag=tag)
    member = group.members[1]
    net.local_apply(CNOT, [member, target])
    shrink_recs = cat_shrink(net, group.members, control, tag=tag)
    verified = None
    infid = None
    if check:
        infid = scope.oracle_infidelity([(CNOT, [control, target])], exclude=[e_c, e_t])
        verified = infid <= ATOL
    return scope.report(
        "nonlocal-cnot",
        verified=verified,
        max_infidelity=infid,
        details={"outcome_bits": [group.record.outcome, shrink_recs[0].outcome]},
    )


def nonlocal_controlled_sequence(
    net: Network,
    control: QubitAddress,
    gates: Sequence[tuple[Any, QubitAddress | Sequence[QubitAddress]]],
    *,
    epr: tuple[QubitAddress, QubitAddress] | None = None,
    auto_establish: bool = False,
    check: bool = True,
    tag: str = "nl-seq",
) -> ProtocolReport:
    """Run several controlled gates off one distributed control line.

    `gates` lists (gate, targets) pairs, applied in order, all targeting one
    remote node. The control is distributed once and reclaimed once, so the
    whole run costs 1 ebit and 2 cbits no matter how many gates it contains.
    """
    seq: list[tuple[Any, list[QubitAddress]]] = []
    for gate, tgts in gates:
        tg = [tgts] if isinstance(tgts, QubitAddress) else list(tgts)
        seq.append((gate, tg))
    if not seq:
        raise ValueError("empty controlled-gate sequence")
    nodes = {t.node for _, tg in seq for t in tg}
    if len(nodes) != 1:
        raise LocalityError(f"sequence targets must share one node, got {sorted(nodes)}")
    remote = nodes.pop()
    if remote == control.node:
        raise ValueError("targets sit with the control; apply the controlled gates directly")
    e_c, e_t = _resolve_epr(net, control.node, remote, epr, auto_establish)
    for _, tg in seq:
        if e_t in tg:
            raise ValueError(f"{e_t} is reserved as the shared control line")
    scope = _Scope(net)
    group = cat_entangler(net, control, (e_c, e_t), tag=tag)
    member = group.members[1]
    controlled = [(make_controlled(ControlledSpec(1, g)), tg) for g, tg in seq]
    for cg, tg in controlled:
        net.local_apply(cg, [member, *tg])
    cat_shrink(net, group.members, control, tag=tag)
    verified = None
    infid = None
    if check:
        ideal = [(cg, [control, *tg]) for cg, tg in controlled]
        infid = scope.oracle_infidelity(ideal, exclude=[e_c, e_t])
        verified = infid <= ATOL
    return scope.report(
        "nonlocal-controlled-sequence",
        verified=verified,
        max_infidelity=infid,
        details={"gate_count": len(seq)},
    )


def parallel_distributed_control(
    net: Network,
    control: QubitAddress,
    parts: Sequence[tuple[str, Any, QubitAddress | Sequence[QubitAddress]]],
    *,
    cat: Sequence[QubitAddress] | None = None,
    auto_establish: bool = False,
    check: bool = True,
    tag: str = "par-ctrl",
) -> ProtocolReport:
    """One control qubit drives gates on several nodes in a single round.

    `parts` lists (node, gate, local targets); the gates must act on
    disjoint qubits since they run simultaneously. The control is shared
    through one multi-party cat state, each node applies its controlled
    part locally, and the share is reclaimed.
    """
    norm: list[tuple[str, Any, list[QubitAddress]]] = []
    for node, gate, tgts in parts:
        tg = [tgts] if isinstance(tgts, QubitAddress) else list(tgts)
        for t in tg:
            if t.node != node:
                raise ValueError(f"part on {node} lists target {t} from another node")
        norm.append((node, gate, tg))
    if not norm:
        raise ValueError("no parts given")
    part_nodes = [node for node, _, _ in norm]
    if len(set(part_nodes)) != len(part_nodes):
        raise ValueError("each part must sit on its own node (merge same-node parts)")

    if cat is None:
        if not auto_establish:
            raise ResourceError(
                "no shared cat state supplied; pass cat=... or set auto_establish=True"
            )
        chosen: list[QubitAddress] = []
        chosen.append(_free_zero_channel(net, control.node, exclude=chosen))
        for node in part_nodes:
            chosen.append(_free_zero_channel(net, node, exclude=chosen))
        net.preshare_cat(chosen)
        cat = chosen
    cat = list(cat)
    if len(cat) != len(norm) + 1:
        raise ValueError(f"need a {len(norm) + 1}-qubit cat state, got {len(cat)} qubits")
    for member, node in zip(cat[1:], part_nodes):
        if member.node != node:
            raise ValueError(f"cat member {member} does not sit on part node {node}")

    scope = _Scope(net)
    group = cat_entangler(net, control, cat, tag=tag)
    members = group.members[1:]
    controlled = [
        (make_controlled(ControlledSpec(1, g)), tg) for _, g, tg in norm
    ]
    with net.parallel_round():
        for member, (cg, tg) in zip(members, controlled):
            net.local_apply(cg, [member, *tg])
    cat_shrink(net, group.members, control, tag=tag)
    verified = None
    infid = None
    if check:
        ideal = [(cg, [control, *tg]) for cg, tg in controlled]
        infid = scope.oracle_infidelity(ideal, exclude=[group.measured, *members])
        verified = infid <= ATOL
    return scope.report(
        "parallel-distributed-control",
        verified=verified,
        max_infidelity=infid,
        details={"parts": len(norm), "controlled_rounds": 1},
    )


# ---- multi-node cat construction ---------------------------------------------


def em_channel_requirements(m: int, shape: str) -> list[int]:
    """Channel qubits node i must hold at once to run distributed_em."""
    req = [0] * m
    for stage in em_schedule(m, shape):
        for c, t in stage:
            req[c] += 1
            req[t] += 1
    return req


def distributed_em(
    net: Network,
    nodes: Sequence[str],
    shape: str = "linear",
    *,
    register_slot: int = 0,
    check: bool = True,
    tag: str = "em",
) -> ProtocolReport:
    """Grow the shared cat state over one register qubit per node.

    Follows the chosen schedule shape, replacing every CNOT of the local
    cat-construction circuit with its non-local counterpart over a
    pre-established EPR pair. All pairs are held simultaneously, so each
    node needs em_channel_requirements-many free channel qubits; the pairs
    are consumed stage by stage (m-1 ebits total) and the channel qubits
    are reset as they are released. The reported round count is the number
    of schedule stages.
    """
    nodes = [str(n) for n in nodes]
    m = len(nodes)
    schedule = em_schedule(m, shape)
    if len(set(nodes)) != m:
        raise ValueError("node list repeats a node")
    regs = [net.reg(n, register_slot) for n in nodes]
    req = em_channel_requirements(m, shape)
    for name, need in zip(nodes, req):
        if net.nodes[name].channels < need:
            raise CapacityError(
                f"{name} must hold {need} channel qubits at once for shape "
                f"{shape!r} but has {net.nodes[name].channels}"
            )

    next_slot = {n: 0 for n in nodes}
    pair_for: dict[tuple[int, int], tuple[QubitAddress, QubitAddress]] = {}
    for stage in schedule:
        for c, t in stage:
            a = net.chan(nodes[c], next_slot[nodes[c]])
            next_slot[nodes[c]] += 1
            b = net.chan(nodes[t], next_slot[nodes[t]])
            next_slot[nodes[t]] += 1
            net.preshare_epr(a, b)
            pair_for[(c, t)] = (a, b)

    scope = _Scope(net)
    net.local_apply(H, [regs[0]])
    for stage in schedule:
        for c, t in stage:
            a, b = pair_for[(c, t)]
            group = cat_entangler(net, regs[c], (a, b), tag=f"{tag}:{c}-{t}")
            net.local_apply(CNOT, [group.members[1], regs[t]])
            cat_shrink(net, group.members, regs[c], tag=f"{tag}:{c}-{t}")
            reset_channel_qubits(net, [net.last_record(a), net.last_record(b)])
    verified = None
    infid = None
    if check:
        ideal = [(H, [regs[0]])]
        for stage in schedule:
            ideal.extend((CNOT, [regs[c], regs[t]]) for c, t in stage)
        consumed = [q for pair in pair_for.values() for q in pair]
        infid = scope.oracle_infidelity(ideal, exclude=consumed)
        verified = infid <= ATOL
    return scope.report(
        "distributed-em",
        rounds=len(schedule),
        verified=verified,
        max_infidelity=infid,
        details={
            "shape": shape,
            "stages": len(schedule),
            "schedule": [[list(edge) for edge in stage] for stage in schedule],
        },
    )


# ---- qubit movement ------------------------------------------------------------


def teleport_with_reset(
    net: Network,
    source: QubitAddress,
    epr: tuple[QubitAddress, QubitAddress],
    empty: QubitAddress,
    *,
    check: bool = True,
    tag: str = "teleport",
) -> ProtocolReport:
    """Teleport into a register slot and leave every helper qubit in |0>.

    The state lands in `empty` (a |0> register qubit on the receiving
    node) by swapping it off the channel qubit, and the three consumed
    qubits (both pair halves and the source) are erased using their
    measurement outcomes. The source slot is then ready to receive a
    teleport in the opposite direction.
    """
    e_src, e_dst = epr
    if empty.pool != REGISTER:
        raise ValueError(f"the landing slot must be a register qubit, got {empty}")
    if empty.node != e_dst.node:
        raise ValueError(
            f"landing slot {empty} is not on the receiving node {e_dst.node}"
        )
    if not net.qubit_is(empty, 0):
        raise PreconditionError(f"landing slot {empty} must hold |0>")
    scope = _Scope(net)
    r1, r2 = teleport(net, source, (e_src, e_dst), tag=tag)
    net.local_apply(SWAP, [e_dst, empty])
    reset_channel_qubits(net, [r1, r2])
    verified = None
    infid = None
    if check:
        infid = scope.oracle_infidelity([(SWAP, [source, empty])], exclude=[e_src, e_dst])
        verified = infid <= ATOL
    return scope.report(
        "teleport-with-reset",
        verified=verified,
        max_infidelity=infid,
        details={"destination": str(empty)},
    )


def distributed_swap(
    net: Network,
    a: QubitAddress,
    b: QubitAddress,
    *,
    check: bool = True,
    tag: str = "dswap",
) -> ProtocolReport:
    """Exchange the states of two qubits on different nodes.

    Two teleportations, one per direction, each over its own EPR pair.
    With two free channel qubits per node the second channel qubit doubles
    as the swap buffer and no register qubit is touched; with a single
    channel qubit per node one |0> register qubit on a's node buffers
    instead (it is returned to |0>). Entanglement for the second hop is
    assumed distributed between the hops. Costs 2 ebits and 4 cbits.
    """
    if a.node == b.node:
        raise ValueError(f"{a} and {b} share a node; apply a local swap")
    chans_a = [
        q for q in net.addresses(a.node, CHANNEL) if q != a and net.qubit_is(q, 0)
    ]
    chans_b = [
        q for q in net.addresses(b.node, CHANNEL) if q != b and net.qubit_is(q, 0)
    ]
    scope = _Scope(net)
    if len(chans_a) >= 2 and len(chans_b) >= 2:
        ea0, ea1 = chans_a[:2]
        eb0, eb1 = chans_b[:2]
        net.preshare_epr(eb1, ea1)
        net.preshare_epr(ea0, eb0)
        r1b, r2b = teleport(net, b, (eb1, ea1), tag=f"{tag}:b-to-a")
        reset_channel_qubits(net, [r1b, r2b])
        r1a, r2a = teleport(net, a, (ea0, eb0), tag=f"{tag}:a-to-b")
        reset_channel_qubits(net, [r1a, r2a])
        with net.parallel_round():
            net.local_apply(SWAP, [ea1, a])
            net.local_apply(SWAP, [eb0, b])
        buffers_used = 0
    elif chans_a and chans_b:
        buffer = None
        for q in net.addresses(a.node, REGISTER):
            if q != a and net.qubit_is(q, 0):
                buffer = q
                break
        if buffer is None:
            raise CapacityError(
                f"distributed swap needs 2 free channel qubits per node, or 1 per "
                f"node plus an empty register qubit on {a.node}"
            )
        ea, eb = chans_a[0], chans_b[0]
        net.preshare_epr(eb, ea)
        r1b, r2b = teleport(net, b, (eb, ea), tag=f"{tag}:b-to-a")
        reset_channel_qubits(net, [r1b, r2b])
        net.local_apply(SWAP, [ea, buffer])
        net.preshare_epr(ea, eb)
        r1a, r2a = teleport(net, a, (ea, eb), tag=f"{tag}:a-to-b")
        reset_channel_qubits(net, [r1a, r2a])
        with net.parallel_round():
            net.local_apply(SWAP, [eb, b])
            net.local_apply(SWAP, [buffer, a])
        buffers_used = 1
    else:
        raise CapacityError(
            f"distributed swap needs free channel qubits on both {a.node} and {b.node}"
        )
    verified = None
    infid = None
    if check:
        exclude = (chans_a[:2] + chans_b[:2]) if buffers_used == 0 else [chans_a[0], chans_b[0]]
        infid = scope.oracle_infidelity([(SWAP, [a, b])], exclude=exclude)
        verified = infid <= ATOL
    return scope.report(
        "distributed-swap",
        verified=verified,
        max_infidelity=infid,
        details={"register_buffers_used": buffers_used},
    )


# ---- multi-controlled gates -----------------------------------------------------


def nonlocal_multi_control(
    net: Network,
    controls: Sequence[QubitAddress],
    base: Any,
    target: QubitAddress,
    *,
    check: bool = True,
    tag: str = "mctrl",
) -> ProtocolReport:
    """Apply base on `target` controlled on qubits spread across nodes.

    Every remote control is shared onto the target node through an EPR
    pair, then immediately swapped off the channel qubit onto a spare |0>
    register qubit so one channel slot serves all of them. The multi-
    controlled gate runs locally, the shares are reclaimed, and ancillas
    and channel qubits are reset. Costs 1 ebit + 2 cbits per remote
    control.
    """
    controls = list(controls)
    if not controls:
        raise ValueError("need at least one control qubit")
    if len({*controls, target}) != len(controls) + 1:
        raise ValueError("controls and target must be distinct qubits")
    t_node = target.node
    remote = [c for c in controls if c.node != t_node]

    ancillas: list[QubitAddress] = []
    if remote:
        reserved = {target, *controls}
        for q in net.addresses(t_node, REGISTER):
            if q not in reserved and net.qubit_is(q, 0):
                ancillas.append(q)
            if len(ancillas) == len(remote):
                break
        if len(ancillas) < len(remote):
            raise CapacityError(
                f"{t_node} has {len(ancillas)} spare |0> register qubits but "
                f"{len(remote)} distributed controls need one each; decompose "
                f"the gate instead (see decompose_multi_control_x)"
            )

    scope = _Scope(net)
    line_for: dict[QubitAddress, QubitAddress] = {c: c for c in controls}
    shares: list[tuple[QubitAddress, QubitAddress, QubitAddress]] = []
    for ctrl, anc in zip(remote, ancillas):
        e_c = _free_zero_channel(net, ctrl.node)
        e_t = _free_zero_channel(net, t_node)
        net.preshare_epr(e_c, e_t)
        cat_entangler(net, ctrl, (e_c, e_t), tag=f"{tag}:{ctrl.node}")
        net.local_apply(SWAP, [e_t, anc])
        line_for[ctrl] = anc
        shares.append((ctrl, anc, e_c))

    lines = [line_for[c] for c in controls]
    net.local_apply(make_controlled(ControlledSpec(len(controls), base)), [*lines, target])

    for ctrl, anc, e_c in shares:
        recs = cat_shrink(net, (ctrl, anc), ctrl, tag=f"{tag}:{ctrl.node}")
        reset_channel_qubits(net, [recs[0], net.last_record(e_c)])

    verified = None
    infid = None
    if check:
        ideal_gate = make_controlled(ControlledSpec(len(controls), base))
        exclude = [e_c for _, _, e_c in shares]
        infid = scope.oracle_infidelity([(ideal_gate, [*controls, target])], exclude=exclude)
        verified = infid <= ATOL
    return scope.report(
        "nonlocal-multi-control",
        verified=verified,
        max_infidelity=infid,
        details={"remote_controls": len(remote)},
    )


def decompose_multi_control_x(
    net: Network,
    controls: Sequence[QubitAddress],
    ancilla: QubitAddress,
    target: QubitAddress,
    *,
    epr: tuple[QubitAddress, QubitAddress] | None = None,
    auto_establish: bool = True,
    check: bool = True,
    tag: str = "c4x",
) -> ProtocolReport:
    """Four-fold controlled X on six qubits without a wide controlled gate.

    Co-located layout: the standard borrowed-ancilla alternation of two
    double-controlled and two triple-controlled X gates; works for any
    ancilla state and restores it.

    Split layout (controls[0], controls[1], ancilla on one node;
    controls[2], controls[3], target on the other): the AND of the first
    two controls is written onto one EPR half and announced onto the other,
    the receiving node runs its triple-controlled X locally, and releasing
    the shared line costs one X-basis measurement plus a conditional
    CZ back on the first two controls. One ebit, two cbits, the ancilla is
    not touched at all, and both channel qubits end reset.
    """
    controls = list(controls)
    if len(controls) != 4:
        raise ValueError(f"exactly 4 control qubits required, got {len(controls)}")
    c1, c2, c3, c4 = controls
    six = [c1, c2, c3, c4, ancilla, target]
    if len(set(six)) != 6:
        raise ValueError("controls, ancilla, and target must be 6 distinct qubits")
    nodes = {q.node for q in six}

    if len(nodes) == 1:
        scope = _Scope(net)
        net.local_apply(TOFFOLI, [c1, c2, ancilla])
        net.local_apply(C3X, [c3, c4, ancilla, target])
        net.local_apply(TOFFOLI, [c1, c2, ancilla])
        net.local_apply(C3X, [c3, c4, ancilla, target])
        variant = "monolithic"
        exclude: list[QubitAddress] = []
    elif (
        len(nodes) == 2
        and c1.node == c2.node == ancilla.node
        and c3.node == c4.node == target.node
    ):
        top, bottom = c1.node, target.node
        e_top, e_bot = _resolve_epr(net, top, bottom, epr, auto_establish)
        scope = _Scope(net)
        net.local_apply(TOFFOLI, [c1, c2, e_top])
        r1 = net.measure(e_top)
        net.ledger.ebits_consumed += 1  # the pair is used up carrying the AND value
        msg1 = net.send_cbit(ClassicalMessage(top, (bottom,), r1.outcome, f"{tag}:and"))
        net.classically_controlled_apply(msg1, X, e_bot)
        net.local_apply(C3X, [c3, c4, e_bot, target])
        r2 = net.measure_x(e_bot)
        msg2 = net.send_cbit(ClassicalMessage(bottom, (top,), r2.outcome, f"{tag}:phase"))
        net.classically_controlled_apply(msg2, CZ, [c1, c2])
        reset_channel_qubits(net, [r1, r2])
        variant = "distributed"
        exclude = [e_top, e_bot]
    else:
        raise ValueError(
            "supported layouts: all six qubits on one node, or controls[0:2] + "
            "ancilla on one node and controls[2:4] + target on another"
        )

    verified = None
    infid = None
    if check:
        infid = scope.oracle_infidelity([(C4X, [c1, c2, c3, c4, target])], exclude=exclude)
        verified = infid <= ATOL
    return scope.report(
        "decompose-c4x",
        verified=verified,
        max_infidelity=infid,
        details={"variant": variant},
    )
