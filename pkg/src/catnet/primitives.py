"""Cat-state channel primitives.

Two operations carry all non-local behaviour in this package. The entangler
splices a control qubit into a shared cat state, so that several nodes hold
qubits that act as copies of the control for classical-basis purposes. The
shrink step (disentangler) releases members from such a group with X-basis
measurements and a single conditional phase fix, leaving the survivor(s)
carrying the original amplitudes.

Teleportation is the two composed back to back over an EPR pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EntanglementError
from .gates import CNOT, X, Z
from .network import ClassicalMessage, Network, QubitAddress
from .qstate import ATOL, MeasurementRecord


@dataclass(frozen=True)
class CatGroup:
    """A control plus the cat members now carrying its basis value.

    `measured` is the channel qubit consumed to set the group up; it is left
    in the classical state given by `record.outcome`.
    """

    members: tuple[QubitAddress, ...]
    measured: QubitAddress
    record: MeasurementRecord
    message: ClassicalMessage


def _member_rows(net: Network, addrs: Sequence[QubitAddress]) -> np.ndarray:
    """Amplitudes grouped by the bit pattern of the given qubits.

    Row b holds the amplitude slice where the listed qubits read the bits
    of b (first address = most significant).
    """
    idx = [net.global_index(a) for a in addrs]
    tensor = net.state.amplitudes.reshape((2,) * net.num_qubits)
    tensor = np.moveaxis(tensor, idx, range(len(idx)))
    return tensor.reshape(2 ** len(idx), -1)


def _require_correlated(net: Network, addrs: Sequence[QubitAddress], what: str) -> np.ndarray:
    """Check the qubits only ever read all-0 or all-1 together."""
    rows = _member_rows(net, addrs)
    mixed = np.linalg.norm(rows[1:-1])
    if mixed > ATOL:
        raise EntanglementError(
            f"{what} requires qubits {[str(a) for a in addrs]} to agree in the "
            f"classical basis; mixed patterns carry weight {mixed:.3e}"
        )
    return rows


def _require_fresh_cat(net: Network, addrs: Sequence[QubitAddress]) -> None:
    """Check the qubits hold (|0..0> + |1..1>)/sqrt(2), nothing else attached."""
    rows = _require_correlated(net, addrs, "the entangler")
    if np.linalg.norm(rows[0] - rows[-1]) > ATOL:
        raise EntanglementError(
            f"qubits {[str(a) for a in addrs]} are not in a fresh shared cat state "
            f"(the all-0 and all-1 branches differ)"
        )


def cat_entangler(
    net: Network,
    control: QubitAddress,
    cat: Sequence[QubitAddress],
    *,
    tag: str = "entangle",
) -> CatGroup:
    """Splice `control` into a shared cat state held at `cat`.

    cat[0] must sit on the control's node and is consumed: a CNOT copies the
    control onto it, it is measured, and the outcome is broadcast so every
    other member can flip itself to match the control. Afterwards control
    and cat[1:] form one correlated group carrying the control's amplitudes,
    and cat[0] is left in the announced classical state.

    Costs len(cat)-1 ebits and one cbit per distinct remote member node.
    """
    cat = list(cat)
    if len(cat) < 2:
        raise ValueError("the entangler needs a shared cat state of at least 2 qubits")
    seen = {control, *cat}
    if len(seen) != len(cat) + 1:
        raise ValueError("control and cat members must be distinct qubits")
    if cat[0].node != control.node:
        raise EntanglementError(
            f"one cat member must sit with the control ({control.node}); "
            f"got {cat[0]} instead"
        )
    _require_fresh_cat(net, cat)

    net.local_apply(CNOT, [control, cat[0]])
    rec = net.measure(cat[0])
    net.ledger.ebits_consumed += len(cat) - 1

    member_nodes: list[str] = []
    for a in cat[1:]:
        if a.node not in member_nodes:
            member_nodes.append(a.node)
    msg = net.send_cbit(
        ClassicalMessage(cat[0].node, tuple(member_nodes), rec.outcome, f"{tag}:broadcast")
    )
    with net.parallel_round():
        for member in cat[1:]:
            net.classically_controlled_apply(msg, X, member)

    return CatGroup((control, *cat[1:]), cat[0], rec, msg)


def cat_shrink(
    net: Network,
    members: Sequence[QubitAddress],
    keep: QubitAddress | Sequence[QubitAddress],
    *,
    tag: str = "shrink",
) -> list[MeasurementRecord]:
    """Release group members, leaving `keep` with the original amplitudes.

    The dropped qubits are measured in the X basis in one round; each node
    that measured sends the parity of its outcomes to the survivor's node,
    and a single conditional Z there repairs the sign. Only classical-basis
    agreement across `members` is needed, so this works even while the
    group is entangled with outside qubits.

    Costs one cbit per distinct remote measuring node. Dropped qubits end
    in |+> or |-> collapsed form, i.e. classical states after the H.
    """
    if isinstance(keep, QubitAddress):
        keep = [keep]
    members = list(members)
    keep = list(keep)
    if not keep:
        raise ValueError("at least one member must survive the shrink")
    for k in keep:
        if k not in members:
            raise ValueError(f"{k} is not a member of the group being shrunk")
    dropped = [m for m in members if m not in keep]
    if len(set(members)) != len(members):
        raise ValueError("duplicate addresses in group")
    if not dropped:
        return []  # keeping everything is the identity
    _require_correlated(net, members, "the disentangler")

    fix = keep[0]
    with net.parallel_round():
        records = [net.measure_x(d) for d in dropped]

    node_parity: dict[str, int] = {}
    for rec in records:
        node = rec.address.node
        node_parity[node] = node_parity.get(node, 0) ^ rec.outcome

    controls: list[ClassicalMessage | MeasurementRecord] = [
        rec for rec in records if rec.address.node == fix.node
    ]
    remote = [n for n in node_parity if n != fix.node]
    if remote:
        with net.parallel_round():
            for node in remote:
                controls.append(
                    net.send_cbit(
                        ClassicalMessage(node, (fix.node,), node_parity[node], f"{tag}:parity")
                    )
                )
    net.classically_controlled_apply(controls, Z, fix)
    return records


def cat_disentangler(
    net: Network,
    group: CatGroup,
    keep: QubitAddress | Sequence[QubitAddress] | None = None,
    *,
    tag: str = "shrink",
) -> list[MeasurementRecord]:
    """Shrink an entangled group created by cat_entangler.

    By default the original control survives and every spliced-in member is
    released, undoing the entangler's fan-out.
    """
    if keep is None:
        keep = group.members[0]
    return cat_shrink(net, group.members, keep, tag=tag)


def teleport(
    net: Network,
    source: QubitAddress,
    epr: tuple[QubitAddress, QubitAddress],
    *,
    tag: str = "teleport",
) -> tuple[MeasurementRecord, MeasurementRecord]:
    """Move the state at `source` onto epr[1] over a shared EPR pair.

    epr[0] must sit with the source. Entangle source into the pair, then
    shrink the group down to epr[1]. Afterwards epr[1] carries the state,
    while source and epr[0] are left in the classical states given by the
    two returned measurement records. Costs 1 ebit and 2 cbits.
    """
    group = cat_entangler(net, source, epr, tag=tag)
    dropped = cat_shrink(net, group.members, epr[1], tag=tag)
    return group.record, dropped[0]
