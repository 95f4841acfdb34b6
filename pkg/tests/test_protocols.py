"""Composite protocol contracts: ledgers, oracles, hygiene, integration."""

import numpy as np
import pytest

from catnet import qstate
from catnet.errors import (
    CannotResetError,
    CapacityError,
    LocalityError,
    PreconditionError,
    ResourceError,
)
from catnet.gates import CNOT, H, TOFFOLI, X, Z, ControlledSpec, make_controlled, make_rk
from catnet.network import CHANNEL, Network
from catnet.protocols import (
    C4X,
    decompose_multi_control_x,
    distributed_em,
    distributed_swap,
    em_channel_requirements,
    establish_epr_exchange,
    nonlocal_cnot,
    nonlocal_controlled_sequence,
    nonlocal_multi_control,
    parallel_distributed_control,
    reset_channel_qubits,
    teleport_with_reset,
)

SQRT2_INV = 1 / np.sqrt(2)


def embed(matrix, n, targets):
    """Direct basis-index embedding for oracle states (independent of apply_gate)."""
    dim = 2**n
    arity = len(targets)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        sub = 0
        for t in targets:
            sub = (sub << 1) | ((col >> (n - 1 - t)) & 1)
        for sub_out in range(2**arity):
            amp = matrix[sub_out, sub]
            if amp == 0:
                continue
            row = col
            for j, t in enumerate(targets):
                bit = (sub_out >> (arity - 1 - j)) & 1
                row = (row & ~(1 << (n - 1 - t))) | (bit << (n - 1 - t))
            out[row, col] += amp
    return out


def marginal_fidelity(net, addrs, expected):
    rho = qstate.reduced_density_matrix(net.state, [net.global_index(a) for a in addrs])
    expected = np.asarray(expected, dtype=complex)
    expected = expected / np.linalg.norm(expected)
    return float(np.real(expected.conj() @ rho @ expected))


def random_unitary(dim, rng):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# ---- establish_epr_exchange ------------------------------------------------


def test_establish_creates_two_pairs():
    net = Network([("A", 1, 2), ("B", 1, 2)], seed=0)
    pairs, report = establish_epr_exchange(net, "A", "B")
    assert len(pairs) == 2
    for qa, qb in pairs:
        assert {qa.node, qb.node} == {"A", "B"}
        assert marginal_fidelity(net, [qa, qb], [SQRT2_INV, 0, 0, SQRT2_INV]) > 1 - 1e-10
    assert report.ledger.qubits_transported == 2
    assert report.ledger.ebits_consumed == 0  # established, not consumed
    assert report.verified


def test_establish_rate_one_pair_per_transport():
    """Repeating over fresh slots: 2k pairs for 2k transports."""
    net = Network([("A", 0, 4), ("B", 0, 4)], seed=0)
    establish_epr_exchange(net, "A", "B", slots_a=(0, 1), slots_b=(0, 1))
    pairs, _ = establish_epr_exchange(net, "A", "B", slots_a=(2, 3), slots_b=(2, 3))
    assert net.ledger.qubits_transported == 4
    assert len(pairs) == 2


def test_establish_requires_clean_channels():
    net = Network([("A", 1, 2), ("B", 1, 2)])
    net.local_apply(X, [net.chan("A", 1)])
    with pytest.raises(PreconditionError):
        establish_epr_exchange(net, "A", "B")


# ---- reset_channel_qubits ------------------------------------------------------


def test_reset_flips_measured_ones():
    net = Network([("A", 1, 2)], seed=0)
    net.local_apply(X, [net.chan("A", 0)])
    r0 = net.measure(net.chan("A", 0))  # |1>
    r1 = net.measure(net.chan("A", 1))  # |0>
    rounds_before = net.ledger.rounds
    reset_channel_qubits(net, [r0, r1])
    assert net.qubit_is(net.chan("A", 0), 0)
    assert net.qubit_is(net.chan("A", 1), 0)
    assert net.ledger.rounds - rounds_before == 1  # corrections batch into one round


def test_reset_requires_a_record():
    net = Network([("A", 1, 1)])
    with pytest.raises(CannotResetError):
        reset_channel_qubits(net, [None])


def test_reset_rejects_stale_record():
    """No-deletion: a qubit that moved on since its measurement cannot be
    erased by bookkeeping."""
    net = Network([("A", 1, 1)], seed=0)
    net.local_apply(H, [net.chan("A")])
    rec = net.measure(net.chan("A"), forced=0)
    net.local_apply(H, [net.chan("A")])  # now |+>, not the recorded |0>
    with pytest.raises(CannotResetError):
        reset_channel_qubits(net, [rec])


def test_channel_hygiene_cycle():
    """Gate, reset, re-establish on the same slots, gate again."""
    net = Network([("A", 1, 2), ("B", 1, 2)], seed=3)
    a, b = net.reg("A"), net.reg("B")
    net.local_apply(H, [a])
    pairs, _ = establish_epr_exchange(net, "A", "B")
    nonlocal_cnot(net, a, b, epr=pairs[0])
    nonlocal_cnot(net, a, b, epr=(pairs[1][1], pairs[1][0]))
    channels = net.addresses(pool=CHANNEL)
    reset_channel_qubits(net, [net.last_record(c) for c in channels])
    for c in channels:
        assert net.qubit_is(c, 0)
    pairs, report = establish_epr_exchange(net, "A", "B")
    assert report.verified
    rep = nonlocal_cnot(net, a, b, epr=pairs[0])
    assert rep.verified


# ---- nonlocal_cnot ------------------------------------------------------------


def test_nonlocal_cnot_frozen_amplitudes():
    """0.6|0>+0.8|1> control, |0> target -> 0.6|00>+0.8|11>, every branch."""
    for branch in range(4):
        net = Network([("A", 1, 1), ("B", 1, 1)])
        ctrl, tgt = net.reg("A"), net.reg("B")
        net.inject_state([ctrl], np.array([0.6, 0.8]))
        net.force_outcomes([(branch >> 1) & 1, branch & 1])
        rep = nonlocal_cnot(net, ctrl, tgt, auto_establish=True)
        assert rep.verified
        assert marginal_fidelity(net, [ctrl, tgt], [0.6, 0, 0, 0.8]) > 1 - 1e-10


def test_nonlocal_cnot_basis_example():
    net = Network([("A", 1, 1), ("B", 1, 1)], seed=1)
    ctrl, tgt = net.reg("A"), net.reg("B")
    net.local_apply(X, [ctrl])
    net.local_apply(X, [tgt])
    nonlocal_cnot(net, ctrl, tgt, auto_establish=True)
    assert net.qubit_is(ctrl, 1)
    assert net.qubit_is(tgt, 0)


def test_nonlocal_cnot_ledger_exact():
    net = Network([("A", 1, 1), ("B", 1, 1)], seed=0)
    rep = nonlocal_cnot(net, net.reg("A"), net.reg("B"), auto_establish=True)
    led = rep.ledger.as_dict()
    assert (led["ebits"], led["cbits"], led["qubits_transported"]) == (1, 2, 0)


def test_nonlocal_cnot_needs_entanglement():
    net = Network([("A", 1, 1), ("B", 1, 1)])
    with pytest.raises(ResourceError):
        nonlocal_cnot(net, net.reg("A"), net.reg("B"))


def test_nonlocal_cnot_rejects_mismatched_pair():
    net = Network([("A", 1, 1), ("B", 1, 1), ("C", 1, 1)])
    net.preshare_epr(net.chan("A"), net.chan("C"))
    with pytest.raises(ValueError):
        nonlocal_cnot(net, net.reg("A"), net.reg("B"), epr=(net.chan("A"), net.chan("C")))


# ---- nonlocal_controlled_sequence ------------------------------------------------


def test_controlled_sequence_matches_product_oracle():
    """k=3 sequence U1, U2, CNOT distributed once."""
    rng = np.random.default_rng(7)
    u1 = qstate.GateMatrix(random_unitary(2, rng))
    u2 = qstate.GateMatrix(random_unitary(2, rng))
    for branch in range(4):
        net = Network([("A", 1, 1), ("B", 2, 1)])
        ctrl, b0, b1 = net.reg("A"), net.reg("B", 0), net.reg("B", 1)
        amps = qstate.random_state(3, rng).amplitudes
        net.inject_state([ctrl, b0, b1], amps)
        net.force_outcomes([(branch >> 1) & 1, branch & 1])
        rep = nonlocal_controlled_sequence(
            net,
            ctrl,
            [(u1, [b0]), (u2, [b1]), (CNOT, [b0, b1])],
            auto_establish=True,
        )
        assert rep.verified
        assert rep.details["gate_count"] == 3
        led = rep.ledger.as_dict()
        assert (led["ebits"], led["cbits"]) == (1, 2)
        ideal = np.eye(8, dtype=complex)
        for g, tg in [(u1, [1]), (u2, [2]), (CNOT, [1, 2])]:
            cg = make_controlled(ControlledSpec(1, g))
            ideal = embed(cg.matrix, 3, [0] + tg) @ ideal
        assert marginal_fidelity(net, [ctrl, b0, b1], ideal @ amps) > 1 - 1e-10


def test_identity_sequence_still_costs_the_distribution():
    from catnet.gates import IDENTITY

    net = Network([("A", 1, 1), ("B", 1, 1)], seed=0)
    ctrl, tgt = net.reg("A"), net.reg("B")
    rep = nonlocal_controlled_sequence(
        net, ctrl, [(IDENTITY, [tgt]), (IDENTITY, [tgt])], auto_establish=True
    )
    led = rep.ledger.as_dict()
    assert (led["ebits"], led["cbits"]) == (1, 2)
    assert net.qubit_is(tgt, 0)


def test_sequence_rejects_offnode_targets():
    net = Network([("A", 1, 1), ("B", 1, 1), ("C", 1, 1)])
    net.preshare_epr(net.chan("A"), net.chan("B"))
    with pytest.raises(LocalityError):
        nonlocal_controlled_sequence(
            net,
            net.reg("A"),
            [(CNOT, [net.reg("B"), net.reg("C")])],
            epr=(net.chan("A"), net.chan("B")),
        )


@pytest.mark.parametrize("k", [1, 2, 5, 10])
def test_amortized_cost_is_flat(k):
    rng = np.random.default_rng(k)
    net = Network([("A", 1, 1), ("B", 2, 1)], seed=k)
    ctrl, b0, b1 = net.reg("A"), net.reg("B", 0), net.reg("B", 1)
    gates = []
    for j in range(k):
        if j % 3 == 2:
            gates.append((CNOT, [b0, b1]))
        else:
            gates.append((make_rk(2 + j % 3), [b0 if j % 2 == 0 else b1]))
    net.inject_state([ctrl, b0, b1], qstate.random_state(3, rng).amplitudes)
    rep = nonlocal_controlled_sequence(net, ctrl, gates, auto_establish=True)
    assert rep.verified
    led = rep.ledger.as_dict()
    assert (led["ebits"], led["cbits"]) == (1, 2)


# ---- parallel_distributed_control ------------------------------------------------


def test_parallel_control_three_parts():
    rng = np.random.default_rng(4)
    u1, u2, u3 = (random_unitary(d, rng) for d in (4, 8, 4))
    net = Network([("C", 1, 1), ("P1", 2, 1), ("P2", 3, 1), ("P3", 2, 1)], seed=0)
    ctrl = net.reg("C")
    t1 = [net.reg("P1", j) for j in range(2)]
    t2 = [net.reg("P2", j) for j in range(3)]
    t3 = [net.reg("P3", j) for j in range(2)]
    amps = qstate.random_state(8, rng).amplitudes
    net.inject_state([ctrl, *t1, *t2, *t3], amps)
    rep = parallel_distributed_control(
        net,
        ctrl,
        [
            ("P1", qstate.GateMatrix(u1), t1),
            ("P2", qstate.GateMatrix(u2), t2),
            ("P3", qstate.GateMatrix(u3), t3),
        ],
        auto_establish=True,
    )
    assert rep.verified
    assert rep.details["controlled_rounds"] == 1
    on = np.zeros((2, 2))
    on[1, 1] = 1.0
    ideal = np.kron(np.eye(2) - on, np.eye(128)) + np.kron(on, np.kron(np.kron(u1, u2), u3))
    assert marginal_fidelity(net, [ctrl, *t1, *t2, *t3], ideal @ amps) > 1 - 1e-10


def test_parallel_control_idle_when_control_zero():
    net = Network([("C", 1, 1), ("P1", 1, 1), ("P2", 1, 1)], seed=2)
    rep = parallel_distributed_control(
        net,
        net.reg("C"),
        [("P1", X, [net.reg("P1")]), ("P2", X, [net.reg("P2")])],
        auto_establish=True,
    )
    assert rep.verified
    assert net.qubit_is(net.reg("P1"), 0)
    assert net.qubit_is(net.reg("P2"), 0)


def test_parallel_control_rejects_duplicate_nodes():
    net = Network([("C", 1, 1), ("P1", 2, 1)])
    with pytest.raises(ValueError):
        parallel_distributed_control(
            net,
            net.reg("C"),
            [("P1", X, [net.reg("P1", 0)]), ("P1", X, [net.reg("P1", 1)])],
            auto_establish=True,
        )


# ---- distributed_em -----------------------------------------------------------


def test_em_channel_requirements_table():
    assert em_channel_requirements(4, "linear") == [1, 2, 2, 1]
    assert em_channel_requirements(4, "binary-tree") == [2, 2, 1, 1]
    assert em_channel_requirements(8, "binary-tree")[0] == 3  # root holds log2(8) pairs


def test_distributed_em_linear_m3():
    net = Network([("N0", 1, 1), ("N1", 1, 2), ("N2", 1, 1)], seed=0)
    rep = distributed_em(net, ["N0", "N1", "N2"], "linear")
    assert rep.verified
    assert rep.ledger.ebits_consumed == 2
    regs = [net.reg(f"N{i}") for i in range(3)]
    assert marginal_fidelity(net, regs, [SQRT2_INV, 0, 0, 0, 0, 0, 0, SQRT2_INV]) > 1 - 1e-10


def test_distributed_em_tree_m4_round_count():
    net = Network([("N0", 1, 2), ("N1", 1, 2), ("N2", 1, 1), ("N3", 1, 1)], seed=0)
    rep = distributed_em(net, ["N0", "N1", "N2", "N3"], "binary-tree")
    assert rep.verified
    assert rep.ledger.ebits_consumed == 3
    assert rep.rounds == 2  # two stages of non-local CNOTs


def test_distributed_em_capacity_checked():
    net = Network([("N0", 1, 1), ("N1", 1, 1), ("N2", 1, 1), ("N3", 1, 1)])
    with pytest.raises(CapacityError):
        distributed_em(net, ["N0", "N1", "N2", "N3"], "binary-tree")  # N0 needs 2


def test_distributed_em_rejects_single_node():
    net = Network([("N0", 1, 2)])
    with pytest.raises(ValueError):
        distributed_em(net, ["N0"])


def test_distributed_em_channels_reset_after():
    net = Network([("N0", 1, 2), ("N1", 1, 2), ("N2", 1, 1), ("N3", 1, 1)], seed=5)
    distributed_em(net, ["N0", "N1", "N2", "N3"], "binary-tree")
    for addr in net.addresses(pool=CHANNEL):
        assert net.qubit_is(addr, 0)


# ---- teleport_with_reset ---------------------------------------------------------


def test_teleport_with_reset_frozen():
    for branch in range(4):
        net = Network([("A", 1, 1), ("B", 1, 1)])
        src, dst = net.reg("A"), net.reg("B")
        net.inject_state([src], np.array([0.6, 0.8]))
        net.preshare_epr(net.chan("A"), net.chan("B"))
        net.force_outcomes([(branch >> 1) & 1, branch & 1])
        rep = teleport_with_reset(net, src, (net.chan("A"), net.chan("B")), dst)
        assert rep.verified
        assert marginal_fidelity(net, [dst], [0.6, 0.8]) > 1 - 1e-10
        assert net.qubit_is(src, 0)
        assert net.qubit_is(net.chan("A"), 0)
        assert net.qubit_is(net.chan("B"), 0)


def test_teleport_with_reset_rejects_dirty_empty():
    net = Network([("A", 1, 1), ("B", 1, 1)])
    net.preshare_epr(net.chan("A"), net.chan("B"))
    net.local_apply(X, [net.reg("B")])
    with pytest.raises(PreconditionError):
        teleport_with_reset(net, net.reg("A"), (net.chan("A"), net.chan("B")), net.reg("B"))


def test_teleport_with_reset_requires_remote_register():
    net = Network([("A", 2, 1), ("B", 1, 1)])
    net.preshare_epr(net.chan("A"), net.chan("B"))
    with pytest.raises(ValueError, match="receiving node"):
        teleport_with_reset(net, net.reg("A", 0), (net.chan("A"), net.chan("B")), net.reg("A", 1))


# ---- distributed_swap ------------------------------------------------------------


def test_distributed_swap_random_pairs():
    rng = np.random.default_rng(31)
    for trial in range(3):
        amps = qstate.random_state(2, rng).amplitudes
        net = Network([("A", 1, 2), ("B", 1, 2)], seed=trial)
        a, b = net.reg("A"), net.reg("B")
        net.inject_state([a, b], amps)
        rep = distributed_swap(net, a, b)
        assert rep.verified
        swapped = embed(np.eye(4)[[0, 2, 1, 3]], 2, [0, 1]) @ amps
        assert marginal_fidelity(net, [a, b], swapped) > 1 - 1e-10
        assert rep.details["register_buffers_used"] == 0
        led = rep.ledger.as_dict()
        assert (led["ebits"], led["cbits"]) == (2, 4)


def test_distributed_swap_basis():
    net = Network([("A", 1, 2), ("B", 1, 2)], seed=0)
    a, b = net.reg("A"), net.reg("B")
    net.local_apply(X, [a])
    distributed_swap(net, a, b)
    assert net.qubit_is(a, 0)
    assert net.qubit_is(b, 1)


def test_distributed_swap_fallback_uses_register_buffer():
    net = Network([("A", 2, 1), ("B", 1, 1)], seed=0)
    a, b = net.reg("A", 0), net.reg("B")
    net.local_apply(X, [a])
    rep = distributed_swap(net, a, b)
    assert rep.verified
    assert rep.details["register_buffers_used"] == 1
    assert net.qubit_is(a, 0)
    assert net.qubit_is(b, 1)


def test_distributed_swap_capacity_error():
    net = Network([("A", 1, 1), ("B", 1, 1)])
    with pytest.raises(CapacityError):
        distributed_swap(net, net.reg("A"), net.reg("B"))


# ---- nonlocal_multi_control --------------------------------------------------------


def test_multi_control_matches_toffoli():
    rng = np.random.default_rng(13)
    amps = qstate.random_state(3, rng).amplitudes
    net = Network([("C1", 1, 1), ("C2", 1, 1), ("T", 3, 1)], seed=0)
    c1, c2, t = net.reg("C1"), net.reg("C2"), net.reg("T", 0)
    net.inject_state([c1, c2, t], amps)
    rep = nonlocal_multi_control(net, [c1, c2], X, t)
    assert rep.verified
    led = rep.ledger.as_dict()
    assert (led["ebits"], led["cbits"]) == (2, 4)
    want = embed(TOFFOLI.matrix, 3, [0, 1, 2]) @ amps
    assert marginal_fidelity(net, [c1, c2, t], want) > 1 - 1e-10
    # ancilla slots and channels all returned to |0>
    for addr in [net.reg("T", 1), net.reg("T", 2), *net.addresses(pool=CHANNEL)]:
        assert net.qubit_is(addr, 0)


def test_multi_control_all_ones_applies_base():
    net = Network([("C1", 1, 1), ("C2", 1, 1), ("T", 3, 1)], seed=0)
    c1, c2, t = net.reg("C1"), net.reg("C2"), net.reg("T", 0)
    for q in (c1, c2):
        net.local_apply(X, [q])
    nonlocal_multi_control(net, [c1, c2], X, t)
    assert net.qubit_is(t, 1)


def test_multi_control_capacity_suggests_decomposition():
    net = Network([("C1", 1, 1), ("C2", 1, 1), ("T", 1, 1)])
    with pytest.raises(CapacityError, match="decompose_multi_control_x"):
        nonlocal_multi_control(net, [net.reg("C1"), net.reg("C2")], X, net.reg("T"))


# ---- decompose_multi_control_x --------------------------------------------------


def test_c4x_monolithic_random_state():
    rng = np.random.default_rng(40)
    amps = qstate.random_state(6, rng).amplitudes
    net = Network([("M", 6, 0)])
    qs = [net.reg("M", j) for j in range(6)]
    net.inject_state(qs, amps)
    rep = decompose_multi_control_x(net, qs[:4], qs[4], qs[5])
    assert rep.verified
    assert rep.details["variant"] == "monolithic"
    want = embed(C4X.matrix, 6, [0, 1, 2, 3, 5]) @ amps
    assert marginal_fidelity(net, qs, want) > 1 - 1e-10


def test_c4x_all_controls_on():
    net = Network([("M", 6, 0)])
    qs = [net.reg("M", j) for j in range(6)]
    for q in qs[:4]:
        net.local_apply(X, [q])
    decompose_multi_control_x(net, qs[:4], qs[4], qs[5])
    assert net.qubit_is(qs[5], 1)
    assert net.qubit_is(qs[4], 0)  # ancilla restored


def test_c4x_distributed_ledger():
    net = Network([("TOP", 3, 1), ("BOT", 3, 1)], seed=0)
    c1, c2, anc = net.reg("TOP", 0), net.reg("TOP", 1), net.reg("TOP", 2)
    c3, c4, tgt = net.reg("BOT", 0), net.reg("BOT", 1), net.reg("BOT", 2)
    rep = decompose_multi_control_x(net, [c1, c2, c3, c4], anc, tgt)
    assert rep.details["variant"] == "distributed"
    led = rep.ledger.as_dict()
    assert (led["ebits"], led["cbits"]) == (1, 2)
    for addr in net.addresses(pool=CHANNEL):
        assert net.qubit_is(addr, 0)


def test_c4x_rejects_unknown_layout():
    net = Network([("A", 2, 1), ("B", 2, 1), ("C", 2, 1)])
    with pytest.raises(ValueError):
        decompose_multi_control_x(
            net,
            [net.reg("A", 0), net.reg("A", 1), net.reg("B", 0), net.reg("B", 1)],
            net.reg("C", 0),
            net.reg("C", 1),
        )


# ---- integration: a shared qubit between two local sub-transformations ------------


def test_shared_qubit_travels_by_teleport():
    """Apply V1 on (x, s) at node A, ship s to B by teleport, apply V2 on
    (y, s) there, ship s back into its freed slot; compare against the
    monolithic product."""
    rng = np.random.default_rng(77)
    v1 = random_unitary(4, rng)
    v2 = random_unitary(4, rng)
    amps = qstate.random_state(3, rng).amplitudes  # on (x, s, y)
    for branch in range(16):
        bits = [(branch >> (3 - i)) & 1 for i in range(4)]
        net = Network([("A", 2, 1), ("B", 2, 1)])
        x, s = net.reg("A", 0), net.reg("A", 1)
        y, landing = net.reg("B", 0), net.reg("B", 1)
        net.inject_state([x, s, y], amps)
        net.force_outcomes(bits)

        net.local_apply(qstate.GateMatrix(v1), [x, s])
        net.preshare_epr(net.chan("A"), net.chan("B"))
        teleport_with_reset(net, s, (net.chan("A"), net.chan("B")), landing)
        net.local_apply(qstate.GateMatrix(v2), [y, landing])
        net.preshare_epr(net.chan("B"), net.chan("A"))
        teleport_with_reset(net, landing, (net.chan("B"), net.chan("A")), s)

        ideal = embed(v2, 3, [2, 1]) @ embed(v1, 3, [0, 1]) @ amps
        assert marginal_fidelity(net, [x, s, y], ideal) > 1 - 1e-10
        assert net.qubit_is(landing, 0)
