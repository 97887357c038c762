"""Deterministic two-phase-commit simulation over partitioned resource managers.

Nodes exchange messages through seeded FIFO queues; a crash makes a node
non-responsive at a named protocol step.  Blocked in-doubt participants
resolve through a termination query (presumed abort), and crashed nodes run
the same termination logic on recovery, so every run ends with either all
legs applied or none.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .ledger import World
from .transactions import ABORTED, COMMITTED, PREPARED, Transaction, TransactionManager

PHASES = ("prepare", "escrow", "vote", "decision", "apply")
DEFAULT_TIMEOUT_STEPS = 50


@dataclass(frozen=True)
class WireMsg:
    kind: str  # prepare | vote | commit | abort | ack
    txn_id: str
    sender: str
    receiver: str
    payload: object = None


class _Crashable:
    def __init__(self, node_id: str, crash_points: frozenset[str]):
        self.id = node_id
        self.crash_points = crash_points
        self.crashed = False

    def maybe_crash(self, phase: str) -> bool:
        if not self.crashed and phase in self.crash_points:
            self.crashed = True
        return self.crashed


class ParticipantNode(_Crashable):
    """Resource manager authoritative for one partition of the world."""

    def __init__(self, node_id: str, world: World, crash_points=frozenset()):
        super().__init__(node_id, crash_points)
        self.world = world
        self.tm = TransactionManager()
        self.pending: dict[str, Transaction] = {}
        self.decisions: dict[str, str] = {}
        self.prepare_deadline: dict[str, int] = {}

    def handle(self, msg: WireMsg, net: "SimNet") -> None:
        if self.crashed:
            return
        if msg.kind == "prepare":
            if self.maybe_crash("prepare"):
                return
            txn = msg.payload
            self.pending[msg.txn_id] = txn
            staged, phase = self.tm.prepare(self.world, txn)
            self.world = staged
            if self.maybe_crash("escrow"):
                return
            vote = "yes" if phase == PREPARED else "no"
            if phase != PREPARED:
                self.decisions[msg.txn_id] = ABORTED
            else:
                self.prepare_deadline[msg.txn_id] = net.clock + net.timeout
            net.send(WireMsg("vote", msg.txn_id, self.id, msg.sender, vote))
            self.maybe_crash("vote")
        elif msg.kind in ("commit", "abort"):
            if self.maybe_crash("decision"):
                return
            self.apply_decision(msg.txn_id, COMMITTED if msg.kind == "commit" else ABORTED)
            if self.maybe_crash("apply"):
                return
            net.send(WireMsg("ack", msg.txn_id, self.id, msg.sender))

    def apply_decision(self, txn_id: str, decision: str) -> None:
        if self.decisions.get(txn_id) is not None:
            return
        txn = self.pending.get(txn_id)
        self.decisions[txn_id] = decision
        self.prepare_deadline.pop(txn_id, None)
        if txn is None:
            return
        if self.tm.phase(txn) == PREPARED:
            if decision == COMMITTED:
                self.world = self.tm.commit(self.world, txn)
            else:
                self.world = self.tm.abort(self.world, txn)


class CoordinatorNode(_Crashable):
    def __init__(self, node_id: str, crash_points=frozenset()):
        super().__init__(node_id, crash_points)
        self.involved: dict[str, tuple[str, ...]] = {}
        self.votes: dict[str, dict[str, str]] = {}
        self.decision_log: dict[str, str] = {}
        self.vote_deadline: dict[str, int] = {}

    def start(self, txn_id: str, parts: dict[str, Transaction], net: "SimNet") -> None:
        if self.maybe_crash("prepare"):
            return
        self.involved[txn_id] = tuple(sorted(parts))
        self.votes[txn_id] = {}
        self.vote_deadline[txn_id] = net.clock + net.timeout
        for node_id in sorted(parts):
            net.send(WireMsg("prepare", txn_id, self.id, node_id, parts[node_id]))

    def handle(self, msg: WireMsg, net: "SimNet") -> None:
        if self.crashed:
            return
        if msg.kind == "vote":
            self.votes[msg.txn_id][msg.sender] = msg.payload
            if len(self.votes[msg.txn_id]) == len(self.involved[msg.txn_id]):
                decision = (
                    COMMITTED
                    if all(v == "yes" for v in self.votes[msg.txn_id].values())
                    else ABORTED
                )
                self.decide(msg.txn_id, decision, net)

    def decide(self, txn_id: str, decision: str, net: "SimNet") -> None:
        # the decision is logged before any decision message goes out
        self.decision_log[txn_id] = decision
        self.vote_deadline.pop(txn_id, None)
        kind = "commit" if decision == COMMITTED else "abort"
        for i, node_id in enumerate(self.involved[txn_id]):
            net.send(WireMsg(kind, txn_id, self.id, node_id))
            if i == 0 and self.maybe_crash("decision"):
                return
        self.maybe_crash("apply")

    def check_timeout(self, net: "SimNet") -> None:
        if self.crashed:
            return
        for txn_id in list(self.vote_deadline):
            if net.clock >= self.vote_deadline[txn_id]:
                self.decide(txn_id, ABORTED, net)


@dataclass
class SimNet:
    participants: dict[str, ParticipantNode]
    coordinator: CoordinatorNode
    seed: int = 0
    timeout: int = DEFAULT_TIMEOUT_STEPS
    clock: int = 0
    queues: dict[tuple[str, str], deque] = field(default_factory=dict)
    trace: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.rng = random.Random(self.seed)

    def node(self, node_id: str):
        if node_id == self.coordinator.id:
            return self.coordinator
        return self.participants[node_id]

    def send(self, msg: WireMsg) -> None:
        self.queues.setdefault((msg.sender, msg.receiver), deque()).append(msg)

    def step(self) -> bool:
        """Deliver one message; returns False when all queues are empty."""
        ready = sorted(k for k, q in self.queues.items() if q)
        if not ready:
            return False
        key = ready[self.rng.randrange(len(ready))]
        msg = self.queues[key].popleft()
        self.clock += 1
        self.trace.append(
            f"t={self.clock} {msg.sender}->{msg.receiver} {msg.kind.capitalize()} txn={msg.txn_id}"
        )
        self.node(msg.receiver).handle(msg, self)
        return True

    def drain(self, step_cap: int = 10_000) -> None:
        steps = 0
        while steps < step_cap:
            if not self.step():
                # quiescent: let pending timers fire, then re-check for traffic
                self.clock += self.timeout
                self.coordinator.check_timeout(self)
                if not any(self.queues.values()):
                    return
            steps += 1


def make_net(
    partitions: dict[str, World],
    seed: int = 0,
    fault_plan: list[tuple[str, str]] | None = None,
    coordinator_id: str = "coord",
    timeout: int = DEFAULT_TIMEOUT_STEPS,
) -> SimNet:
    plan: dict[str, set[str]] = {}
    for node_id, phase in fault_plan or []:
        plan.setdefault(node_id, set()).add(phase)
    participants = {
        node_id: ParticipantNode(node_id, world, frozenset(plan.get(node_id, ())))
        for node_id, world in partitions.items()
    }
    coordinator = CoordinatorNode(coordinator_id, frozenset(plan.get(coordinator_id, ())))
    return SimNet(participants, coordinator, seed=seed, timeout=timeout)


def split_legs(net: SimNet, txn: Transaction) -> dict[str, Transaction]:
    """Group legs by the partition holding the sender's account (and recipient's)."""
    by_node: dict[str, list] = {}
    for leg in txn.legs:
        home = None
        for node_id, node in net.participants.items():
            accounts = node.world.state.control
            if World.account_rid(leg.frm) in accounts:
                if World.account_rid(leg.to) not in accounts:
                    raise ValueError(
                        f"leg {leg.frm}->{leg.to} spans partitions; each leg must be local"
                    )
                home = node_id
                break
        if home is None:
            raise ValueError(f"no partition owns account of {leg.frm}")
        by_node.setdefault(home, []).append(leg)
    return {
        node_id: Transaction(txn.id, tuple(legs)) for node_id, legs in by_node.items()
    }


def _resolve(net: SimNet, node: ParticipantNode, txn_id: str) -> None:
    """Termination protocol: learn the decision or presume abort."""
    if node.decisions.get(txn_id) is not None:
        return
    decision = net.coordinator.decision_log.get(txn_id)
    source = net.coordinator.id
    if decision is None or net.coordinator.crashed:
        decision = None
        for other in net.participants.values():
            if other.id != node.id and other.decisions.get(txn_id) == COMMITTED:
                decision, source = COMMITTED, other.id
                break
    if decision is None:
        decision, source = ABORTED, "presumed-abort"
    net.trace.append(f"t={net.clock} {node.id} resolves txn={txn_id} {decision} via {source}")
    node.apply_decision(txn_id, decision)


def run_txn(net: SimNet, coordinator_id: str, txn: Transaction) -> tuple[str, dict[str, World]]:
    """Drive one transaction to a global outcome, including crash recovery."""
    if coordinator_id != net.coordinator.id:
        raise ValueError(f"unknown coordinator {coordinator_id}")
    parts = split_legs(net, txn)
    net.coordinator.start(txn.id, parts, net)
    net.drain()
    # blocked survivors resolve via the termination protocol
    for node in net.participants.values():
        if not node.crashed and txn.id in node.pending:
            _resolve(net, node, txn.id)
    # crashed nodes recover and run the same termination logic
    for node in net.participants.values():
        if node.crashed:
            node.crashed = False
            net.trace.append(f"t={net.clock} {node.id} recovers")
            if txn.id in node.pending:
                _resolve(net, node, txn.id)
    net.drain()
    committed = any(
        node.decisions.get(txn.id) == COMMITTED for node in net.participants.values()
    )
    outcome = COMMITTED if committed else ABORTED
    return outcome, {node_id: node.world for node_id, node in net.participants.items()}


def enumerate_fault_points(
    txn: Transaction | None, nodes: list[str], phases: tuple[str, ...] = PHASES
) -> list[list[tuple[str, str]]]:
    """One single-crash plan per (node, protocol step) pair."""
    if txn is None or not getattr(txn, "legs", ()):
        return []
    return [[(node_id, phase)] for node_id in nodes for phase in phases]
