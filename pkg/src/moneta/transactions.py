"""All-or-nothing execution of multi-transfer transactions via escrow.

Escrow accounts are ordinary account resources controlled by a designated
transaction-manager agent, so conservation checks cover in-flight funds.
Leg validation follows list order; the first failure aborts and releases
every escrow already funded.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import Bundle
from .errors import MonetaError, WrongPhase
from .ledger import ACCOUNT, Transfer, World

ESCROW_AGENT = "txn-manager"

IDLE = "idle"
PREPARED = "prepared"
COMMITTED = "committed"
ABORTED = "aborted"


@dataclass(frozen=True)
class Transaction:
    id: str
    legs: tuple[Transfer, ...]

    def __post_init__(self):
        if not self.legs:
            raise ValueError("a transaction needs at least one leg")


def _escrow_rid(txn: Transaction, i: int) -> str:
    return f"escrow:{txn.id}:{i}"


class TransactionManager:
    """Tracks per-transaction phase; world states stay immutable values."""

    def __init__(self):
        self.phases: dict[str, str] = {}
        self.abort_causes: dict[str, MonetaError] = {}

    def phase(self, txn: Transaction) -> str:
        return self.phases.get(txn.id, IDLE)

    def prepare(self, world: World, txn: Transaction) -> tuple[World, str]:
        if self.phase(txn) != IDLE:
            raise WrongPhase(f"txn {txn.id} is {self.phase(txn)}, expected idle")
        world = world.with_agent(ESCROW_AGENT)
        staged = world
        try:
            for i, leg in enumerate(txn.legs):
                rid = _escrow_rid(txn, i)
                state = staged.state.create_resource(rid, ACCOUNT, ESCROW_AGENT)
                state = state.transfer_balance(
                    World.account_rid(leg.frm), rid, leg.bundle.normalized(world.registry)
                )
                staged = staged._with(state=state)
        except MonetaError as cause:
            # releasing the funded escrows restores the pre-prepare state
            self.phases[txn.id] = ABORTED
            self.abort_causes[txn.id] = cause
            return world, ABORTED
        self.phases[txn.id] = PREPARED
        return staged, PREPARED

    def commit(self, world: World, txn: Transaction) -> World:
        if self.phase(txn) != PREPARED:
            raise WrongPhase(f"txn {txn.id} is {self.phase(txn)}, expected prepared")
        state = world.state
        for i, leg in enumerate(txn.legs):
            rid = _escrow_rid(txn, i)
            state = state.transfer_balance(
                rid, World.account_rid(leg.to), state.balance[rid]
            )
            state = state.drop_resource(rid)
        self.phases[txn.id] = COMMITTED
        return world._with(state=state)

    def abort(self, world: World, txn: Transaction) -> World:
        phase = self.phase(txn)
        if phase == IDLE:
            return world
        if phase != PREPARED:
            raise WrongPhase(f"txn {txn.id} is {phase}, cannot abort")
        state = world.state
        for i, leg in enumerate(txn.legs):
            rid = _escrow_rid(txn, i)
            if rid not in state.balance:
                continue
            state = state.transfer_balance(
                rid, World.account_rid(leg.frm), state.balance[rid]
            )
            state = state.drop_resource(rid)
        self.phases[txn.id] = ABORTED
        return world._with(state=state)

    def run(self, world: World, txn: Transaction) -> tuple[World, str]:
        """Prepare then commit; abort (restoring the input state) on failure."""
        staged, phase = self.prepare(world, txn)
        if phase != PREPARED:
            return staged, ABORTED
        return self.commit(staged, txn), COMMITTED


def net(transfers: list[Transfer]) -> list[Transfer]:
    """Consolidate balance-mode transfers into net flows per agent pair per claim."""
    flows: dict[tuple[str, str, object], int] = {}
    for t in transfers:
        if t.mode != "balance":
            raise ValueError("netting is defined for balance-mode transfers only")
        for claim, qty in t.bundle.entries:
            a, b = sorted((t.frm, t.to))
            signed = qty if t.frm == a else -qty
            key = (a, b, claim)
            flows[key] = flows.get(key, 0) + signed
    result = []
    for (a, b, claim), qty in sorted(
        flows.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].text())
    ):
        if qty == 0:
            continue
        frm, to = (a, b) if qty > 0 else (b, a)
        result.append(Transfer(frm, to, Bundle.single(claim, abs(qty))))
    return result
