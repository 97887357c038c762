"""Ownership state (control map composed with balance map) and REA events.

Each agent gets an account-kind resource for its holdings; issuers
additionally get a liability ledger resource that only they control and
that transfer operations refuse to touch, which pins liabilities to their
issuer.  Token-kind resources have immutable balances and move by control
transfer only.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .algebra import (
    EMPTY,
    AgentId,
    Base,
    Bundle,
    Claim,
    FiatRegistry,
    Iou,
    annihilate,
    issue_iou,
    normalize,
    world_total,
)
from .errors import (
    InsufficientBalance,
    NegativeEntry,
    NotController,
    NotIssuer,
    PrivacyViolation,
    TokenImmutable,
    UnknownFact,
    ValueMismatch,
)

TOKEN = "token"
ACCOUNT = "account"

PUBLIC = "public"
THIRD_PARTY = "third-party"
PRIVATE = "private"


@dataclass(frozen=True)
class ResourceId:
    id: str
    kind: str  # TOKEN or ACCOUNT


# --- events ------------------------------------------------------------------

@dataclass(frozen=True)
class Transfer:
    frm: AgentId
    to: AgentId
    bundle: Bundle
    mode: str = "balance"  # "balance" or "control"
    rid: str | None = None  # control-mode target resource
    time: int = 0


@dataclass(frozen=True)
class Transformation:
    agent: AgentId
    consumed: Bundle
    produced: Bundle
    time: int = 0


@dataclass(frozen=True)
class Communication:
    frm: AgentId
    to: AgentId
    fact: str
    time: int = 0


@dataclass(frozen=True)
class Conclusion:
    agent: AgentId
    inputs: tuple[str, ...]
    output: str
    time: int = 0


@dataclass(frozen=True)
class Observation:
    agent: AgentId
    fact: str
    time: int = 0


Event = Transfer | Transformation | Communication | Conclusion | Observation


# --- ownership state ---------------------------------------------------------

@dataclass(frozen=True)
class OwnershipState:
    """Immutable composition of control and balance maps.

    ``liability_ledgers`` maps resource id to its issuer; those resources
    hold the issuer-side negative positions and are off limits to both
    transfer modes.
    """

    control: Mapping[str, AgentId] = field(default_factory=dict)
    balance: Mapping[str, Bundle] = field(default_factory=dict)
    kind: Mapping[str, str] = field(default_factory=dict)
    privacy: Mapping[str, str] = field(default_factory=dict)
    viewers: Mapping[str, frozenset[AgentId]] = field(default_factory=dict)
    liability_ledgers: Mapping[str, AgentId] = field(default_factory=dict)

    def _with(self, **updates) -> "OwnershipState":
        return dataclasses.replace(self, **updates)

    def create_resource(
        self,
        rid: str,
        kind: str,
        controller: AgentId,
        balance: Bundle = EMPTY,
        privacy: str = PUBLIC,
        viewers: Iterable[AgentId] = (),
        liability_of: AgentId | None = None,
    ) -> "OwnershipState":
        if rid in self.control:
            raise ValueError(f"resource {rid} already exists")
        state = self._with(
            control={**self.control, rid: controller},
            balance={**self.balance, rid: balance},
            kind={**self.kind, rid: kind},
            privacy={**self.privacy, rid: privacy},
            viewers={**self.viewers, rid: frozenset(viewers)},
        )
        if liability_of is not None:
            state = state._with(
                liability_ledgers={**state.liability_ledgers, rid: liability_of}
            )
        return state

    def drop_resource(self, rid: str) -> "OwnershipState":
        strip = lambda m: {k: v for k, v in m.items() if k != rid}
        return self._with(
            control=strip(self.control),
            balance=strip(self.balance),
            kind=strip(self.kind),
            privacy=strip(self.privacy),
            viewers=strip(self.viewers),
            liability_ledgers=strip(self.liability_ledgers),
        )

    def set_balance(self, rid: str, b: Bundle) -> "OwnershipState":
        return self._with(balance={**self.balance, rid: b})

    def holdings_of(self, agent: AgentId) -> Bundle:
        return world_total(
            b for rid, b in self.balance.items() if self.control[rid] == agent
        )

    def signed_total(self) -> Bundle:
        return world_total(self.balance.values())

    def query_balance(self, rid: str, observer: AgentId) -> Bundle:
        tag = self.privacy.get(rid, PUBLIC)
        if tag == PUBLIC or self.control[rid] == observer:
            return self.balance[rid]
        if tag == THIRD_PARTY and observer in self.viewers.get(rid, frozenset()):
            return self.balance[rid]
        raise PrivacyViolation(f"{observer} may not observe {rid} ({tag})")

    # --- transfers ---

    def transfer_control(self, rid: str, frm: AgentId, to: AgentId) -> "OwnershipState":
        if rid in self.liability_ledgers:
            raise NegativeEntry(f"liability ledger {rid} is not transferable")
        if self.control.get(rid) != frm:
            raise NotController(f"{frm} does not control {rid}")
        if frm == to:
            return self
        return self._with(control={**self.control, rid: to})

    def transfer_balance(self, src: str, dst: str, b: Bundle) -> "OwnershipState":
        for rid in (src, dst):
            if rid in self.liability_ledgers:
                raise NegativeEntry(f"liability ledger {rid} is not transferable")
            if self.kind.get(rid) == TOKEN:
                raise TokenImmutable(f"{rid} is a token; its balance is immutable")
            if rid not in self.balance:
                raise NotController(f"unknown resource {rid}")
        if not b.is_nonnegative():
            raise NegativeEntry(f"bundle {b.text()} has a negative entry")
        if not b:
            return self
        src_balance = self.balance[src]
        if not src_balance.covers(b):
            raise InsufficientBalance(
                f"{src} holds {src_balance.text()}, cannot send {b.text()}"
            )
        return self._with(
            balance={
                **self.balance,
                src: src_balance - b,
                dst: self.balance[dst] + b,
            }
        )

    def retire_and_issue(
        self,
        agent: AgentId,
        retired: Iterable[str],
        issued: Iterable[tuple[str, Bundle]],
    ) -> "OwnershipState":
        retired = list(retired)
        issued = list(issued)
        for rid in retired:
            if self.control.get(rid) != agent:
                raise NotController(f"{agent} does not control {rid}")
        retired_total = world_total(self.balance[rid] for rid in retired)
        issued_total = world_total(b for _, b in issued)
        if retired_total != issued_total:
            raise ValueMismatch(
                f"retired {retired_total.text()} != issued {issued_total.text()}"
            )
        state = self
        for rid in retired:
            state = state.drop_resource(rid)
        for rid, b in issued:
            state = state.create_resource(rid, TOKEN, agent, balance=b)
        return state


KnowledgeState = Mapping[AgentId, frozenset[str]]


# --- world: state + knowledge + clock + registry -----------------------------

@dataclass(frozen=True)
class World:
    state: OwnershipState = field(default_factory=OwnershipState)
    knowledge: KnowledgeState = field(default_factory=dict)
    registry: FiatRegistry = field(default_factory=FiatRegistry)
    clock: int = 0

    @staticmethod
    def account_rid(agent: AgentId) -> str:
        return f"acct:{agent}"

    @staticmethod
    def liability_rid(agent: AgentId) -> str:
        return f"liab:{agent}"

    def _with(self, **updates) -> "World":
        return dataclasses.replace(self, **updates)

    def with_agent(self, agent: AgentId) -> "World":
        rid = self.account_rid(agent)
        if rid in self.state.control:
            return self
        return self._with(state=self.state.create_resource(rid, ACCOUNT, agent))

    def with_currency(self, kind: str, issuer: AgentId) -> "World":
        return self._with(registry=self.registry.with_currency(kind, issuer))

    def _ensure_liability_ledger(self, issuer: AgentId) -> "World":
        rid = self.liability_rid(issuer)
        if rid in self.state.control:
            return self
        return self._with(
            state=self.state.create_resource(
                rid, ACCOUNT, issuer, privacy=PRIVATE, liability_of=issuer
            )
        )

    def norm(self, c: Claim) -> Claim:
        return normalize(c, self.registry)

    def endow(self, agent: AgentId, b: Bundle) -> "World":
        world = self.with_agent(agent)
        rid = self.account_rid(agent)
        state = world.state
        return world._with(state=state.set_balance(rid, state.balance[rid] + b.normalized(self.registry)))

    def holdings(self, agent: AgentId) -> Bundle:
        return self.state.holdings_of(agent)

    def signed_total(self) -> Bundle:
        return self.state.signed_total()

    # --- IOU lifecycle ---

    def issue(self, issuer: AgentId, c: Claim, qty: int) -> "World":
        c = self.norm(c)
        if isinstance(c, Base) and self.registry.issuer_of(c.kind) == issuer:
            return self.mint_fiat(issuer, c.kind, qty)
        asset, liability = issue_iou(issuer, c, qty)
        world = self.with_agent(issuer)._ensure_liability_ledger(issuer)
        state = world.state
        acct, liab = self.account_rid(issuer), self.liability_rid(issuer)
        state = state.set_balance(acct, state.balance[acct] + asset)
        state = state.set_balance(liab, state.balance[liab] + liability)
        return world._with(state=state)

    def redeem(self, issuer: AgentId, c: Claim, qty: int) -> "World":
        c = self.norm(c)
        if isinstance(c, Iou) and c.issuer == issuer:
            c = c.underlying  # accept iou(k,X) shorthand for underlying X
        acct, liab = self.account_rid(issuer), self.liability_rid(issuer)
        state = self.state
        assets, liabilities = annihilate(
            state.balance.get(acct, EMPTY),
            state.balance.get(liab, EMPTY),
            issuer,
            c,
            qty,
        )
        state = state.set_balance(acct, assets).set_balance(liab, liabilities)
        return self._with(state=state)

    def mint_fiat(self, cb: AgentId, currency: str, qty: int) -> "World":
        if self.registry.issuer_of(currency) != cb:
            raise NotIssuer(f"{cb} is not the registered issuer of {currency}")
        if qty == 0:
            return self
        if qty < 0:
            raise ValueError("mint quantity must be non-negative")
        money = Bundle.single(Base(currency), qty)
        world = self.with_agent(cb)._ensure_liability_ledger(cb)
        state = world.state
        acct, liab = self.account_rid(cb), self.liability_rid(cb)
        state = state.set_balance(acct, state.balance[acct] + money)
        state = state.set_balance(liab, state.balance[liab] - money)
        return world._with(state=state)

    # --- events ---

    def know(self, agent: AgentId) -> frozenset[str]:
        return self.knowledge.get(agent, frozenset())

    def _learn(self, agent: AgentId, fact: str) -> Mapping[AgentId, frozenset[str]]:
        return {**self.knowledge, agent: self.know(agent) | {fact}}

    def apply_event(self, e: Event) -> "World":
        t = e.time if e.time > 0 else self.clock + 1
        if t <= self.clock:
            raise ValueError(f"event time {t} not after clock {self.clock}")
        world = self._with(clock=t)
        if isinstance(e, Transfer):
            if e.mode == "control":
                if e.rid is None:
                    raise ValueError("control transfer needs a resource id")
                return world._with(
                    state=world.state.transfer_control(e.rid, e.frm, e.to)
                )
            bundle = e.bundle.normalized(self.registry)
            return world._with(
                state=world.state.transfer_balance(
                    self.account_rid(e.frm), self.account_rid(e.to), bundle
                )
            )
        if isinstance(e, Transformation):
            acct = self.account_rid(e.agent)
            held = world.state.balance.get(acct, EMPTY)
            consumed = e.consumed.normalized(self.registry)
            produced = e.produced.normalized(self.registry)
            if not held.covers(consumed):
                raise InsufficientBalance(
                    f"{e.agent} holds {held.text()}, cannot consume {consumed.text()}"
                )
            return world._with(
                state=world.state.set_balance(acct, held - consumed + produced)
            )
        if isinstance(e, Communication):
            if e.fact not in world.know(e.frm):
                raise UnknownFact(f"{e.frm} does not know {e.fact!r}")
            return world._with(knowledge=world._learn(e.to, e.fact))
        if isinstance(e, Observation):
            return world._with(knowledge=world._learn(e.agent, e.fact))
        if isinstance(e, Conclusion):
            # premises are recorded, not checked for entailment
            return world._with(knowledge=world._learn(e.agent, e.output))
        raise TypeError(f"unknown event {e!r}")

    def next_time(self) -> int:
        return self.clock + 1
