"""Banking scenarios over the ledger: reserves, deposits, credit, runs,
seigniorage and invoice tokenization.

Deposit money is the bank's own note ``iou(bank, M)``; deposits create it
against incoming reserves, loans create it ex nihilo against the borrower's
counter-note, repayment and redemption destroy it.  All ratios are exact
rationals and all ledger quantities are integers in minor units.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping

from .algebra import AgentId, Base, Bundle, Claim, Iou
from .errors import InsufficientBalance, ReserveBreach, UnderFunded
from .ledger import TOKEN, Transfer, World


def _frozen(d: Mapping[AgentId, int]) -> Mapping[AgentId, int]:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class BankConfig:
    """A commercial bank: its reserve requirement and deposit ledger."""

    bank: AgentId
    reserve_ratio: Fraction
    currency: str
    deposits: Mapping[AgentId, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.reserve_ratio <= 1:
            raise ValueError(f"reserve ratio {self.reserve_ratio} outside [0,1]")
        object.__setattr__(self, "deposits", _frozen(self.deposits))

    @property
    def note(self) -> Claim:
        return Iou(self.bank, Base(self.currency))

    def total_deposits(self) -> int:
        return sum(self.deposits.values())

    def _credit(self, customer: AgentId, qty: int) -> "BankConfig":
        merged = dict(self.deposits)
        merged[customer] = merged.get(customer, 0) + qty
        if merged[customer] == 0:
            del merged[customer]
        return replace(self, deposits=merged)


def reserves(cfg: BankConfig, world: World) -> int:
    return world.holdings(cfg.bank).get(Base(cfg.currency))


def _check_reserves(cfg: BankConfig, world: World, extra_deposits: int = 0) -> None:
    required = cfg.reserve_ratio * (cfg.total_deposits() + extra_deposits)
    if reserves(cfg, world) < required:
        raise ReserveBreach(
            f"reserves {reserves(cfg, world)} below "
            f"{cfg.reserve_ratio} x {cfg.total_deposits() + extra_deposits}"
        )


def deposit(
    cfg: BankConfig, world: World, customer: AgentId, qty: int
) -> tuple[BankConfig, World]:
    """Customer hands over currency, receives the bank's note for it."""
    if qty < 0:
        raise ValueError("deposit quantity must be non-negative")
    if qty == 0:
        return cfg, world
    world = world.with_agent(customer).with_agent(cfg.bank)
    money = Bundle.single(Base(cfg.currency), qty)
    world = world.apply_event(Transfer(customer, cfg.bank, money))
    world = world.issue(cfg.bank, Base(cfg.currency), qty)
    world = world.apply_event(
        Transfer(cfg.bank, customer, Bundle.single(cfg.note, qty))
    )
    cfg = cfg._credit(customer, qty)
    _check_reserves(cfg, world)
    return cfg, world


def bank_loan(
    cfg: BankConfig,
    world: World,
    borrower: AgentId,
    qty: int,
    collateral: Claim | None = None,
) -> tuple[BankConfig, World]:
    """Create deposit money for the borrower against their counter-note."""
    if qty <= 0:
        raise ValueError("loan quantity must be positive")
    world = world.with_agent(borrower).with_agent(cfg.bank)
    _check_reserves(cfg, world, extra_deposits=qty)
    world = world.issue(cfg.bank, Base(cfg.currency), qty)
    world = world.apply_event(
        Transfer(cfg.bank, borrower, Bundle.single(cfg.note, qty))
    )
    world = world.issue(borrower, Base(cfg.currency), qty)
    world = world.apply_event(
        Transfer(borrower, cfg.bank, Bundle.single(Iou(borrower, Base(cfg.currency)), qty))
    )
    if collateral is not None:
        world = world.issue(borrower, collateral, 1)
        world = world.apply_event(
            Transfer(borrower, cfg.bank, Bundle.single(Iou(borrower, collateral)))
        )
    return cfg._credit(borrower, qty), world


def repay_loan(
    cfg: BankConfig, world: World, borrower: AgentId, qty: int
) -> tuple[BankConfig, World]:
    """Repayment destroys deposit money and returns the borrower's note."""
    if qty <= 0:
        raise ValueError("repayment quantity must be positive")
    world = world.apply_event(
        Transfer(borrower, cfg.bank, Bundle.single(cfg.note, qty))
    )
    world = world.redeem(cfg.bank, Base(cfg.currency), qty)
    world = world.apply_event(
        Transfer(cfg.bank, borrower, Bundle.single(Iou(borrower, Base(cfg.currency)), qty))
    )
    world = world.redeem(borrower, Base(cfg.currency), qty)
    cfg = cfg._credit(borrower, -qty)
    _check_reserves(cfg, world)
    return cfg, world


def loan_capacity(cfg: BankConfig, world: World) -> int:
    """Largest admissible additional loan given current reserves and deposits."""
    if cfg.reserve_ratio == 0:
        raise ValueError("unbounded at reserve ratio 0")
    room = Fraction(reserves(cfg, world)) / cfg.reserve_ratio - cfg.total_deposits()
    return max(0, int(room))


@dataclass(frozen=True)
class RunOutcome:
    redeemed: int
    defaulted: bool
    haircut: Fraction


def run_bank_run(
    cfg: BankConfig, world: World, queue: list[tuple[AgentId, int]]
) -> tuple[RunOutcome, BankConfig, World]:
    """Serve redemption requests in order, paying currency 1:1 from reserves."""
    redeemed = 0
    defaulted = False
    for customer, qty in queue:
        claim = cfg.deposits.get(customer, 0)
        want = min(qty, claim)
        pay = min(want, reserves(cfg, world))
        if pay < want:
            defaulted = True
        if pay == 0:
            continue
        world = world.apply_event(
            Transfer(customer, cfg.bank, Bundle.single(cfg.note, pay))
        )
        world = world.redeem(cfg.bank, Base(cfg.currency), pay)
        world = world.apply_event(
            Transfer(cfg.bank, customer, Bundle.single(Base(cfg.currency), pay))
        )
        cfg = cfg._credit(customer, -pay)
        redeemed += pay
    residual = cfg.total_deposits()
    if residual == 0:
        haircut = Fraction(1)
    else:
        haircut = min(Fraction(1), Fraction(reserves(cfg, world), residual))
    return RunOutcome(redeemed, defaulted, haircut), cfg, world


def seigniorage(cfg: BankConfig, world: World) -> Fraction:
    """Share of outstanding deposit money not backed by reserves."""
    liabilities = cfg.total_deposits()
    if liabilities == 0:
        return Fraction(0)
    return Fraction(liabilities - reserves(cfg, world), liabilities)


# --- invoice tokenization ----------------------------------------------------

MINOR = 100  # ledger cents per reported currency unit

ESCROW = "invoice-escrow"


@dataclass(frozen=True)
class InvoiceDeal:
    face: int  # currency units
    tokens: int
    price: Fraction
    threshold: Fraction
    maturity: int
    seller: AgentId
    buyer: AgentId
    financiers: tuple[tuple[AgentId, int], ...]  # (agent, tokens bought)
    currency: str = "DAI"

    def __post_init__(self):
        if not 0 < self.price <= 1:
            raise ValueError(f"price {self.price} outside (0,1]")
        if not 0 < self.threshold <= 1:
            raise ValueError(f"threshold {self.threshold} outside (0,1]")
        if self.tokens <= 0 or self.face <= 0:
            raise ValueError("face and token count must be positive")
        if self.face * MINOR % self.tokens:
            raise ValueError("token par value must be a whole number of minor units")
        par = Fraction(self.face * MINOR, self.tokens)
        if (self.price * par).denominator != 1:
            raise ValueError("token price must be a whole number of minor units")


@dataclass(frozen=True)
class InvoiceReport:
    sold: int
    funded_fraction: Fraction
    early_payment: Fraction  # currency units, paid to seller at threshold
    maturity_payment: Fraction  # currency units, paid by buyer
    financier_profit: Fraction  # aggregate, currency units
    net_positions: Mapping[AgentId, Fraction]  # currency delta per party


def _units(minor_qty: int) -> Fraction:
    return Fraction(minor_qty, MINOR)


def run_invoice_deal(deal: InvoiceDeal, world: World) -> tuple[InvoiceReport, World]:
    """Tokenize an invoice, fund it, and settle at par after maturity.

    Raises UnderFunded when sales stay below the threshold; the input world
    is then unchanged, as if no purchase had happened.
    """
    cash = Base(deal.currency)
    debt = Iou(deal.buyer, cash)
    face_minor = deal.face * MINOR
    par_minor = face_minor // deal.tokens
    price_minor = int(deal.price * par_minor)
    parties = [deal.seller, deal.buyer, ESCROW] + [a for a, _ in deal.financiers]
    for agent in parties:
        world = world.with_agent(agent)
    before = {a: world.holdings(a).get(cash) for a in parties}

    # buyer's debt becomes tokens held by the seller
    world = world.issue(deal.buyer, cash, face_minor)
    world = world.apply_event(
        Transfer(deal.buyer, deal.seller, Bundle.single(debt, face_minor))
    )
    state = world.state
    seller_acct = World.account_rid(deal.seller)
    token_rids = []
    for i in range(deal.tokens):
        rid = f"invtok:{i}"
        state = state.set_balance(
            seller_acct, state.balance[seller_acct] - Bundle.single(debt, par_minor)
        )
        state = state.create_resource(
            rid, TOKEN, deal.seller, balance=Bundle.single(debt, par_minor)
        )
        token_rids.append(rid)
    world = world._with(state=state)

    # financiers buy at the discount price; cash accumulates in escrow
    holder: dict[str, AgentId] = {}
    unsold = list(token_rids)
    for agent, count in deal.financiers:
        for _ in range(count):
            if not unsold:
                raise ValueError("more tokens bought than minted")
            rid = unsold.pop(0)
            world = world.apply_event(
                Transfer(agent, ESCROW, Bundle.single(cash, price_minor))
            )
            world = world.apply_event(
                Transfer(deal.seller, agent, Bundle(), mode="control", rid=rid)
            )
            holder[rid] = agent
    sold = len(holder)
    funded = Fraction(sold, deal.tokens)
    if funded < deal.threshold:
        raise UnderFunded(
            f"{sold}/{deal.tokens} tokens sold, below threshold {deal.threshold}"
        )

    # threshold reached: escrowed proceeds go to the seller early
    early_minor = sold * price_minor
    world = world.apply_event(
        Transfer(ESCROW, deal.seller, Bundle.single(cash, early_minor))
    )

    world = world._with(clock=world.clock + deal.maturity)

    # buyer settles the invoice: pays par and destroys its returned notes
    if world.holdings(deal.buyer).get(cash) < face_minor:
        raise InsufficientBalance(
            f"{deal.buyer} cannot cover the invoice face at maturity"
        )
    state = world.state
    buyer_acct = World.account_rid(deal.buyer)
    for rid in token_rids:
        owner = holder.get(rid, deal.seller)
        state = state.set_balance(
            buyer_acct, state.balance[buyer_acct] + state.balance[rid]
        )
        state = state.drop_resource(rid)
        state = state.transfer_balance(
            buyer_acct, World.account_rid(owner), Bundle.single(cash, par_minor)
        )
    world = world._with(state=state)
    world = world.redeem(deal.buyer, cash, face_minor)

    after = {a: world.holdings(a).get(cash) for a in parties}
    nets = {a: _units(after[a] - before[a]) for a in parties}
    profit = sum(
        (nets[a] for a, _ in deal.financiers), start=Fraction(0)
    )
    report = InvoiceReport(
        sold=sold,
        funded_fraction=funded,
        early_payment=_units(early_minor),
        maturity_payment=Fraction(deal.face),
        financier_profit=profit,
        net_positions=MappingProxyType(nets),
    )
    return report, world
