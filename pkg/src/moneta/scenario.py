"""Scenario files: declarations, then numbered steps over a shared world.

A scenario is line-oriented text.  ``#`` starts a comment.  Declarations
(agent, currency, good, endow, bank) come first; every later non-empty line
is one step, and ``;`` joins several commands into a single step so a step
corresponds to one row of the resulting holdings table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .algebra import Base, Bundle, Claim, Iou, parse_bundle, parse_claim
from .banking import (
    BankConfig,
    InvoiceDeal,
    bank_loan,
    deposit,
    run_bank_run,
    run_invoice_deal,
)
from .contracts import (
    ContractState,
    NO_DEADLINE,
    advance as advance_contract,
    make_exchange,
)
from .errors import (
    DuplicateId,
    MonetaError,
    ScenarioSyntaxError,
    UnderFunded,
    UndeclaredId,
)
from .ledger import Transfer, World
from .transactions import Transaction, TransactionManager

# --- declarations ------------------------------------------------------------

@dataclass(frozen=True)
class AgentDecl:
    id: str
    central_bank: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CurrencyDecl:
    sym: str
    issuer: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class GoodDecl:
    kind: str
    unique: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class EndowDecl:
    agent: str
    bundle: Bundle
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BankDecl:
    bank: str
    ratio: Fraction
    currency: str
    line: int = field(default=0, compare=False)


Decl = AgentDecl | CurrencyDecl | GoodDecl | EndowDecl | BankDecl


# --- step commands -----------------------------------------------------------

@dataclass(frozen=True)
class IssueCmd:
    agent: str
    qty: int
    claim: Claim
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RedeemCmd:
    agent: str
    qty: int
    claim: Claim
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MintCmd:
    cb: str
    qty: int
    currency: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TransferCmd:
    frm: str
    to: str
    bundle: Bundle
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExchangeCmd:
    a: str
    b: str
    gives: Bundle  # a -> b
    takes: Bundle  # b -> a
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TxnCmd:
    legs: tuple[TransferCmd, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DepositCmd:
    customer: str
    bank: str
    qty: int
    currency: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BankLoanCmd:
    bank: str
    borrower: str
    qty: int
    currency: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BankRunCmd:
    bank: str
    queue: tuple[tuple[str, int], ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class InvoiceCmd:
    face: int
    tokens: int
    price: Fraction
    threshold: Fraction
    maturity: int
    seller: str
    buyer: str
    financiers: tuple[tuple[str, int], ...]
    currency: str = "DAI"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ContractCmd:
    cid: str
    a: str
    b: str
    gives: Bundle
    takes: Bundle
    window: tuple[int, int] = (0, NO_DEADLINE)
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class AdvanceCmd:
    cid: str
    event: TransferCmd
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExpectCmd:
    agent: str
    bundle: Bundle
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExpectStatusCmd:
    cid: str
    status: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CrashCmd:
    node: str
    phase: str
    line: int = field(default=0, compare=False)


Command = (
    IssueCmd | RedeemCmd | MintCmd | TransferCmd | ExchangeCmd | TxnCmd
    | DepositCmd | BankLoanCmd | BankRunCmd | InvoiceCmd
    | ContractCmd | AdvanceCmd | ExpectCmd | ExpectStatusCmd | CrashCmd
)


@dataclass(frozen=True)
class Step:
    index: int
    commands: tuple[Command, ...]


@dataclass(frozen=True)
class Scenario:
    declarations: tuple[Decl, ...]
    steps: tuple[Step, ...]

    @property
    def agents(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.declarations if isinstance(d, AgentDecl))


# --- parsing -----------------------------------------------------------------

_STATUSES = ("live", "completed", "breached")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.agents: dict[str, AgentDecl] = {}
        self.symbols: dict[str, Claim] = {}
        self.banks: dict[str, BankDecl] = {}
        self.contracts: set[str] = set()
        self.decls: list[Decl] = []
        self.steps: list[Step] = []
        self.in_steps = False

    def fail(self, msg: str, line: int, cls=ScenarioSyntaxError):
        raise cls(msg, line=line)

    def need_agent(self, name: str, line: int) -> str:
        if name not in self.agents:
            self.fail(f"undeclared agent {name!r}", line, UndeclaredId)
        return name

    def claim(self, text: str, line: int) -> Claim:
        try:
            c = parse_claim(text, self.symbols)
        except ValueError as e:
            self.fail(str(e), line)
        self.check_claim(c, line)
        return c

    def bundle(self, text: str, line: int) -> Bundle:
        try:
            b = parse_bundle(text, self.symbols)
        except ValueError as e:
            self.fail(str(e), line)
        for c, _ in b.entries:
            self.check_claim(c, line)
        return b

    def check_claim(self, c: Claim, line: int) -> None:
        if isinstance(c, Base):
            if c.kind not in self.symbols:
                self.fail(f"undeclared resource kind {c.kind!r}", line, UndeclaredId)
        else:
            self.need_agent(c.issuer, line)
            self.check_claim(c.underlying, line)

    def qty(self, text: str, line: int) -> int:
        try:
            return int(text)
        except ValueError:
            self.fail(f"expected an integer quantity, got {text!r}", line)

    def ratio(self, text: str, line: int) -> Fraction:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            self.fail(f"expected a rational, got {text!r}", line)

    # --- declarations ---

    def parse_decl(self, verb: str, rest: list[str], line: int) -> None:
        if self.in_steps:
            self.fail(f"declaration {verb!r} after the first step", line)
        if verb == "agent":
            if len(rest) not in (1, 2) or (len(rest) == 2 and rest[1] != "central-bank"):
                self.fail("usage: agent <id> [central-bank]", line)
            name = rest[0]
            if name in self.agents:
                self.fail(f"agent {name!r} declared twice", line, DuplicateId)
            decl = AgentDecl(name, central_bank=len(rest) == 2, line=line)
            self.agents[name] = decl
            self.decls.append(decl)
        elif verb == "currency":
            if len(rest) != 3 or rest[1] != "issuer":
                self.fail("usage: currency <sym> issuer <agent>", line)
            sym, _, issuer = rest
            if sym in self.symbols:
                self.fail(f"resource kind {sym!r} declared twice", line, DuplicateId)
            self.need_agent(issuer, line)
            self.symbols[sym] = Base(sym)
            self.decls.append(CurrencyDecl(sym, issuer, line=line))
        elif verb == "good":
            if len(rest) not in (1, 2) or (len(rest) == 2 and rest[1] != "unique"):
                self.fail("usage: good <kind> [unique]", line)
            kind = rest[0]
            if kind in self.symbols:
                self.fail(f"resource kind {kind!r} declared twice", line, DuplicateId)
            unique = len(rest) == 2
            self.symbols[kind] = Base(kind, unique=unique)
            self.decls.append(GoodDecl(kind, unique=unique, line=line))
        elif verb == "endow":
            if len(rest) < 2:
                self.fail("usage: endow <agent> <bundle>", line)
            agent = self.need_agent(rest[0], line)
            self.decls.append(EndowDecl(agent, self.bundle(" ".join(rest[1:]), line), line=line))
        elif verb == "bank":
            if len(rest) not in (3, 5) or rest[1] != "reserve" or (len(rest) == 5 and rest[3] != "currency"):
                self.fail("usage: bank <id> reserve <ratio> [currency <sym>]", line)
            name = self.need_agent(rest[0], line)
            if name in self.banks:
                self.fail(f"bank {name!r} declared twice", line, DuplicateId)
            currency = rest[4] if len(rest) == 5 else self._sole_currency(line)
            decl = BankDecl(name, self.ratio(rest[2], line), currency, line=line)
            self.banks[name] = decl
            self.decls.append(decl)
        else:
            raise AssertionError(verb)

    def _sole_currency(self, line: int) -> str:
        syms = [d.sym for d in self.decls if isinstance(d, CurrencyDecl)]
        if len(syms) != 1:
            self.fail("bank needs `currency <sym>` unless exactly one currency is declared", line)
        return syms[0]

    # --- commands ---

    def parse_command(self, src: str, line: int) -> Command:
        self.in_steps = True
        src = src.strip()
        if src.startswith("txn{"):
            if not src.endswith("}"):
                self.fail("txn{...} must close on the same line", line)
            inner = src[4:-1]
            legs = []
            for part in inner.split(";"):
                part = part.strip()
                if not part:
                    continue
                leg = self.parse_command(part, line)
                if not isinstance(leg, TransferCmd):
                    self.fail("txn{...} may contain only transfer commands", line)
                legs.append(leg)
            if not legs:
                self.fail("txn{...} needs at least one transfer", line)
            return TxnCmd(tuple(legs), line=line)
        parts = src.split()
        verb, rest = parts[0], parts[1:]
        if verb == "issue" or verb == "redeem":
            if len(rest) < 3:
                self.fail(f"usage: {verb} <agent> <qty> <claim>", line)
            agent = self.need_agent(rest[0], line)
            qty = self.qty(rest[1], line)
            claim = self.claim(" ".join(rest[2:]), line)
            cls = IssueCmd if verb == "issue" else RedeemCmd
            return cls(agent, qty, claim, line=line)
        if verb == "mint":
            if len(rest) != 3:
                self.fail("usage: mint <central-bank> <qty> <currency>", line)
            return MintCmd(
                self.need_agent(rest[0], line),
                self.qty(rest[1], line),
                self._currency(rest[2], line),
                line=line,
            )
        if verb == "transfer":
            if len(rest) < 3:
                self.fail("usage: transfer <from> <to> <bundle>", line)
            return TransferCmd(
                self.need_agent(rest[0], line),
                self.need_agent(rest[1], line),
                self.bundle(" ".join(rest[2:]), line),
                line=line,
            )
        if verb == "exchange":
            return self._exchange(rest, line)
        if verb == "deposit":
            if len(rest) != 4:
                self.fail("usage: deposit <customer> <bank> <qty> <currency>", line)
            return DepositCmd(
                self.need_agent(rest[0], line),
                self._bank(rest[1], line),
                self.qty(rest[2], line),
                self._currency(rest[3], line),
                line=line,
            )
        if verb == "bankloan":
            if len(rest) != 4:
                self.fail("usage: bankloan <bank> <borrower> <qty> <currency>", line)
            return BankLoanCmd(
                self._bank(rest[0], line),
                self.need_agent(rest[1], line),
                self.qty(rest[2], line),
                self._currency(rest[3], line),
                line=line,
            )
        if verb == "bankrun":
            return self._bankrun(rest, line)
        if verb == "invoice":
            return self._invoice(rest, line)
        if verb == "contract":
            return self._contract(rest, line)
        if verb == "advance":
            if len(rest) < 1:
                self.fail("usage: advance <contract> <transfer ...>", line)
            cid = rest[0]
            if cid not in self.contracts:
                self.fail(f"undeclared contract {cid!r}", line, UndeclaredId)
            event = self.parse_command(" ".join(rest[1:]), line)
            if not isinstance(event, TransferCmd):
                self.fail("advance takes a transfer command", line)
            return AdvanceCmd(cid, event, line=line)
        if verb == "expect":
            if len(rest) < 2:
                self.fail("usage: expect <agent> <bundle>", line)
            return ExpectCmd(
                self.need_agent(rest[0], line),
                self.bundle(" ".join(rest[1:]), line),
                line=line,
            )
        if verb == "expect-status":
            if len(rest) != 2 or rest[1] not in _STATUSES:
                self.fail("usage: expect-status <contract> live|completed|breached", line)
            if rest[0] not in self.contracts:
                self.fail(f"undeclared contract {rest[0]!r}", line, UndeclaredId)
            return ExpectStatusCmd(rest[0], rest[1], line=line)
        if verb == "crash":
            if len(rest) != 1 or "@" not in rest[0]:
                self.fail("usage: crash <node>@<phase>", line)
            node, phase = rest[0].split("@", 1)
            return CrashCmd(node, phase, line=line)
        self.fail(f"unknown command {verb!r}", line)

    def _currency(self, sym: str, line: int) -> str:
        c = self.symbols.get(sym)
        known = any(isinstance(d, CurrencyDecl) and d.sym == sym for d in self.decls)
        if c is None or not known:
            self.fail(f"undeclared currency {sym!r}", line, UndeclaredId)
        return sym

    def _bank(self, name: str, line: int) -> str:
        if name not in self.banks:
            self.fail(f"undeclared bank {name!r}", line, UndeclaredId)
        return name

    def _exchange(self, rest: list[str], line: int) -> ExchangeCmd:
        text = " ".join(rest)
        if ":" not in text or "/" not in text:
            self.fail("usage: exchange <a> <b> : <bundle> / <bundle>", line)
        head, _, tail = text.partition(":")
        names = head.split()
        if len(names) != 2:
            self.fail("usage: exchange <a> <b> : <bundle> / <bundle>", line)
        gives_text, _, takes_text = tail.partition("/")
        return ExchangeCmd(
            self.need_agent(names[0], line),
            self.need_agent(names[1], line),
            self.bundle(gives_text, line),
            self.bundle(takes_text, line),
            line=line,
        )

    def _bankrun(self, rest: list[str], line: int) -> BankRunCmd:
        if len(rest) < 2:
            self.fail("usage: bankrun <bank> [A:100, B:50]", line)
        bank = self._bank(rest[0], line)
        spec = " ".join(rest[1:]).strip()
        if not (spec.startswith("[") and spec.endswith("]")):
            self.fail("bankrun queue must be bracketed, e.g. [A:100, B:50]", line)
        queue = []
        for item in spec[1:-1].split(","):
            item = item.strip()
            if not item:
                continue
            if ":" not in item:
                self.fail(f"bad queue entry {item!r}, want agent:qty", line)
            name, qty = item.split(":", 1)
            queue.append((self.need_agent(name.strip(), line), self.qty(qty.strip(), line)))
        return BankRunCmd(bank, tuple(queue), line=line)

    def _invoice(self, rest: list[str], line: int) -> InvoiceCmd:
        kv: dict[str, str] = {}
        financiers: list[tuple[str, int]] = []
        for tok in rest:
            if "=" not in tok:
                self.fail(f"invoice arguments are key=value, got {tok!r}", line)
            key, val = tok.split("=", 1)
            if key == "financier":
                if ":" not in val:
                    self.fail("financier=<agent>:<tokens>", line)
                name, count = val.split(":", 1)
                financiers.append((self.need_agent(name, line), self.qty(count, line)))
            else:
                if key in kv:
                    self.fail(f"duplicate invoice key {key!r}", line)
                kv[key] = val
        missing = {"face", "tokens", "price", "threshold", "maturity", "seller", "buyer"} - set(kv)
        if missing:
            self.fail(f"invoice missing keys: {', '.join(sorted(missing))}", line)
        currency = kv.get("currency", "DAI")
        if currency in self.symbols and not isinstance(self.symbols[currency], Base):
            self.fail(f"{currency!r} is not a currency", line)
        return InvoiceCmd(
            face=self.qty(kv["face"], line),
            tokens=self.qty(kv["tokens"], line),
            price=self.ratio(kv["price"], line),
            threshold=self.ratio(kv["threshold"], line),
            maturity=self.qty(kv["maturity"], line),
            seller=self.need_agent(kv["seller"], line),
            buyer=self.need_agent(kv["buyer"], line),
            financiers=tuple(financiers),
            currency=currency,
            line=line,
        )

    def _contract(self, rest: list[str], line: int) -> ContractCmd:
        if len(rest) < 2 or rest[1] != "exchange":
            self.fail("usage: contract <id> exchange <a> <b> : <bundle> / <bundle> [@ lo..hi]", line)
        cid = rest[0]
        if cid in self.contracts:
            self.fail(f"contract {cid!r} declared twice", line, DuplicateId)
        tail = rest[2:]
        window = (0, NO_DEADLINE)
        if "@" in tail:
            at = tail.index("@")
            if at != len(tail) - 2 or ".." not in tail[-1]:
                self.fail("window syntax: @ lo..hi", line)
            lo, _, hi = tail[-1].partition("..")
            window = (self.qty(lo, line), self.qty(hi, line))
            tail = tail[:at]
        ex = self._exchange(tail, line)
        self.contracts.add(cid)
        return ContractCmd(cid, ex.a, ex.b, ex.gives, ex.takes, window, line=line)

    # --- top level ---

    def parse(self) -> Scenario:
        decl_verbs = {"agent", "currency", "good", "endow", "bank"}
        index = 0
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            src = raw.split("#", 1)[0].strip()
            if not src:
                continue
            verb = src.split(None, 1)[0]
            if verb in decl_verbs:
                self.parse_decl(verb, src.split()[1:], lineno)
                continue
            commands = []
            for chunk in _split_step(src, lineno):
                commands.append(self.parse_command(chunk, lineno))
            index += 1
            self.steps.append(Step(index, tuple(commands)))
        if not self.decls and not self.steps:
            raise ScenarioSyntaxError("empty scenario", line=1)
        return Scenario(tuple(self.decls), tuple(self.steps))


def _split_step(src: str, line: int) -> list[str]:
    """Split on `;` at brace depth zero so txn{...} stays intact."""
    chunks, depth, cur = [], 0, []
    for ch in src:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise ScenarioSyntaxError("unbalanced '}'", line=line)
        if ch == ";" and depth == 0:
            chunks.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ScenarioSyntaxError("unbalanced '{'", line=line)
    chunks.append("".join(cur))
    return [c for c in (c.strip() for c in chunks) if c]


def parse_scenario(text: str) -> Scenario:
    return _Parser(text).parse()


# --- rendering ---------------------------------------------------------------

def _render_decl(d: Decl) -> str:
    if isinstance(d, AgentDecl):
        return f"agent {d.id} central-bank" if d.central_bank else f"agent {d.id}"
    if isinstance(d, CurrencyDecl):
        return f"currency {d.sym} issuer {d.issuer}"
    if isinstance(d, GoodDecl):
        return f"good {d.kind} unique" if d.unique else f"good {d.kind}"
    if isinstance(d, EndowDecl):
        return f"endow {d.agent} {d.bundle.text()}"
    if isinstance(d, BankDecl):
        return f"bank {d.bank} reserve {d.ratio} currency {d.currency}"
    raise TypeError(f"not a declaration: {d!r}")


def _render_command(c: Command) -> str:
    if isinstance(c, IssueCmd):
        return f"issue {c.agent} {c.qty} {c.claim.text()}"
    if isinstance(c, RedeemCmd):
        return f"redeem {c.agent} {c.qty} {c.claim.text()}"
    if isinstance(c, MintCmd):
        return f"mint {c.cb} {c.qty} {c.currency}"
    if isinstance(c, TransferCmd):
        return f"transfer {c.frm} {c.to} {c.bundle.text()}"
    if isinstance(c, ExchangeCmd):
        return f"exchange {c.a} {c.b} : {c.gives.text()} / {c.takes.text()}"
    if isinstance(c, TxnCmd):
        inner = " ; ".join(_render_command(leg) for leg in c.legs)
        return f"txn{{ {inner} }}"
    if isinstance(c, DepositCmd):
        return f"deposit {c.customer} {c.bank} {c.qty} {c.currency}"
    if isinstance(c, BankLoanCmd):
        return f"bankloan {c.bank} {c.borrower} {c.qty} {c.currency}"
    if isinstance(c, BankRunCmd):
        queue = ", ".join(f"{a}:{q}" for a, q in c.queue)
        return f"bankrun {c.bank} [{queue}]"
    if isinstance(c, InvoiceCmd):
        parts = [
            f"face={c.face}", f"tokens={c.tokens}", f"price={c.price}",
            f"threshold={c.threshold}", f"maturity={c.maturity}",
            f"seller={c.seller}", f"buyer={c.buyer}",
        ]
        parts += [f"financier={a}:{q}" for a, q in c.financiers]
        parts.append(f"currency={c.currency}")
        return "invoice " + " ".join(parts)
    if isinstance(c, ContractCmd):
        base = f"contract {c.cid} exchange {c.a} {c.b} : {c.gives.text()} / {c.takes.text()}"
        if c.window != (0, NO_DEADLINE):
            base += f" @ {c.window[0]}..{c.window[1]}"
        return base
    if isinstance(c, AdvanceCmd):
        return f"advance {c.cid} {_render_command(c.event)}"
    if isinstance(c, ExpectCmd):
        return f"expect {c.agent} {c.bundle.text()}"
    if isinstance(c, ExpectStatusCmd):
        return f"expect-status {c.cid} {c.status}"
    if isinstance(c, CrashCmd):
        return f"crash {c.node}@{c.phase}"
    raise TypeError(f"not a command: {c!r}")


def render(s: Scenario) -> str:
    lines = [_render_decl(d) for d in s.declarations]
    if s.declarations and s.steps:
        lines.append("")
    for step in s.steps:
        lines.append(" ; ".join(_render_command(c) for c in step.commands))
    return "\n".join(lines) + "\n"


# --- execution ---------------------------------------------------------------

@dataclass(frozen=True)
class Assertion:
    step: int
    ok: bool
    message: str


@dataclass(frozen=True)
class StepRow:
    index: int
    commands: tuple[str, ...]
    holdings: Mapping[str, str]
    outcomes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Report:
    agents: tuple[str, ...]
    rows: tuple[StepRow, ...]
    assertions: tuple[Assertion, ...]
    crash_directives: tuple[tuple[str, str], ...] = ()

    @property
    def ok(self) -> bool:
        return all(a.ok for a in self.assertions)

    def table(self) -> str:
        header = " | ".join(self.agents)
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(" | ".join(row.holdings[a] for a in self.agents))
        for a in self.assertions:
            mark = "ok" if a.ok else "FAIL"
            lines.append(f"step {a.step}: {mark} {a.message}")
        return "\n".join(lines)

    def to_json(self) -> str:
        doc = {
            "agents": list(self.agents),
            "steps": [
                {
                    "index": row.index,
                    "commands": list(row.commands),
                    "holdings": dict(row.holdings),
                    "outcomes": list(row.outcomes),
                }
                for row in self.rows
            ],
            "assertions": [
                {"step": a.step, "ok": a.ok, "message": a.message}
                for a in self.assertions
            ],
            "ok": self.ok,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


class _Runner:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.world = World()
        self.banks: dict[str, BankConfig] = {}
        self.contracts: dict[str, tuple[ContractState, object]] = {}
        self.tm = TransactionManager()
        self.txn_seq = 0
        self.assertions: list[Assertion] = []
        self.crashes: list[tuple[str, str]] = []
        self.outcomes: list[str] = []

    def setup(self) -> None:
        for d in self.scenario.declarations:
            if isinstance(d, AgentDecl):
                self.world = self.world.with_agent(d.id)
            elif isinstance(d, CurrencyDecl):
                self.world = self.world.with_currency(d.sym, d.issuer)
            elif isinstance(d, EndowDecl):
                self.world = self.world.endow(d.agent, d.bundle)
            elif isinstance(d, BankDecl):
                self.banks[d.bank] = BankConfig(d.bank, d.ratio, d.currency)

    def _exchange_txn(self, a: str, b: str, gives: Bundle, takes: Bundle) -> None:
        self.txn_seq += 1
        legs = []
        if gives:
            legs.append(Transfer(a, b, gives))
        if takes:
            legs.append(Transfer(b, a, takes))
        txn = Transaction(f"s{self.txn_seq}", tuple(legs))
        self.world, phase = self.tm.run(self.world, txn)
        if phase != "committed":
            cause = self.tm.abort_causes.get(txn.id)
            raise cause if cause else MonetaError(f"exchange {txn.id} aborted")

    def execute(self, cmd: Command, step: int) -> None:
        if isinstance(cmd, IssueCmd):
            self.world = self.world.issue(cmd.agent, cmd.claim, cmd.qty)
        elif isinstance(cmd, RedeemCmd):
            self.world = self.world.redeem(cmd.agent, cmd.claim, cmd.qty)
        elif isinstance(cmd, MintCmd):
            self.world = self.world.mint_fiat(cmd.cb, cmd.currency, cmd.qty)
        elif isinstance(cmd, TransferCmd):
            self.world = self.world.apply_event(Transfer(cmd.frm, cmd.to, cmd.bundle))
        elif isinstance(cmd, ExchangeCmd):
            self._exchange_txn(cmd.a, cmd.b, cmd.gives, cmd.takes)
        elif isinstance(cmd, TxnCmd):
            self.txn_seq += 1
            txn = Transaction(
                f"s{self.txn_seq}",
                tuple(Transfer(l.frm, l.to, l.bundle) for l in cmd.legs),
            )
            self.world, phase = self.tm.run(self.world, txn)
            self.outcomes.append(f"txn {txn.id} {phase}")
        elif isinstance(cmd, DepositCmd):
            cfg = self.banks[cmd.bank]
            self.banks[cmd.bank], self.world = deposit(cfg, self.world, cmd.customer, cmd.qty)
        elif isinstance(cmd, BankLoanCmd):
            cfg = self.banks[cmd.bank]
            self.banks[cmd.bank], self.world = bank_loan(cfg, self.world, cmd.borrower, cmd.qty)
        elif isinstance(cmd, BankRunCmd):
            cfg = self.banks[cmd.bank]
            outcome, self.banks[cmd.bank], self.world = run_bank_run(
                cfg, self.world, list(cmd.queue)
            )
            self.outcomes.append(
                f"run redeemed={outcome.redeemed} defaulted={str(outcome.defaulted).lower()} "
                f"haircut={outcome.haircut}"
            )
        elif isinstance(cmd, InvoiceCmd):
            deal = InvoiceDeal(
                face=cmd.face, tokens=cmd.tokens, price=cmd.price,
                threshold=cmd.threshold, maturity=cmd.maturity,
                seller=cmd.seller, buyer=cmd.buyer,
                financiers=cmd.financiers, currency=cmd.currency,
            )
            try:
                report, self.world = run_invoice_deal(deal, self.world)
            except UnderFunded as e:
                self.outcomes.append(f"invoice aborted: {e}")
            else:
                self.outcomes.append(
                    f"invoice settled: early={report.early_payment} "
                    f"profit={report.financier_profit}"
                )
        elif isinstance(cmd, ContractCmd):
            contract = make_exchange(cmd.a, cmd.b, cmd.gives, cmd.takes, cmd.window)
            self.contracts[cmd.cid] = ContractState(contract, now=cmd.window[0])
        elif isinstance(cmd, AdvanceCmd):
            cs = self.contracts[cmd.cid]
            e = Transfer(cmd.event.frm, cmd.event.to, cmd.event.bundle)
            self.contracts[cmd.cid] = advance_contract(cs, e)
            self.world = self.world.apply_event(e)
        elif isinstance(cmd, ExpectCmd):
            actual = self.world.holdings(cmd.agent)
            want = cmd.bundle.normalized(self.world.registry)
            ok = actual == want
            self.assertions.append(Assertion(
                step, ok,
                f"{cmd.agent} holds {actual.text()}"
                + ("" if ok else f", expected {want.text()}"),
            ))
        elif isinstance(cmd, ExpectStatusCmd):
            status = self.contracts[cmd.cid].status
            ok = status == cmd.status
            self.assertions.append(Assertion(
                step, ok,
                f"contract {cmd.cid} is {status}"
                + ("" if ok else f", expected {cmd.status}"),
            ))
        elif isinstance(cmd, CrashCmd):
            self.crashes.append((cmd.node, cmd.phase))
        else:
            raise TypeError(f"not a command: {cmd!r}")

    def run(self) -> Report:
        self.setup()
        agents = self.scenario.agents
        rows = []
        for step in self.scenario.steps:
            self.outcomes = []
            for cmd in step.commands:
                try:
                    self.execute(cmd, step.index)
                except MonetaError as e:
                    raise type(e)(f"step {step.index}: {e}") from e
            rows.append(StepRow(
                index=step.index,
                commands=tuple(_render_command(c) for c in step.commands),
                holdings={a: self.world.holdings(a).text() for a in agents},
                outcomes=tuple(self.outcomes),
            ))
        return Report(agents, tuple(rows), tuple(self.assertions), tuple(self.crashes))


def run_scenario(s: Scenario, opts: dict | None = None) -> Report:
    return _Runner(s).run()
