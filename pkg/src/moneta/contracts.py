"""Contracts as classifiers of event sequences, advanced by residuation.

A contract is a finite combinator tree over Done, Fail, timed Atoms and
Then/Or/Both.  Advancing takes the derivative with respect to an event;
alternatives stay open (set-of-residuals semantics, realized by keeping Or
nodes) and Both interleaves.  Breach detection is a bounded search for any
completing schedule within the atoms' time windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .algebra import Bundle
from .errors import NegativeEntry, RejectedEvent
from .ledger import Transfer

NO_DEADLINE = 10**9


@dataclass(frozen=True)
class Done:
    pass


@dataclass(frozen=True)
class Fail:
    pass


@dataclass(frozen=True)
class Atom:
    """Single expected event within a [earliest, latest] logical-time window."""

    pattern: Any
    window: tuple[int, int] = (0, NO_DEADLINE)

    def __post_init__(self):
        lo, hi = self.window
        if lo > hi:
            raise ValueError(f"window {self.window} has earliest > latest")


@dataclass(frozen=True)
class Then:
    first: "Contract"
    second: "Contract"


@dataclass(frozen=True)
class Or:
    left: "Contract"
    right: "Contract"


@dataclass(frozen=True)
class Both:
    left: "Contract"
    right: "Contract"


Contract = Done | Fail | Atom | Then | Or | Both

DONE = Done()
FAIL = Fail()


def then(a: Contract, b: Contract) -> Contract:
    if isinstance(a, Fail) or isinstance(b, Fail):
        return FAIL
    if isinstance(a, Done):
        return b
    if isinstance(b, Done):
        return a
    return Then(a, b)


def alt(a: Contract, b: Contract) -> Contract:
    if isinstance(a, Fail):
        return b
    if isinstance(b, Fail):
        return a
    if a == b:
        return a
    return Or(a, b)


def both(a: Contract, b: Contract) -> Contract:
    if isinstance(a, Fail) or isinstance(b, Fail):
        return FAIL
    if isinstance(a, Done):
        return b
    if isinstance(b, Done):
        return a
    return Both(a, b)


def _matches(pattern: Any, event: Any) -> bool:
    probe = getattr(pattern, "matches", None)
    if probe is not None:
        return bool(probe(event))
    return pattern == event


def nullable(c: Contract) -> bool:
    if isinstance(c, Done):
        return True
    if isinstance(c, (Fail, Atom)):
        return False
    if isinstance(c, Then):
        return nullable(c.first) and nullable(c.second)
    if isinstance(c, Or):
        return nullable(c.left) or nullable(c.right)
    if isinstance(c, Both):
        return nullable(c.left) and nullable(c.right)
    raise TypeError(f"not a contract: {c!r}")


def derivative(c: Contract, event: Any, time: int) -> Contract:
    if isinstance(c, (Done, Fail)):
        return FAIL
    if isinstance(c, Atom):
        lo, hi = c.window
        if lo <= time <= hi and _matches(c.pattern, event):
            return DONE
        return FAIL
    if isinstance(c, Then):
        via_first = then(derivative(c.first, event, time), c.second)
        if nullable(c.first):
            return alt(via_first, derivative(c.second, event, time))
        return via_first
    if isinstance(c, Or):
        return alt(derivative(c.left, event, time), derivative(c.right, event, time))
    if isinstance(c, Both):
        return alt(
            both(derivative(c.left, event, time), c.right),
            both(c.left, derivative(c.right, event, time)),
        )
    raise TypeError(f"not a contract: {c!r}")


def _completion_steps(c: Contract, now: int):
    """Yield (fire_time, residual) for firing one atom at its earliest feasible time."""
    if isinstance(c, (Done, Fail)):
        return
    if isinstance(c, Atom):
        lo, hi = c.window
        s = max(now, lo)
        if s <= hi:
            yield s, DONE
        return
    if isinstance(c, Then):
        for s, rest in _completion_steps(c.first, now):
            yield s, then(rest, c.second)
        if nullable(c.first):
            yield from _completion_steps(c.second, now)
        return
    if isinstance(c, Or):
        yield from _completion_steps(c.left, now)
        yield from _completion_steps(c.right, now)
        return
    if isinstance(c, Both):
        for s, rest in _completion_steps(c.left, now):
            yield s, both(rest, c.right)
        for s, rest in _completion_steps(c.right, now):
            yield s, both(c.left, rest)
        return
    raise TypeError(f"not a contract: {c!r}")


def completable(c: Contract, now: int, _memo: dict | None = None) -> bool:
    """Can some event schedule at times >= now complete the contract?

    Firing every atom at its earliest feasible slot is optimal (feasibility
    is monotone in start time), so the search is exact and terminates: each
    step consumes one atom of a finite tree.
    """
    if _memo is None:
        _memo = {}
    key = (c, now)
    if key in _memo:
        return _memo[key]
    if nullable(c):
        _memo[key] = True
        return True
    result = any(
        completable(rest, s + 1, _memo) for s, rest in _completion_steps(c, now)
    )
    _memo[key] = result
    return result


LIVE = "live"
COMPLETED = "completed"
BREACHED = "breached"


def classify(c: Contract, now: int = 0) -> str:
    if nullable(c):
        return COMPLETED
    if not completable(c, now):
        return BREACHED
    return LIVE


@dataclass(frozen=True)
class ContractState:
    residual: Contract
    now: int = 0  # next admissible event time

    @property
    def status(self) -> str:
        return classify(self.residual, self.now)


def advance(cs: ContractState, event: Any, time: int | None = None) -> ContractState:
    if cs.status != LIVE:
        raise RejectedEvent(f"contract is {cs.status}; no event is permitted")
    t = cs.now if time is None else time
    if t < cs.now:
        raise RejectedEvent(f"event time {t} precedes contract clock {cs.now}")
    residual = derivative(cs.residual, event, t)
    if isinstance(residual, Fail):
        raise RejectedEvent(f"event {event!r} at time {t} not permitted")
    return ContractState(residual, t + 1)


# --- event patterns over the ledger ------------------------------------------

@dataclass(frozen=True)
class TransferPattern:
    frm: str
    to: str
    bundle: Bundle
    mode: str = "balance"

    def matches(self, e: Any) -> bool:
        return (
            isinstance(e, Transfer)
            and e.frm == self.frm
            and e.to == self.to
            and e.mode == self.mode
            and e.bundle == self.bundle
        )


# --- standard contracts ------------------------------------------------------

def make_exchange(
    a: str,
    b: str,
    x: Bundle,
    y: Bundle,
    window: tuple[int, int] = (0, NO_DEADLINE),
) -> Contract:
    """Atomic swap: a sends x to b and b sends y to a, in either order."""
    for bundle in (x, y):
        if not bundle.is_nonnegative():
            raise NegativeEntry(f"exchange bundle {bundle.text()} has a negative entry")
        if not bundle:
            raise ValueError("exchange legs must be non-empty")
    return Both(
        Atom(TransferPattern(a, b, x), window),
        Atom(TransferPattern(b, a, y), window),
    )


def _underlying(claim):
    from .algebra import Iou

    return claim.underlying if isinstance(claim, Iou) else claim


def _counterpart(issuer: str, b: Bundle) -> Bundle:
    from .algebra import Iou

    return Bundle.of({Iou(issuer, _underlying(c)): q for c, q in b.entries})


def make_loan(
    lender: str,
    borrower: str,
    principal: Bundle,
    collateral: Bundle | None = None,
    term: int = NO_DEADLINE,
    start: int = 0,
) -> Contract:
    """Two mirrored exchanges, optionally collateralized with a default branch.

    The lender hands over the principal against the borrower's counter-note;
    repayment reverses the swap within the term.  With collateral the parties
    additionally swap collateral notes up front, and the default branch lets
    the lender seize the collateral goods against returning the borrower's
    notes.
    """
    if not principal or not principal.is_nonnegative():
        raise NegativeEntry("principal must be a positive bundle")
    window = (start, start + term)
    borrower_note = _counterpart(borrower, principal)
    lender_gives = principal
    borrower_gives = borrower_note
    if collateral:
        from .algebra import Iou

        lender_coll = Bundle.of(
            {Iou(lender, c): q for c, q in collateral.entries}
        )
        borrower_coll = Bundle.of(
            {Iou(borrower, c): q for c, q in collateral.entries}
        )
        lender_gives = lender_gives + lender_coll
        borrower_gives = borrower_gives + borrower_coll
    initial = make_exchange(lender, borrower, lender_gives, borrower_gives, window)
    repay = make_exchange(borrower, lender, lender_gives, borrower_gives, window)
    if not collateral:
        return Then(initial, repay)
    seize = make_exchange(
        lender,
        borrower,
        borrower_gives,
        collateral + lender_coll,
        window,
    )
    return Then(initial, Or(repay, seize))
