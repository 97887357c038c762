"""Value algebra: claims, IOUs, signed bundles and fiat normalization.

Claims are either base resource kinds (goods or currencies) or nested
promissory notes ``iou(issuer, claim)``.  Bundles are canonical signed
multisets of claims with integer quantities; an issuer's liability is the
negative entry of the matching IOU, so an issued pair always sums to the
empty bundle.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .errors import InsufficientPosition

AgentId = str


@dataclass(frozen=True)
class Base:
    """A base resource kind; ``unique`` goods carry implicit quantity 1."""

    kind: str
    unique: bool = False

    def text(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Iou:
    """Transferable promissory note: ``issuer`` owes ``underlying`` to the bearer."""

    issuer: AgentId
    underlying: "Claim"

    def text(self) -> str:
        return f"iou({self.issuer},{self.underlying.text()})"


Claim = Union[Base, Iou]


@dataclass(frozen=True)
class FiatRegistry:
    """Maps each currency kind to its single registered issuer (the central bank)."""

    issuers: Mapping[str, AgentId] = field(default_factory=dict)

    def issuer_of(self, kind: str) -> AgentId | None:
        return self.issuers.get(kind)

    def with_currency(self, kind: str, issuer: AgentId) -> "FiatRegistry":
        if kind in self.issuers and self.issuers[kind] != issuer:
            raise ValueError(f"currency {kind} already has issuer {self.issuers[kind]}")
        merged = dict(self.issuers)
        merged[kind] = issuer
        return FiatRegistry(merged)


EMPTY_REGISTRY = FiatRegistry({})


def normalize(c: Claim, reg: FiatRegistry) -> Claim:
    """Rewrite every ``iou(cb, M)`` with registered issuer ``cb`` to ``M``, to fixpoint."""
    if isinstance(c, Base):
        return c
    inner = normalize(c.underlying, reg)
    if isinstance(inner, Base) and reg.issuer_of(inner.kind) == c.issuer:
        return inner
    return Iou(c.issuer, inner)


def _sort_key(item: tuple[Claim, int]) -> tuple[int, str]:
    claim, qty = item
    return (0 if qty > 0 else 1, claim.text())


@dataclass(frozen=True)
class Bundle:
    """Canonical signed multiset of claims; zero entries are dropped.

    Entries are kept sorted (positives before negatives, then by claim
    text) so equal bundles compare and hash equal and render identically.
    """

    entries: tuple[tuple[Claim, int], ...] = ()

    @staticmethod
    def of(items: Mapping[Claim, int] | Iterable[tuple[Claim, int]]) -> "Bundle":
        if isinstance(items, Mapping):
            items = items.items()
        acc: dict[Claim, int] = {}
        for claim, qty in items:
            acc[claim] = acc.get(claim, 0) + qty
        canonical = tuple(sorted(((c, q) for c, q in acc.items() if q != 0), key=_sort_key))
        return Bundle(canonical)

    @staticmethod
    def single(claim: Claim, qty: int = 1) -> "Bundle":
        return Bundle.of({claim: qty})

    def get(self, claim: Claim) -> int:
        for c, q in self.entries:
            if c == claim:
                return q
        return 0

    def __add__(self, other: "Bundle") -> "Bundle":
        acc = dict(self.entries)
        for claim, qty in other.entries:
            acc[claim] = acc.get(claim, 0) + qty
        return Bundle.of(acc)

    def __neg__(self) -> "Bundle":
        return Bundle(tuple(sorted(((c, -q) for c, q in self.entries), key=_sort_key)))

    def __sub__(self, other: "Bundle") -> "Bundle":
        return self + (-other)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def is_nonnegative(self) -> bool:
        return all(q > 0 for _, q in self.entries)

    def covers(self, other: "Bundle") -> bool:
        """Entrywise ``self >= other``."""
        return all(self.get(c) >= q for c, q in other.entries)

    def normalized(self, reg: FiatRegistry) -> "Bundle":
        return Bundle.of([(normalize(c, reg), q) for c, q in self.entries])

    def text(self) -> str:
        if not self.entries:
            return "0"
        parts: list[str] = []
        for claim, qty in self.entries:
            mag = abs(qty)
            term = claim.text() if mag == 1 else f"{mag} {claim.text()}"
            if not parts:
                parts.append(term if qty > 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if qty > 0 else f"- {term}")
        return " ".join(parts)


EMPTY = Bundle()


def bundle_add(a: Bundle, b: Bundle) -> Bundle:
    return a + b


def issue_iou(issuer: AgentId, c: Claim, qty: int) -> tuple[Bundle, Bundle]:
    """Split nothing into an IOU asset and its complementary liability."""
    if qty <= 0:
        raise ValueError("issue quantity must be positive")
    note = Iou(issuer, c)
    return Bundle.single(note, qty), Bundle.single(note, -qty)


def annihilate(
    assets: Bundle, liabilities: Bundle, issuer: AgentId, c: Claim, qty: int
) -> tuple[Bundle, Bundle]:
    """Cancel qty units of a returned IOU against its liability.

    The two sides are separate bundles (a canonical bundle would net them to
    zero on contact); both positions shrink by qty and their sum is unchanged.
    """
    if qty <= 0:
        raise ValueError("annihilate quantity must be positive")
    note = Iou(issuer, c)
    held = assets.get(note)
    owed = liabilities.get(note)
    if held < qty or owed > -qty:
        raise InsufficientPosition(
            f"cannot annihilate {qty} x {note.text()}: asset {held}, liability {owed}"
        )
    return assets - Bundle.single(note, qty), liabilities + Bundle.single(note, qty)


def world_total(bundles: Iterable[Bundle]) -> Bundle:
    total = EMPTY
    for b in bundles:
        total = total + b
    return total


# --- text syntax -------------------------------------------------------------
#
# Claim grammar:  SYM | good:KIND | iou(<agent>,<claim>)
# Bundle grammar: term (('+'|'-') term)*   with  term = [qty] claim
# Bare symbols resolve through an optional symbol table (scenario declarations);
# without one they denote non-unique base kinds.

_TERM_RE = re.compile(r"\s*(?P<sign>[+-])?\s*(?:(?P<qty>\d+)\s+)?(?P<claim>[^\s+-]+(?:\([^()]*(?:\([^()]*\)[^()]*)*\))?)")


def parse_claim(text: str, symbols: Mapping[str, Claim] | None = None) -> Claim:
    text = text.strip()
    if text.startswith("iou(") and text.endswith(")"):
        inner = text[4:-1]
        depth = 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                issuer = inner[:i].strip()
                underlying = parse_claim(inner[i + 1:], symbols)
                if not issuer:
                    raise ValueError(f"empty issuer in claim {text!r}")
                return Iou(issuer, underlying)
        raise ValueError(f"malformed iou claim {text!r}")
    if symbols is not None and text in symbols:
        return symbols[text]
    if text.startswith("good:"):
        kind = text[5:]
        if symbols is not None and f"good:{kind}" not in symbols and kind in symbols:
            return symbols[kind]
        return Base(kind, unique=True)
    if not text or any(ch in text for ch in "(),+"):
        raise ValueError(f"malformed claim {text!r}")
    return Base(text)


def parse_bundle(text: str, symbols: Mapping[str, Claim] | None = None) -> Bundle:
    text = text.strip()
    if text == "0" or not text:
        return EMPTY
    items: list[tuple[Claim, int]] = []
    pos = 0
    first = True
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m or not m.group("claim"):
            raise ValueError(f"malformed bundle {text!r} at offset {pos}")
        sign = m.group("sign")
        if sign is None and not first:
            raise ValueError(f"missing +/- between terms in bundle {text!r}")
        qty = int(m.group("qty") or 1)
        if sign == "-":
            qty = -qty
        items.append((parse_claim(m.group("claim"), symbols), qty))
        pos = m.end()
        first = False
    return Bundle.of(items)
