from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from moneta.algebra import (
    EMPTY,
    Base,
    Bundle,
    FiatRegistry,
    Iou,
    annihilate,
    bundle_add,
    issue_iou,
    normalize,
    parse_bundle,
    parse_claim,
    world_total,
)
from moneta.errors import InsufficientPosition

G = Base("G", unique=True)
R = Base("R", unique=True)
S = Base("S", unique=True)
DKK = Base("DKK")


claims = st.recursive(
    st.sampled_from([G, R, S, DKK]),
    lambda inner: st.builds(Iou, st.sampled_from(["0", "1", "cb"]), inner),
    max_leaves=4,
)

bundles = st.dictionaries(claims, st.integers(-5, 5), max_size=5).map(Bundle.of)


def test_bundle_canonical_drops_zeros():
    assert Bundle.of({G: 1, R: 0}) == Bundle.single(G)
    assert Bundle.of({G: 1, R: 1, S: 0}).entries == Bundle.of({R: 1, G: 1}).entries


def test_bundle_add_identity():
    assert Bundle.single(G) + EMPTY == Bundle.single(G)


def test_bundle_add_cancellation():
    note = Iou("0", G)
    assert Bundle.single(note) + Bundle.single(note, -1) == EMPTY
    assert Bundle.of({G: 1, R: 1}) + Bundle.of({R: -1, S: 1}) == Bundle.of({G: 1, S: 1})


@given(bundles, bundles)
def test_bundle_add_commutative(a, b):
    assert a + b == b + a


@given(bundles, bundles, bundles)
def test_bundle_add_associative(a, b, c):
    assert (a + b) + c == a + (b + c)


@given(bundles)
def test_bundle_add_empty_identity(a):
    assert a + EMPTY == a
    assert bundle_add(EMPTY, a) == a


@given(bundles)
def test_bundle_negation_cancels(a):
    assert a + (-a) == EMPTY


def test_issue_iou_pair_sums_to_empty():
    asset, liability = issue_iou("0", G, 1)
    assert asset == Bundle.single(Iou("0", G))
    assert liability == Bundle.single(Iou("0", G), -1)
    assert asset + liability == EMPTY


@given(st.sampled_from(["0", "1", "cb"]), claims, st.integers(1, 10))
def test_issue_iou_pair_property(issuer, c, qty):
    asset, liability = issue_iou(issuer, c, qty)
    assert asset + liability == EMPTY


def test_issue_iou_rejects_nonpositive():
    with pytest.raises(ValueError):
        issue_iou("0", G, 0)


def test_annihilate_cancels_both_sides():
    asset, liability = issue_iou("1", G, 1)
    assets = asset + Bundle.single(S)
    new_assets, new_liabilities = annihilate(assets, liability, "1", G, 1)
    assert new_assets == Bundle.single(S)
    assert new_liabilities == EMPTY


def test_annihilate_preserves_sum():
    asset, liability = issue_iou("1", DKK, 7)
    a2, l2 = annihilate(asset, liability, "1", DKK, 3)
    assert a2 + l2 == asset + liability


def test_annihilate_rejects_overdraw():
    asset, liability = issue_iou("1", G, 1)
    with pytest.raises(InsufficientPosition):
        annihilate(asset, liability, "1", G, 2)
    with pytest.raises(ValueError):
        annihilate(asset, liability, "1", G, 0)


def test_annihilate_two_pairs():
    C = Base("C", unique=True)
    ag, lg = issue_iou("1", G, 1)
    ac, lc = issue_iou("1", C, 1)
    assets, liabilities = ag + ac, lg + lc
    assets, liabilities = annihilate(assets, liabilities, "1", G, 1)
    assets, liabilities = annihilate(assets, liabilities, "1", C, 1)
    assert assets == EMPTY and liabilities == EMPTY


def test_normalize_fiat_identification():
    reg = FiatRegistry({"DKK": "cb"})
    assert normalize(Iou("cb", DKK), reg) == DKK
    assert normalize(Iou("cb", Iou("cb", DKK)), reg) == DKK
    assert normalize(Iou("bank1", DKK), reg) == Iou("bank1", DKK)


def _normalize_oracle(c, reg):
    if isinstance(c, Base):
        return c
    inner = _normalize_oracle(c.underlying, reg)
    rewritten = Iou(c.issuer, inner)
    if isinstance(inner, Base) and reg.issuer_of(inner.kind) == c.issuer:
        return inner
    return rewritten


@given(claims)
def test_normalize_matches_recursive_oracle(c):
    reg = FiatRegistry({"DKK": "cb"})
    assert normalize(c, reg) == _normalize_oracle(c, reg)


@given(claims)
def test_normalize_idempotent(c):
    reg = FiatRegistry({"DKK": "cb"})
    assert normalize(normalize(c, reg), reg) == normalize(c, reg)


def test_registry_rejects_second_issuer():
    reg = FiatRegistry({"DKK": "cb"})
    with pytest.raises(ValueError):
        reg.with_currency("DKK", "other")
    assert reg.with_currency("DKK", "cb").issuer_of("DKK") == "cb"


def test_world_total():
    rows = [Bundle.of({G: 1}), Bundle.of({R: 1, S: 1})]
    assert world_total(rows) == Bundle.of({G: 1, R: 1, S: 1})
    assert world_total([]) == EMPTY


def test_world_total_nets_iou_positions():
    asset, liability = issue_iou("0", G, 1)
    assert world_total([asset + Bundle.single(R), liability]) == Bundle.single(R)


def test_bundle_text_rendering():
    assert EMPTY.text() == "0"
    assert Bundle.single(DKK, 50).text() == "50 DKK"
    b = Bundle.of({G: 1, Iou("1", R): 1, Iou("0", G): -1})
    assert b.text() == "G + iou(1,R) - iou(0,G)"


def test_parse_claim_variants():
    syms = {"G": G, "DKK": DKK}
    assert parse_claim("DKK", syms) == DKK
    assert parse_claim("good:C") == Base("C", unique=True)
    assert parse_claim("iou(0,G)", syms) == Iou("0", G)
    assert parse_claim("iou(b1,iou(cb,DKK))", syms) == Iou("b1", Iou("cb", DKK))


def test_parse_bundle_round_trip():
    syms = {"G": G, "R": R, "DKK": DKK}
    for text in ["0", "G + iou(1,R) - iou(0,G)", "50 DKK", "G + 2 DKK - 3 iou(0,DKK)"]:
        b = parse_bundle(text, syms)
        assert parse_bundle(b.text(), syms) == b


def test_parse_bundle_rejects_garbage():
    with pytest.raises(ValueError):
        parse_bundle("G +", {"G": G})
    with pytest.raises(ValueError):
        parse_claim("iou(0", {})
    with pytest.raises(ValueError):
        parse_bundle("G G", {"G": G})
