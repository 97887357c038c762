import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from moneta.algebra import EMPTY, Base, Bundle, Iou
from moneta.banking import (
    BankConfig,
    InvoiceDeal,
    MINOR,
    bank_loan,
    deposit,
    loan_capacity,
    repay_loan,
    reserves,
    run_bank_run,
    run_invoice_deal,
    seigniorage,
)
from moneta.errors import InsufficientBalance, ReserveBreach, UnderFunded
from moneta.ledger import World

DKK = Base("DKK")


def fresh_bank(ratio, customer_funds=100):
    cfg = BankConfig("bank", Fraction(ratio), "DKK")
    w = World().endow("alice", Bundle.single(DKK, customer_funds)).with_agent("bank")
    return cfg, w


def test_deposit_moves_reserves_and_issues_notes():
    cfg, w = fresh_bank("1")
    cfg, w = deposit(cfg, w, "alice", 100)
    assert reserves(cfg, w) == 100
    assert cfg.deposits == {"alice": 100}
    assert w.holdings("alice") == Bundle.single(Iou("bank", DKK), 100)


def test_deposit_zero_is_noop():
    cfg, w = fresh_bank("1")
    cfg2, w2 = deposit(cfg, w, "alice", 0)
    assert cfg2 == cfg and w2 is w


def test_deposit_requires_funds():
    cfg, w = fresh_bank("1", customer_funds=10)
    with pytest.raises(InsufficientBalance):
        deposit(cfg, w, "alice", 11)


def test_deposit_conserves_world_total():
    cfg, w = fresh_bank("1/10")
    total = w.signed_total()
    cfg, w = deposit(cfg, w, "alice", 100)
    assert w.signed_total() == total


def test_loan_creates_deposit_money_against_counter_note():
    cfg, w = fresh_bank("1/10")
    cfg, w = deposit(cfg, w, "alice", 100)
    cfg, w = bank_loan(cfg, w, "bob", 500)
    assert cfg.deposits == {"alice": 100, "bob": 500}
    assert w.holdings("bob").get(Iou("bank", DKK)) == 500
    assert reserves(cfg, w) == 100  # loans do not touch reserves


def test_full_reserve_bank_cannot_lend_beyond_reserves():
    cfg, w = fresh_bank("1")
    cfg, w = deposit(cfg, w, "alice", 100)
    with pytest.raises(ReserveBreach):
        bank_loan(cfg, w, "bob", 1)


def test_money_multiplier_is_reserves_over_ratio():
    cfg, w = fresh_bank("1/10")
    cfg, w = deposit(cfg, w, "alice", 100)
    assert loan_capacity(cfg, w) == 900
    cfg, w = bank_loan(cfg, w, "bob", 900)
    assert cfg.total_deposits() == 1000
    with pytest.raises(ReserveBreach):
        bank_loan(cfg, w, "bob", 1)


def test_chained_deposit_loan_deposit_respects_bound():
    cfg, w = fresh_bank("1/10")
    cfg, w = deposit(cfg, w, "alice", 100)
    # greedy re-deposit loop: every loaned note would need to come back as
    # currency to raise reserves, which it cannot; capacity only shrinks
    cfg, w = bank_loan(cfg, w, "bob", 400)
    assert reserves(cfg, w) >= cfg.reserve_ratio * cfg.total_deposits()
    cfg, w = bank_loan(cfg, w, "carol", 500)
    assert reserves(cfg, w) >= cfg.reserve_ratio * cfg.total_deposits()
    assert loan_capacity(cfg, w) == 0


def test_repayment_destroys_deposit_money():
    cfg, w = fresh_bank("1/10")
    cfg, w = deposit(cfg, w, "alice", 100)
    cfg, w = bank_loan(cfg, w, "bob", 300)
    total = w.signed_total()
    cfg, w = repay_loan(cfg, w, "bob", 300)
    assert cfg.deposits == {"alice": 100}
    assert w.holdings("bob") == EMPTY
    assert w.signed_total() == total


def test_bank_run_full_reserve_never_defaults():
    cfg, w = fresh_bank("1")
    cfg, w = deposit(cfg, w, "alice", 100)
    outcome, cfg, w = run_bank_run(cfg, w, [("alice", 100)])
    assert outcome.redeemed == 100
    assert not outcome.defaulted
    assert w.holdings("alice") == Bundle.single(DKK, 100)


def test_bank_run_full_reserve_exhaustive_small_queues():
    # every redemption order over small quantities, r = 1: no default
    customers = ["alice", "bob"]
    for q1, q2 in itertools.product(range(0, 21, 5), repeat=2):
        for order in itertools.permutations([("alice", q1), ("bob", q2)]):
            cfg = BankConfig("bank", Fraction(1), "DKK")
            w = (
                World()
                .endow("alice", Bundle.single(DKK, 20))
                .endow("bob", Bundle.single(DKK, 20))
                .with_agent("bank")
            )
            cfg, w = deposit(cfg, w, "alice", 20)
            cfg, w = deposit(cfg, w, "bob", 20)
            outcome, _, _ = run_bank_run(cfg, w, list(order))
            assert not outcome.defaulted


def test_bank_run_fractional_reserve_defaults():
    cfg, w = fresh_bank("1/10")
    cfg, w = deposit(cfg, w, "alice", 100)
    cfg, w = bank_loan(cfg, w, "bob", 900)
    outcome, cfg, w = run_bank_run(cfg, w, [("alice", 100), ("bob", 900)])
    assert outcome.redeemed == 100
    assert outcome.defaulted
    assert outcome.haircut == 0


def test_bank_run_demand_within_reserves_is_fine_even_fractional():
    cfg, w = fresh_bank("1/10")
    cfg, w = deposit(cfg, w, "alice", 100)
    cfg, w = bank_loan(cfg, w, "bob", 900)
    outcome, _, _ = run_bank_run(cfg, w, [("alice", 50)])
    assert outcome.redeemed == 50
    assert not outcome.defaulted


def test_seigniorage_fully_loaned_fractional_bank():
    cfg, w = fresh_bank("1/10")
    cfg, w = deposit(cfg, w, "alice", 100)
    cfg, w = bank_loan(cfg, w, "bob", 900)
    assert seigniorage(cfg, w) == Fraction(9, 10)


def test_seigniorage_edge_cases():
    cfg, w = fresh_bank("1")
    assert seigniorage(cfg, w) == 0  # no deposits
    cfg, w = deposit(cfg, w, "alice", 100)
    assert seigniorage(cfg, w) == 0  # fully reserved


# --- invoice tokenization ----------------------------------------------------

def invoice_world(deal, financier_cash=100, buyer_cash=100):
    w = World()
    w = w.endow(deal.buyer, Bundle.single(Base(deal.currency), buyer_cash * MINOR))
    for agent, _ in deal.financiers:
        w = w.endow(agent, Bundle.single(Base(deal.currency), financier_cash * MINOR))
    return w.with_agent(deal.seller)


def standard_deal(financiers=(("fin", 70),)):
    return InvoiceDeal(
        face=100,
        tokens=100,
        price=Fraction(98, 100),
        threshold=Fraction(70, 100),
        maturity=60,
        seller="seller",
        buyer="buyer",
        financiers=tuple(financiers),
    )


def test_invoice_happy_path_exact_rationals():
    deal = standard_deal()
    w = invoice_world(deal)
    report, w2 = run_invoice_deal(deal, w)
    assert report.sold == 70
    assert report.early_payment == Fraction(686, 10)
    assert report.financier_profit == Fraction(7, 5)
    assert report.net_positions["seller"] == Fraction(686, 10) + 30
    assert report.net_positions["buyer"] == -100
    assert sum(report.net_positions.values()) == 0
    assert w2.signed_total() == w.signed_total()


def test_invoice_below_threshold_aborts_atomically():
    deal = standard_deal(financiers=(("fin", 69),))
    w = invoice_world(deal)
    with pytest.raises(UnderFunded):
        run_invoice_deal(deal, w)
    # the caller's world is the pre-deal state, untouched
    assert w.holdings("fin") == Bundle.single(Base("DAI"), 100 * MINOR)


def test_invoice_at_par_yields_zero_profit():
    deal = InvoiceDeal(
        face=100, tokens=100, price=Fraction(1), threshold=Fraction(70, 100),
        maturity=60, seller="seller", buyer="buyer", financiers=(("fin", 80),),
    )
    report, _ = run_invoice_deal(deal, invoice_world(deal))
    assert report.financier_profit == 0


def test_invoice_multiple_financiers_split_profit():
    deal = standard_deal(financiers=(("f1", 40), ("f2", 35)))
    report, _ = run_invoice_deal(deal, invoice_world(deal))
    assert report.sold == 75
    assert report.net_positions["f1"] == Fraction(40) * Fraction(2, 100)
    assert report.net_positions["f2"] == Fraction(35) * Fraction(2, 100)
    assert sum(report.net_positions.values()) == 0


def test_invoice_rejects_bad_parameters():
    with pytest.raises(ValueError):
        InvoiceDeal(
            face=100, tokens=100, price=Fraction(3, 2), threshold=Fraction(1, 2),
            maturity=1, seller="s", buyer="b", financiers=(),
        )
    with pytest.raises(ValueError):
        InvoiceDeal(
            face=100, tokens=3, price=Fraction(1), threshold=Fraction(1, 2),
            maturity=1, seller="s", buyer="b", financiers=(),
        )


def test_invoice_insolvent_buyer_is_an_error():
    deal = standard_deal()
    w = invoice_world(deal, buyer_cash=50)
    with pytest.raises(InsufficientBalance):
        run_invoice_deal(deal, w)
