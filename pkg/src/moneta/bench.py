"""Throughput benchmark for balance transfers.

The full ownership state is immutable and copies its maps on every update,
which is fine for scenarios but not for millions of transfers.  The
benchmark therefore runs the same single-currency transfer semantics
(non-negative balances, conservation) on a flat mutable array and re-checks
conservation at the end.
"""

from __future__ import annotations

import random
import resource
import time
from dataclasses import dataclass

INITIAL_BALANCE = 1_000


@dataclass(frozen=True)
class BenchReport:
    n: int
    accounts: int
    seed: int
    elapsed_s: float
    rate_per_s: float
    peak_rss_kb: int
    conserved: bool
    applied: int  # transfers not skipped for lack of funds

    def text(self) -> str:
        return (
            f"{self.applied}/{self.n} transfers over {self.accounts} accounts "
            f"in {self.elapsed_s:.2f}s: {self.rate_per_s:,.0f}/s, "
            f"peak rss {self.peak_rss_kb} kB, conservation "
            + ("intact" if self.conserved else "VIOLATED")
        )


def bench_transfers(n: int, accounts: int = 5_000, seed: int = 0) -> BenchReport:
    if n < 1:
        raise ValueError("need at least one transfer")
    if accounts < 2:
        raise ValueError("need at least two accounts")
    rng = random.Random(seed)
    balances = [INITIAL_BALANCE] * accounts
    total = INITIAL_BALANCE * accounts
    randrange = rng.randrange
    applied = 0
    start = time.perf_counter()
    for _ in range(n):
        src = randrange(accounts)
        dst = randrange(accounts)
        if src == dst:
            continue
        amount = randrange(1, 100)
        if balances[src] < amount:
            continue  # refused, as the ledger would refuse it
        balances[src] -= amount
        balances[dst] += amount
        applied += 1
    elapsed = time.perf_counter() - start
    conserved = sum(balances) == total and min(balances) >= 0
    return BenchReport(
        n=n,
        accounts=accounts,
        seed=seed,
        elapsed_s=elapsed,
        rate_per_s=n / elapsed if elapsed > 0 else float("inf"),
        peak_rss_kb=resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        conserved=conserved,
        applied=applied,
    )
