"""Command-line front end: scenario runner, network simulation, benchmark
and the bundled figure corpus."""

from __future__ import annotations

import argparse
import sys
from importlib import resources

from .bench import bench_transfers
from .errors import MonetaError
from .harness import make_net, run_txn
from .ledger import Transfer, World
from .scenario import (
    AgentDecl,
    BankDecl,
    CrashCmd,
    CurrencyDecl,
    EndowDecl,
    ExpectCmd,
    GoodDecl,
    Scenario,
    TransferCmd,
    TxnCmd,
    parse_scenario,
    run_scenario,
)
from .transactions import Transaction


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def cmd_run(args) -> int:
    scenario = parse_scenario(_read(args.file))
    report = run_scenario(scenario)
    if args.format == "json":
        print(report.to_json())
    else:
        print(report.table())
    return 0 if report.ok else 1


def _components(scenario: Scenario) -> list[list[str]]:
    """Agents linked by a shared transaction leg must share a partition."""
    agents = list(scenario.agents)
    parent = {a: a for a in agents}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        parent[find(a)] = find(b)

    for step in scenario.steps:
        for cmd in step.commands:
            legs = []
            if isinstance(cmd, TxnCmd):
                legs = cmd.legs
            elif isinstance(cmd, TransferCmd):
                legs = [cmd]
            for leg in legs:
                union(leg.frm, leg.to)
    groups: dict[str, list[str]] = {}
    for a in agents:
        groups.setdefault(find(a), []).append(a)
    return [groups[root] for root in sorted(groups)]


def cmd_simulate(args) -> int:
    scenario = parse_scenario(_read(args.file))
    fault_plan = []
    for spec in args.crash or []:
        node, _, phase = spec.partition("@")
        if not phase:
            print(f"bad --crash value {spec!r}, want node@phase", file=sys.stderr)
            return 2
        fault_plan.append((node, phase))

    # spread agent groups over the nodes; a leg never spans two partitions
    components = _components(scenario)
    assignment: dict[str, str] = {}
    for i, group in enumerate(components):
        node_id = f"node{i % args.nodes}"
        for agent in group:
            assignment[agent] = node_id
    partitions: dict[str, World] = {
        f"node{i}": World() for i in range(args.nodes)
    }
    for d in scenario.declarations:
        if isinstance(d, CurrencyDecl):
            partitions = {
                k: w.with_currency(d.sym, d.issuer) for k, w in partitions.items()
            }
        elif isinstance(d, AgentDecl):
            node_id = assignment[d.id]
            partitions[node_id] = partitions[node_id].with_agent(d.id)
        elif isinstance(d, EndowDecl):
            node_id = assignment[d.agent]
            partitions[node_id] = partitions[node_id].endow(d.agent, d.bundle)
        elif isinstance(d, (GoodDecl, BankDecl)):
            pass

    net = make_net(partitions, seed=args.seed, fault_plan=fault_plan)
    ok = True
    seq = 0
    for step in scenario.steps:
        for cmd in step.commands:
            if isinstance(cmd, (TxnCmd, TransferCmd)):
                seq += 1
                legs = cmd.legs if isinstance(cmd, TxnCmd) else (cmd,)
                txn = Transaction(
                    f"{seq}", tuple(Transfer(l.frm, l.to, l.bundle) for l in legs)
                )
                outcome, _ = run_txn(net, net.coordinator.id, txn)
                print(f"txn {txn.id}: {outcome}")
            elif isinstance(cmd, ExpectCmd):
                node = net.participants[assignment[cmd.agent]]
                actual = node.world.holdings(cmd.agent)
                want = cmd.bundle.normalized(node.world.registry)
                if actual == want:
                    print(f"expect {cmd.agent}: ok ({actual.text()})")
                else:
                    ok = False
                    print(
                        f"expect {cmd.agent}: FAIL, holds {actual.text()}, "
                        f"expected {want.text()}"
                    )
            elif isinstance(cmd, CrashCmd):
                pass  # crash directives were folded into the fault plan
            else:
                print(
                    f"simulate supports transfer/txn/expect steps only, got: {cmd!r}",
                    file=sys.stderr,
                )
                return 2
    for line in net.trace:
        print(line)
    return 0 if ok else 1


def cmd_bench(args) -> int:
    report = bench_transfers(args.n, accounts=args.accounts, seed=args.seed)
    print(report.text())
    return 0 if report.conserved else 1


GOLDEN_NAMES = (
    "fig_outside_commodity.mny",
    "fig_outside_representative.mny",
    "fig_trading_ious.mny",
    "fig_loan_no_security.mny",
    "fig_full_reserve_loan.mny",
    "fig_loan_collateral.mny",
    "fig_loan_collateral_default.mny",
    "fig_unsecured_loan.mny",
)


def golden_text(name: str) -> str:
    return (resources.files("moneta") / "goldens" / name).read_text(encoding="utf-8")


def cmd_goldens(args) -> int:
    failures = 0
    for name in GOLDEN_NAMES:
        report = run_scenario(parse_scenario(golden_text(name)))
        status = "ok" if report.ok else "FAIL"
        checks = len(report.assertions)
        print(f"{name}: {status} ({checks} checks)")
        if args.verbose or not report.ok:
            print(report.table())
        if not report.ok:
            failures += 1
    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="moneta",
        description="Deterministic engine for contract-backed digital cash",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("file")
    p_run.add_argument("--format", choices=("table", "json"), default="table")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.set_defaults(fn=cmd_run)

    p_sim = sub.add_parser("simulate", help="run transactions over a simulated network")
    p_sim.add_argument("file")
    p_sim.add_argument("--nodes", type=int, default=3)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--crash", action="append", metavar="NODE@PHASE")
    p_sim.set_defaults(fn=cmd_simulate)

    p_bench = sub.add_parser("bench", help="measure transfer throughput")
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--accounts", type=int, default=5000)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(fn=cmd_bench)

    p_gold = sub.add_parser("goldens", help="replay the bundled figure scenarios")
    p_gold.add_argument("--verbose", action="store_true")
    p_gold.set_defaults(fn=cmd_goldens)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except MonetaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
