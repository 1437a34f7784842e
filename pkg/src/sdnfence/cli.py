"""Command-line interface.

Five subcommands cover the lifecycle: ``validate`` checks model and policy
files, ``compile`` turns them into the full rule set, ``run-scenario``
plays scripted traffic against a fixture, ``verify`` probes a deployed
policy for leaks and gaps, and ``bench`` measures the pipeline on
generated fabrics.

Exit codes are uniform: 0 when the verdict is positive (valid, compliant,
passed), 1 when the inputs were readable but the verdict is negative
(violations, leaks, failed scenarios), 2 when the inputs themselves are
unusable (malformed files, unknown names, impossible dimensions).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import run_bench_scales
from .errors import (
    EnforcementError,
    FixtureMismatchError,
    GenerationError,
    InputFormatError,
    NoPathError,
)
from .fileio import (
    dump_rules,
    load_policy,
    load_scenario,
    load_services,
    load_topology,
    write_report,
)
from .model import ValidationReport, validate_model
from .policy import validate_policy_refs
from .report import (
    assemble_report,
    format_bench,
    format_compliance,
    format_scenario,
    format_validation,
    render_bench_figures,
    render_reachability_figure,
    write_bench_csv,
)
from .scenarios import BUILTIN_SCENARIOS, run_scenario
from .testbed import Testbed
from .verify import check_compliance, reachable_pairs


def _load_model(args) -> tuple:
    topology = load_topology(args.topology)
    services, consumers = load_services(args.services)
    return topology, services, consumers


def _validate_all(topology, services, consumers, doc) -> ValidationReport:
    reports = [validate_model(topology, services, consumers)]
    if doc is not None:
        reports.append(
            validate_policy_refs(doc.allow, doc.deny, doc.malicious, services, consumers)
        )
        try:
            doc.to_service_policy()
        except EnforcementError as exc:
            from .model import Violation

            reports.append(ValidationReport.of([
                Violation("policy-conflict", (), str(exc))
            ]))
    return ValidationReport.of([v for r in reports for v in r.violations])


def cmd_validate(args) -> int:
    topology, services, consumers = _load_model(args)
    doc = load_policy(args.policy) if args.policy else None
    report = _validate_all(topology, services, consumers, doc)
    print(format_validation(report))
    if args.report:
        write_report(assemble_report(validation=report), args.report)
    return 0 if report.ok else 1


def cmd_compile(args) -> int:
    topology, services, consumers = _load_model(args)
    doc = load_policy(args.policy)
    report = _validate_all(topology, services, consumers, doc)
    if not report.ok:
        print(format_validation(report))
        return 1
    policy = doc.to_service_policy()
    bed = Testbed.deploy(topology, services, consumers, policy)
    terminal_policy = bed.controller.policy
    assert terminal_policy is not None

    unroutable = []
    installs = []
    for pair in sorted(terminal_policy.allow_t):
        try:
            installs.extend(bed.controller.synthesize_flow_rules(*pair))
        except NoPathError:
            unroutable.append(pair)
    if unroutable:
        for src, dst in unroutable:
            print(f"cannot compile: no route for allowed pair {src} -> {dst}")
        return 1
    bed.network.apply_rules(installs=installs)
    dump_rules(bed.network, args.out)
    entry_count = bed.network.rule_count()
    print(
        f"compiled {len(terminal_policy.allow_t)} allowed pair(s) and "
        f"{len(terminal_policy.deny_t) + len(terminal_policy.blocked)} deny source(s) "
        f"into {entry_count} entries -> {args.out}"
    )
    if args.report:
        write_report(
            {
                "compile": {
                    "allow_pairs": len(terminal_policy.allow_t),
                    "deny_pairs": len(terminal_policy.deny_t),
                    "blocked_terminals": len(terminal_policy.blocked),
                    "entries": entry_count,
                    "rules_file": str(args.out),
                }
            },
            args.report,
        )
    return 0


def cmd_run_scenario(args) -> int:
    if args.scenario == "all":
        names = sorted(BUILTIN_SCENARIOS)
    elif args.scenario in BUILTIN_SCENARIOS:
        names = [args.scenario]
    elif Path(args.scenario).exists():
        names = [load_scenario(args.scenario)]
    else:
        raise InputFormatError(
            f"{args.scenario!r} is neither a built-in scenario "
            f"({', '.join(sorted(BUILTIN_SCENARIOS))}, all) nor a scenario file"
        )
    reports = [run_scenario(name) for name in names]
    for report in reports:
        print(format_scenario(report))
    if args.report:
        write_report(assemble_report(scenarios=reports), args.report)
    return 0 if all(r.passed for r in reports) else 1


def cmd_verify(args) -> int:
    topology, services, consumers = _load_model(args)
    doc = load_policy(args.policy)
    report = _validate_all(topology, services, consumers, doc)
    if not report.ok:
        print(format_validation(report))
        return 1
    policy = doc.to_service_policy()
    bed = Testbed.deploy(topology, services, consumers, policy)
    bed.exercise()
    reachable = reachable_pairs(bed)
    compliance = check_compliance(bed)
    print(f"probed {compliance.probed} ordered pairs, {len(reachable)} deliverable")
    print(format_compliance(compliance))
    if args.report:
        write_report(
            assemble_report(compliance=compliance, reachable=reachable), args.report
        )
    if args.figures:
        terminal_policy = bed.controller.policy
        assert terminal_policy is not None
        target = render_reachability_figure(
            sorted(topology.terminals_by_id),
            reachable,
            terminal_policy.allow_t,
            args.figures,
        )
        print(f"wrote {target}")
    return 0 if compliance.compliant else 1


def cmd_bench(args) -> int:
    results = run_bench_scales(
        args.switches, args.terminals, list(args.pairs), args.seed, repeats=args.repeats
    )
    print(format_bench(results))
    if args.csv:
        write_bench_csv(results, args.csv)
        print(f"wrote {args.csv}")
    if args.report:
        write_report(assemble_report(bench=results), args.report)
    if args.figures:
        for target in render_bench_figures(results, args.figures):
            print(f"wrote {target}")
    return 0 if all(r.compliance_ok for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdnfence",
        description=(
            "Compile service-composition access policy into switch rules, "
            "simulate enforcement, and verify the result by injection."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check topology, service plane and policy files")
    p.add_argument("topology", help="topology JSON file")
    p.add_argument("services", help="service plane JSON file")
    p.add_argument("policy", nargs="?", default=None, help="policy JSON file (optional)")
    p.add_argument("--report", default=None, help="write a JSON report here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile a policy into the full rule set")
    p.add_argument("topology")
    p.add_argument("services")
    p.add_argument("policy")
    p.add_argument("--out", required=True, help="where to write rules JSON")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run-scenario", help="play a scripted scenario against its fixture")
    p.add_argument(
        "scenario",
        help=f"built-in name ({', '.join(sorted(BUILTIN_SCENARIOS))}, all) or a scenario file",
    )
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_run_scenario)

    p = sub.add_parser("verify", help="deploy a policy and probe it for leaks and gaps")
    p.add_argument("topology")
    p.add_argument("services")
    p.add_argument("policy")
    p.add_argument("--report", default=None)
    p.add_argument("--figures", default=None, help="directory for rendered figures")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="measure the pipeline on generated fabrics")
    p.add_argument("--switches", type=int, required=True)
    p.add_argument("--terminals", type=int, required=True)
    p.add_argument("--pairs", type=int, nargs="+", required=True,
                   help="one or more policy sizes to run")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--csv", default=None, help="write per-scale results as CSV")
    p.add_argument("--report", default=None)
    p.add_argument("--figures", default=None, help="directory for rendered figures")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputFormatError, GenerationError, FixtureMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EnforcementError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
