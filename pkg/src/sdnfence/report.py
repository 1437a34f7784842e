"""Report rendering: terminal text, JSON documents, CSV and figures.

The JSON report keeps every measured number under the top-level
``timings`` key; the rest of the document is a pure function of the seed
and the inputs, so callers can diff reports across runs by dropping that
one key.  Figures are rendered straight to files with the non-interactive
backend, no display required.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchResult
from .model import ValidationReport
from .scenarios import ScenarioReport
from .verify import ComplianceReport


# -- text ---------------------------------------------------------------------


def format_validation(report: ValidationReport) -> str:
    if report.ok:
        return "validation: OK (no violations)"
    lines = [f"validation: {len(report.violations)} violation(s)"]
    for v in report.violations:
        lines.append(f"  [{v.code}] {v.message}")
    return "\n".join(lines)


def format_scenario(report: ScenarioReport) -> str:
    lines = [
        f"scenario {report.scenario!r} on fixture {report.fixture!r}: "
        + ("PASS" if report.passed else "FAIL")
    ]
    for result in report.steps:
        step = result.step
        marker = "ok " if result.ok else "BAD"
        spoof = " (spoofed)" if step.spoofed else ""
        lines.append(
            f"  {marker} {step.at}: {step.src} -> {step.dst}{spoof}: "
            f"expected {step.expect.value}, got {result.actual.outcome.value}"
        )
    if report.compliance is not None:
        lines.append("  " + format_compliance(report.compliance).replace("\n", "\n  "))
    return "\n".join(lines)


def format_compliance(report: ComplianceReport) -> str:
    if report.compliant:
        head = f"compliance: OK ({report.probed} pairs probed"
        if report.reverse_delivered:
            head += f", {len(report.reverse_delivered)} response pairs deliverable"
        return head + ")"
    lines = [f"compliance: FAILED ({report.probed} pairs probed)"]
    for finding in report.findings:
        lines.append(f"  [{finding.kind}] {finding.detail}")
    return "\n".join(lines)


def format_bench(results: Sequence[BenchResult]) -> str:
    lines = [
        "bench: switches terminals pairs rules "
        "transform_ms warmup_ms synthesis_ms per_pair_us packet_in_us compliant"
    ]
    for r in results:
        lines.append(
            f"  {r.switches:8d} {r.terminals:9d} {r.pairs:5d} {r.rules_synthesized:5d} "
            f"{r.transform.mean * 1e3:12.3f} {r.path_warmup.mean * 1e3:9.3f} "
            f"{r.synthesis.mean * 1e3:12.3f} {r.synthesis_per_pair * 1e6:11.2f} "
            f"{r.packet_in.mean * 1e6:12.2f} {'yes' if r.compliance_ok else 'NO'}"
        )
    return "\n".join(lines)


# -- JSON document ------------------------------------------------------------


def assemble_report(
    *,
    validation: ValidationReport | None = None,
    scenarios: Iterable[ScenarioReport] = (),
    compliance: ComplianceReport | None = None,
    bench: Iterable[BenchResult] = (),
    reachable: Iterable[tuple[str, str]] | None = None,
) -> dict:
    """One report document; every measured value sits under 'timings'."""
    scenarios = list(scenarios)
    bench = list(bench)
    doc: dict = {}
    if validation is not None:
        doc["validation"] = validation.to_dict()
    if scenarios:
        doc["scenarios"] = [s.to_dict() for s in scenarios]
    if compliance is not None:
        doc["compliance"] = compliance.to_dict()
    if reachable is not None:
        doc["reachable"] = [list(p) for p in sorted(reachable)]
    if bench:
        doc["bench"] = [r.deterministic_dict() for r in bench]
        doc["timings"] = {
            "bench": [
                {
                    "pairs": r.pairs,
                    "transform": r.transform.to_dict(),
                    "path_warmup": r.path_warmup.to_dict(),
                    "synthesis": r.synthesis.to_dict(),
                    "synthesis_per_pair_mean": r.synthesis_per_pair,
                    "packet_in": r.packet_in.to_dict(),
                }
                for r in bench
            ]
        }
    return doc


# -- CSV ----------------------------------------------------------------------

_CSV_COLUMNS = [
    "switches", "terminals", "pairs", "seed", "repeats",
    "rules_synthesized", "entries_per_pair", "compliance_ok", "compliance_probed",
    "transform_mean_s", "path_warmup_mean_s", "synthesis_mean_s",
    "synthesis_per_pair_s", "packet_in_mean_s",
]


def write_bench_csv(results: Sequence[BenchResult], path: str | Path) -> None:
    """Flat delimited dump of every scale, one row per benchmark result."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_COLUMNS)
        for r in results:
            writer.writerow([
                r.switches, r.terminals, r.pairs, r.seed, r.repeats,
                r.rules_synthesized, f"{r.entries_per_pair:.4f}",
                int(r.compliance_ok), r.compliance_probed,
                f"{r.transform.mean:.9f}", f"{r.path_warmup.mean:.9f}",
                f"{r.synthesis.mean:.9f}", f"{r.synthesis_per_pair:.9f}",
                f"{r.packet_in.mean:.9f}",
            ])


# -- figures ------------------------------------------------------------------


def render_bench_figures(results: Sequence[BenchResult], out_dir: str | Path) -> list[Path]:
    """Scaling figures next to the CSV: totals per phase and per-pair cost."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = sorted(results, key=lambda r: r.pairs)
    pairs = [r.pairs for r in results]
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, series in (
        ("rule synthesis", [r.synthesis for r in results]),
        ("policy transform", [r.transform for r in results]),
        ("path warm-up", [r.path_warmup for r in results]),
    ):
        means = [s.mean for s in series]
        spans = [
            [m - s.min for m, s in zip(means, series)],
            [s.max - m for m, s in zip(means, series)],
        ]
        ax.errorbar(pairs, means, yerr=spans, marker="o", capsize=3, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("allowed pairs")
    ax.set_ylabel("seconds per phase")
    ax.set_title("Enforcement pipeline cost by policy size")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    target = out / "bench_scaling.png"
    fig.savefig(target)
    plt.close(fig)
    written.append(target)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(pairs, [r.synthesis_per_pair * 1e6 for r in results], marker="o",
            label="synthesis per pair")
    ax.plot(pairs, [r.packet_in.mean * 1e6 for r in results], marker="s",
            label="packet-in decision")
    ax.set_xscale("log")
    ax.set_xlabel("allowed pairs")
    ax.set_ylabel("microseconds")
    ax.set_title("Marginal cost per flow")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    target = out / "bench_per_pair.png"
    fig.savefig(target)
    plt.close(fig)
    written.append(target)

    return written


def render_reachability_figure(
    terminal_ids: Sequence[str],
    reachable: Iterable[tuple[str, str]],
    allowed: Iterable[tuple[str, str]],
    out_dir: str | Path,
) -> Path:
    """Who-reaches-whom matrix with the policy overlaid.

    Cell values: 0 unreachable, 1 allowed and deliverable, 2 deliverable
    response direction, 3 leak (deliverable but never allowed), 4 allowed
    but not deliverable.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = list(terminal_ids)
    index = {t: i for i, t in enumerate(ids)}
    reachable = set(reachable)
    allowed = set(allowed)
    reverse = {(b, a) for a, b in allowed}

    grid = [[0.0] * len(ids) for _ in ids]
    for a in ids:
        for b in ids:
            if a == b:
                continue
            pair = (a, b)
            if pair in reachable:
                if pair in allowed:
                    value = 1
                elif pair in reverse:
                    value = 2
                else:
                    value = 3
            else:
                value = 4 if pair in allowed else 0
            grid[index[a]][index[b]] = value

    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(grid, cmap="viridis", vmin=0, vmax=4)
    ax.set_xticks(range(len(ids)), ids, rotation=45, ha="right")
    ax.set_yticks(range(len(ids)), ids)
    ax.set_xlabel("destination terminal")
    ax.set_ylabel("source terminal")
    ax.set_title("Observed reachability vs. policy")
    bar = fig.colorbar(image, ax=ax, ticks=[0, 1, 2, 3, 4])
    bar.ax.set_yticklabels([
        "unreachable", "allowed+delivered", "response", "LEAK", "GAP"
    ])
    fig.tight_layout()
    target = out / "reachability.png"
    fig.savefig(target)
    plt.close(fig)
    return target
