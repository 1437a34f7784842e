"""Injection-based verification of a deployed policy.

The verifier treats the deployment as a black box: it synthesizes one
canonical packet per ordered terminal pair, injects it, and watches what
comes out.  Delivery through the fabric is the ground truth; flow tables
are never trusted, only observed behaviour.

A deployment complies with its policy when the delivered pairs are exactly
the allowed pairs plus, at most, their response directions.  Anything extra
is a leak; any allowed pair that cannot get through is a gap (or, when the
topology itself cannot connect the pair, an unsatisfiable grant, reported
separately since no rule change can fix wiring).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import EnforcementError
from .policy import ServicePolicy, TerminalPolicy, to_terminal_policy
from .testbed import Testbed


class ProbeMode(str, Enum):
    #: escalations reach the controller, as in live operation
    WITH_CONTROLLER = "with-controller"
    #: tables answer alone; a miss is a drop.  Probes cannot install state,
    #: so this mode audits exactly what is already in the fabric.
    TABLES_ONLY = "tables-only"


def reachable_pairs(
    bed: Testbed,
    pairs: Iterable[tuple[str, str]] | None = None,
    mode: ProbeMode = ProbeMode.WITH_CONTROLLER,
    *,
    clone_per_probe: bool = True,
) -> frozenset[tuple[str, str]]:
    """Ordered terminal pairs whose canonical probe packet gets delivered.

    Each probe runs against a fresh clone of the deployment by default, so
    probing is free of side effects and the order of pairs cannot matter.
    ``clone_per_probe=False`` probes the live deployment instead, which is
    cheaper but lets permitted probes install their rules for real.
    """
    if pairs is None:
        ids = sorted(bed.topology.terminals_by_id)
        pairs = [(a, b) for a in ids for b in ids if a != b]
    reachable: set[tuple[str, str]] = set()
    for src, dst in sorted(set(pairs)):
        target = bed.clone() if clone_per_probe else bed
        try:
            result = target.inject(
                src,
                target.packet_between(src, dst),
                with_controller=(mode is ProbeMode.WITH_CONTROLLER),
            )
        except EnforcementError:
            continue  # unattached source, looping rogue rules: not delivery
        if result.delivered:
            reachable.add((src, dst))
    return frozenset(reachable)


@dataclass(frozen=True)
class ComplianceFinding:
    """One observed divergence between policy and behaviour."""

    kind: str  # "leak" | "gap" | "unsatisfiable"
    pair: tuple[str, str]
    principals: tuple[str | None, str | None]
    detail: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "pair": list(self.pair),
            "principals": list(self.principals),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ComplianceReport:
    """Outcome of a full or sampled compliance check.

    ``reverse_delivered`` lists response-direction pairs that were observed
    deliverable; they conform (responses must flow back) and are reported
    for transparency, not as violations.
    """

    compliant: bool
    leaks: tuple[ComplianceFinding, ...]
    gaps: tuple[ComplianceFinding, ...]
    unsatisfiable: tuple[ComplianceFinding, ...]
    reverse_delivered: tuple[tuple[str, str], ...]
    probed: int

    @property
    def findings(self) -> tuple[ComplianceFinding, ...]:
        return self.leaks + self.gaps + self.unsatisfiable

    def to_dict(self) -> dict:
        return {
            "compliant": self.compliant,
            "probed": self.probed,
            "leaks": [f.to_dict() for f in self.leaks],
            "gaps": [f.to_dict() for f in self.gaps],
            "unsatisfiable": [f.to_dict() for f in self.unsatisfiable],
            "reverse_delivered": [list(p) for p in self.reverse_delivered],
        }


def _principal_names(bed: Testbed) -> dict[str, str]:
    names: dict[str, str] = {}
    for svc in bed.services:
        names.setdefault(svc.terminal, f"service:{svc.id}")
    for con in bed.consumers:
        names.setdefault(con.terminal, f"consumer:{con.id}")
    return names


def check_compliance(
    bed: Testbed,
    policy: ServicePolicy | TerminalPolicy | None = None,
    *,
    sample: int | None = None,
    rng: random.Random | None = None,
    clone_per_probe: bool = True,
) -> ComplianceReport:
    """Probe a deployment and compare observed delivery against the policy.

    ``policy`` defaults to whatever the deployment is running.  With
    ``sample`` set, only that many randomly chosen ordered pairs are probed
    (seeded via ``rng``), and the gap check covers only sampled pairs; leak
    detection is exact over the sample either way.
    """
    if policy is None:
        policy = bed.service_policy if bed.service_policy is not None else bed.controller.policy
    if policy is None:
        raise ValueError("no policy to check against; upload one or pass it explicitly")
    if isinstance(policy, ServicePolicy):
        terminal_policy = to_terminal_policy(policy, bed.services, bed.consumers)
    else:
        terminal_policy = policy

    ids = sorted(bed.topology.terminals_by_id)
    all_pairs = [(a, b) for a in ids for b in ids if a != b]
    if sample is not None and sample < len(all_pairs):
        rng = rng if rng is not None else random.Random(0)
        probe_pairs = sorted(rng.sample(all_pairs, sample))
    else:
        probe_pairs = all_pairs

    reachable = reachable_pairs(bed, probe_pairs, clone_per_probe=clone_per_probe)

    allowed = terminal_policy.allow_t
    reverse_of_allowed = frozenset((b, a) for a, b in allowed)
    names = _principal_names(bed)

    def principals(pair: tuple[str, str]) -> tuple[str | None, str | None]:
        return (names.get(pair[0]), names.get(pair[1]))

    leaks = []
    reverse_delivered = []
    for pair in sorted(reachable):
        if pair in allowed:
            continue
        if pair in reverse_of_allowed:
            reverse_delivered.append(pair)
            continue
        leaks.append(ComplianceFinding(
            kind="leak",
            pair=pair,
            principals=principals(pair),
            detail=f"traffic {pair[0]} -> {pair[1]} is deliverable but not allowed",
        ))

    gaps = []
    unsatisfiable = []
    probed_set = set(probe_pairs)
    for pair in sorted(allowed):
        if pair not in probed_set or pair in reachable:
            continue
        if bed.topology.connected(*pair):
            gaps.append(ComplianceFinding(
                kind="gap",
                pair=pair,
                principals=principals(pair),
                detail=f"allowed traffic {pair[0]} -> {pair[1]} cannot get through",
            ))
        else:
            unsatisfiable.append(ComplianceFinding(
                kind="unsatisfiable",
                pair=pair,
                principals=principals(pair),
                detail=(
                    f"allowed traffic {pair[0]} -> {pair[1]} has no physical route; "
                    "no rule set can honour this grant"
                ),
            ))

    return ComplianceReport(
        compliant=not (leaks or gaps or unsatisfiable),
        leaks=tuple(leaks),
        gaps=tuple(gaps),
        unsatisfiable=tuple(unsatisfiable),
        reverse_delivered=tuple(reverse_delivered),
        probed=len(probe_pairs),
    )
