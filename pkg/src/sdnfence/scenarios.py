"""Scripted attack and traffic scenarios.

A scenario is a deterministic sequence of packet injections against a
fixture, each with the outcome the policy demands.  The three attack
scenarios probe the classic failure modes of an open fabric: a service
host reaching past its grants, a stolen credential replayed from the
wrong host, and a provider pushing data to a terminal that was never
granted it.  The legitimate scenario shows the other half of the
contract: allowed flows get through, first packet via escalation, the
rest straight off the installed rules, responses included.

After the scripted steps every scenario run ends with a full compliance
check, so a scenario passes only if the fabric is also leak-free overall.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataplane import Packet, TraceOutcome, TraceResult
from .errors import FixtureMismatchError
from .fixtures import Fixture, load_fixture
from .verify import ComplianceReport, check_compliance


@dataclass(frozen=True)
class Step:
    """One injection and the outcome it must produce.

    ``src`` and ``dst`` name terminals whose real headers the packet will
    carry; ``at`` is where the packet physically enters.  ``at != src``
    is spoofing and must be flagged as such.
    """

    at: str
    src: str
    dst: str
    expect: TraceOutcome
    payload: bytes = b""
    spoofed: bool = False

    def to_dict(self) -> dict:
        return {
            "at": self.at,
            "src": self.src,
            "dst": self.dst,
            "expect": self.expect.value,
            "payload": self.payload.decode("utf-8", errors="replace"),
            "spoofed": self.spoofed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Step":
        return cls(
            at=data["at"],
            src=data["src"],
            dst=data["dst"],
            expect=TraceOutcome(data["expect"]),
            payload=data.get("payload", "").encode("utf-8"),
            spoofed=bool(data.get("spoofed", False)),
        )


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    steps: tuple[Step, ...]
    fixture: str = "two-switch"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "fixture": self.fixture,
            "steps": [s.to_dict() for s in self.steps],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            name=data["name"],
            description=data.get("description", ""),
            fixture=data.get("fixture", "two-switch"),
            steps=tuple(Step.from_dict(s) for s in data["steps"]),
        )


ILLEGAL_NETWORK_ACCESS = Scenario(
    name="illegal-network-access",
    description=(
        "The host of one service calls another service it holds no grant "
        "for.  The first packet escalates and the controller refuses it; "
        "nothing is installed, so the flow stays dead."
    ),
    steps=(
        Step(at="t2", src="t2", dst="t3", expect=TraceOutcome.ESCALATED_DENIED),
        Step(at="t2", src="t2", dst="t1", expect=TraceOutcome.ESCALATED_DENIED),
    ),
)

IDENTITY_THEFT = Scenario(
    name="identity-theft",
    description=(
        "An attacker replays a stolen consumer credential from their own "
        "terminal.  Network identity, not payload content, decides: the "
        "attacking terminal holds no grant, so the flow is refused before "
        "any service sees the credential."
    ),
    steps=(
        Step(
            at="t6", src="t6", dst="t3",
            expect=TraceOutcome.ESCALATED_DENIED,
            payload=b"credential=sc1",
        ),
    ),
)

SERVICE_LEAKAGE = Scenario(
    name="service-leakage",
    description=(
        "A service host tries to push data to a terminal that was never "
        "granted access to it, aiming to leak a service interface to a "
        "host outside the composition's flow.  The pair is not allowed, "
        "so the push dies at the controller."
    ),
    steps=(
        Step(
            at="t3", src="t3", dst="t2",
            expect=TraceOutcome.ESCALATED_DENIED,
            payload=b"POST /svc/s2 interface-dump",
        ),
        Step(
            at="t3", src="t3", dst="t5",
            expect=TraceOutcome.ESCALATED_DENIED,
            payload=b"POST /svc/s3/export records",
        ),
    ),
)

LEGITIMATE_ACCESS = Scenario(
    name="legitimate-access",
    description=(
        "Every allowed flow gets through: first packets by escalation, "
        "repeats straight off the installed rules, and responses ride the "
        "mirrored entries without asking the controller again."
    ),
    steps=(
        Step(at="t1", src="t1", dst="t2", expect=TraceOutcome.ESCALATED_DELIVERED),
        Step(at="t1", src="t1", dst="t3", expect=TraceOutcome.ESCALATED_DELIVERED),
        Step(at="t5", src="t5", dst="t3", expect=TraceOutcome.ESCALATED_DELIVERED),
        # repeats and responses must not escalate
        Step(at="t1", src="t1", dst="t2", expect=TraceOutcome.DELIVERED),
        Step(at="t3", src="t3", dst="t5", expect=TraceOutcome.DELIVERED, payload=b"200 OK"),
        Step(at="t2", src="t2", dst="t1", expect=TraceOutcome.DELIVERED, payload=b"200 OK"),
    ),
)

BUILTIN_SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in (ILLEGAL_NETWORK_ACCESS, IDENTITY_THEFT, SERVICE_LEAKAGE, LEGITIMATE_ACCESS)
}

ATTACK_SCENARIOS = ("illegal-network-access", "identity-theft", "service-leakage")


@dataclass(frozen=True)
class StepResult:
    step: Step
    actual: TraceResult
    ok: bool

    def to_dict(self) -> dict:
        return {"step": self.step.to_dict(), "actual": self.actual.to_dict(), "ok": self.ok}


@dataclass(frozen=True)
class ScenarioReport:
    """Everything one scenario run produced, steps plus final compliance."""

    scenario: str
    fixture: str
    steps: tuple[StepResult, ...] = ()
    compliance: ComplianceReport | None = None
    rules_installed: int = 0

    @property
    def steps_ok(self) -> bool:
        return all(s.ok for s in self.steps)

    @property
    def passed(self) -> bool:
        return self.steps_ok and (self.compliance is None or self.compliance.compliant)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "fixture": self.fixture,
            "passed": self.passed,
            "steps": [s.to_dict() for s in self.steps],
            "compliance": self.compliance.to_dict() if self.compliance else None,
            "rules_installed": self.rules_installed,
        }


def run_scenario(scenario: Scenario | str, fixture: Fixture | None = None) -> ScenarioReport:
    """Deploy the scenario's fixture, play its steps, then audit compliance.

    Steps run in order against one live deployment because later steps may
    rely on rules earlier steps caused (repeat and response traffic).  A
    scenario referencing terminals its fixture lacks is rejected outright.
    """
    if isinstance(scenario, str):
        if scenario not in BUILTIN_SCENARIOS:
            raise KeyError(
                f"unknown scenario {scenario!r}; built in: {', '.join(sorted(BUILTIN_SCENARIOS))}"
            )
        scenario = BUILTIN_SCENARIOS[scenario]
    if fixture is None:
        fixture = load_fixture(scenario.fixture)

    known = fixture.topology.terminals_by_id
    referenced = {t for s in scenario.steps for t in (s.at, s.src, s.dst)}
    missing = sorted(referenced - known.keys())
    if missing:
        raise FixtureMismatchError(
            f"scenario {scenario.name!r} references terminals absent from fixture "
            f"{fixture.name!r}: {', '.join(missing)}"
        )

    bed = fixture.deploy()
    results: list[StepResult] = []
    for step in scenario.steps:
        src = bed.terminal(step.src)
        dst = bed.terminal(step.dst)
        packet = Packet(src.mac, src.ip, dst.mac, dst.ip, step.payload)
        actual = bed.inject(step.at, packet, spoofed=step.spoofed)
        results.append(StepResult(step=step, actual=actual, ok=actual.outcome is step.expect))

    compliance = check_compliance(bed)
    return ScenarioReport(
        scenario=scenario.name,
        fixture=fixture.name,
        steps=tuple(results),
        compliance=compliance,
        rules_installed=bed.network.rule_count(),
    )
