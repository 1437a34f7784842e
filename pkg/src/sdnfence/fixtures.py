"""Canonical demo deployments used by scenarios, tests and the CLI.

Three small setups cover the interesting ground:

* ``two-switch``: five terminals on two daisy-chained switches, three
  services and one trusted consumer, with a three-pair allow policy.
* ``two-switch-blocklist``: same fabric, but the trusted consumer moved and
  a malicious consumer sits on the vacated terminal.
* ``monitoring``: a five-service patient-monitoring composition whose
  policy is derived from its invocation automaton rather than written by
  hand.

Builders return fresh objects on every call so tests can mutate freely.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Composition, Consumer, Link, Switch, Terminal, Topology, WebService
from .policy import Principal, ServicePolicy, derive_service_policy
from .testbed import Testbed


def make_terminal(k: int, id: str | None = None) -> Terminal:
    """Terminal ``t<k>`` with the package's conventional address scheme."""
    return Terminal(id=id or f"t{k}", mac=f"00:00:00:00:{k // 256:02x}:{k % 256:02x}", ip=f"10.0.{k // 256}.{k % 256}")


@dataclass(frozen=True)
class Fixture:
    """A ready-to-deploy model: fabric, service plane and policy."""

    name: str
    topology: Topology
    services: tuple[WebService, ...]
    consumers: tuple[Consumer, ...]
    policy: ServicePolicy
    composition: Composition | None = None

    def deploy(self) -> Testbed:
        """Stand the fixture up with its policy uploaded."""
        return Testbed.deploy(self.topology, self.services, self.consumers, self.policy)


def _two_switch_topology() -> Topology:
    # sw1 fully populated: three terminals plus the uplink; sw2 carries the
    # uplink and the two remaining terminals.  All inter-device costs are 1.
    terminals = [make_terminal(k) for k in (1, 2, 3, 5, 6)]
    switches = [Switch("sw1", (1, 2, 3, 4)), Switch("sw2", (1, 2, 3))]
    links = [
        Link("t1", "sw1.p1", 1),
        Link("t2", "sw1.p2", 1),
        Link("t3", "sw1.p3", 1),
        Link("sw1.p4", "sw2.p1", 1),
        Link("t5", "sw2.p2", 1),
        Link("t6", "sw2.p3", 1),
    ]
    return Topology(terminals, switches, links)


def two_switch_fixture() -> Fixture:
    """Three services, one consumer, three allowed flows."""
    services = (
        WebService("s1", "/svc/s1", "t1"),
        WebService("s2", "/svc/s2", "t2"),
        WebService("s3", "/svc/s3", "t3"),
    )
    consumers = (Consumer("sc1", "t5"),)
    policy = ServicePolicy(allow=frozenset({
        (Principal.service("s1"), "s2"),
        (Principal.service("s1"), "s3"),
        (Principal.consumer("sc1"), "s3"),
    }))
    return Fixture("two-switch", _two_switch_topology(), services, consumers, policy)


def blocklist_fixture() -> Fixture:
    """Same fabric, with a malicious consumer to cut off at its edge switch.

    The trusted consumer lives on t6 here; t5 hosts a consumer flagged
    malicious, so the upload lands a wildcard drop at t5's attachment port.
    """
    services = (
        WebService("s1", "/svc/s1", "t1"),
        WebService("s2", "/svc/s2", "t2"),
        WebService("s3", "/svc/s3", "t3"),
    )
    consumers = (Consumer("sc1", "t6"), Consumer("sc2", "t5"))
    policy = ServicePolicy(
        allow=frozenset({
            (Principal.service("s1"), "s2"),
            (Principal.service("s1"), "s3"),
            (Principal.consumer("sc1"), "s3"),
        }),
        malicious=frozenset({"sc2"}),
    )
    return Fixture("two-switch-blocklist", _two_switch_topology(), services, consumers, policy)


def monitoring_composition() -> Composition:
    """Invocation automaton of the patient-monitoring composition.

    Login hands off to monitoring; the heart-rate and temperature sensors
    push into monitoring; monitoring raises alarms.
    """
    return Composition(
        services=frozenset({"s1", "s2", "s3", "s4", "s5"}),
        events=frozenset({"c1", "c2", "c3", "c4"}),
        initial="s1",
        transitions=frozenset({
            ("s1", "c1", "s2"),
            ("s3", "c2", "s2"),
            ("s4", "c3", "s2"),
            ("s2", "c4", "s5"),
        }),
    )


def monitoring_fixture() -> Fixture:
    """Five services over two switches; the policy is derived, not written."""
    terminals = [make_terminal(k) for k in (1, 2, 3, 4, 5)]
    switches = [Switch("sw1", (1, 2, 3, 4)), Switch("sw2", (1, 2, 3))]
    links = [
        Link("t1", "sw1.p1", 1),
        Link("t2", "sw1.p2", 1),
        Link("t3", "sw1.p3", 1),
        Link("sw1.p4", "sw2.p1", 1),
        Link("t4", "sw2.p2", 1),
        Link("t5", "sw2.p3", 1),
    ]
    services = (
        WebService("s1", "/SOA/login", "t1"),
        WebService("s2", "/SOA/monitoring", "t2"),
        WebService("s3", "/SOA/heart rate", "t3"),
        WebService("s4", "/SOA/temperature", "t4"),
        WebService("s5", "/SOA/alarming", "t5"),
    )
    composition = monitoring_composition()
    policy = derive_service_policy(composition)
    return Fixture(
        "monitoring",
        Topology(terminals, switches, links),
        services,
        (),
        policy,
        composition,
    )


FIXTURES = {
    "two-switch": two_switch_fixture,
    "two-switch-blocklist": blocklist_fixture,
    "monitoring": monitoring_fixture,
}


def load_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(
            f"unknown fixture {name!r}; available: {', '.join(sorted(FIXTURES))}"
        ) from None
