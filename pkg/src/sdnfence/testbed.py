"""Deployment glue: one fabric, one controller, one policy.

A testbed wires a simulated network to a controller and keeps the service
plane (services, consumers, the service-level policy) next to them.  It is
the object scenarios, verification and the CLI operate on: upload or update
a policy and the resulting rule operations are pushed into the fabric
immediately, inject a packet and the controller is on the wire for
escalations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .controller import Controller, RuleDelta
from .dataplane import Network, Packet, TraceResult
from .errors import UnknownTerminalError
from .model import Consumer, Terminal, Topology, WebService
from .policy import ServicePolicy, TerminalPolicy, to_terminal_policy


@dataclass
class Testbed:
    """A deployed enforcement stack plus its service plane."""

    topology: Topology
    network: Network
    controller: Controller
    services: tuple[WebService, ...] = ()
    consumers: tuple[Consumer, ...] = ()
    service_policy: ServicePolicy | None = None

    @classmethod
    def deploy(
        cls,
        topology: Topology,
        services: tuple[WebService, ...] = (),
        consumers: tuple[Consumer, ...] = (),
        policy: ServicePolicy | None = None,
    ) -> "Testbed":
        """Stand up a fresh fabric and controller; upload the policy if given."""
        bed = cls(
            topology=topology,
            network=Network(topology),
            controller=Controller(topology),
            services=tuple(services),
            consumers=tuple(consumers),
        )
        if policy is not None:
            bed.upload(policy)
        return bed

    def compile_policy(self, policy: ServicePolicy) -> TerminalPolicy:
        return to_terminal_policy(policy, self.services, self.consumers)

    def _push(self, delta: RuleDelta) -> RuleDelta:
        self.network.apply_rules(delta.installs, delta.removals)
        return delta

    def upload(self, policy: ServicePolicy | TerminalPolicy) -> RuleDelta:
        """Full upload: compile if needed, reset the fabric to the new policy."""
        if isinstance(policy, ServicePolicy):
            self.service_policy = policy
            policy = self.compile_policy(policy)
        else:
            self.service_policy = None
        return self._push(self.controller.upload_policy(policy))

    def update(self, policy: ServicePolicy | TerminalPolicy) -> RuleDelta:
        """Differential update keeping rules of still-allowed pairs in place."""
        if isinstance(policy, ServicePolicy):
            self.service_policy = policy
            policy = self.compile_policy(policy)
        else:
            self.service_policy = None
        return self._push(self.controller.apply_update(policy))

    def terminal(self, terminal_id: str) -> Terminal:
        terminal = self.topology.terminals_by_id.get(terminal_id)
        if terminal is None:
            raise UnknownTerminalError(f"unknown terminal {terminal_id!r}")
        return terminal

    def packet_between(
        self, src_terminal: str, dst_terminal: str, payload: bytes = b""
    ) -> Packet:
        """A canonical packet carrying the two terminals' real headers."""
        src = self.terminal(src_terminal)
        dst = self.terminal(dst_terminal)
        return Packet(src.mac, src.ip, dst.mac, dst.ip, payload)

    def inject(
        self,
        at_terminal: str,
        packet: Packet,
        *,
        spoofed: bool = False,
        with_controller: bool = True,
    ) -> TraceResult:
        controller = self.controller if with_controller else None
        return self.network.inject(at_terminal, packet, controller, spoofed=spoofed)

    def send(
        self, src_terminal: str, dst_terminal: str, payload: bytes = b""
    ) -> TraceResult:
        """Inject a well-formed packet from one terminal to another."""
        return self.inject(src_terminal, self.packet_between(src_terminal, dst_terminal, payload))

    def exercise(self, pairs: "list[tuple[str, str]] | None" = None) -> dict[tuple[str, str], TraceResult]:
        """Send one packet per pair (default: every allowed pair, sorted).

        Exercising every allowed pair is how a deployment reaches its steady
        state, with path rules installed for all live flows.
        """
        if pairs is None:
            policy = self.controller.policy
            pairs = sorted(policy.allow_t) if policy is not None else []
        return {pair: self.send(*pair) for pair in pairs}

    def clone(self) -> "Testbed":
        """Independent copy for destructive probing; the topology is shared."""
        controller = Controller(self.topology)
        controller.policy = self.controller.policy
        controller._pair_rules = dict(self.controller._pair_rules)
        controller._deny_rules = self.controller._deny_rules
        controller._pair_cache = self.controller._pair_cache  # topology-pure, safe to share
        return Testbed(
            topology=self.topology,
            network=self.network.clone(),
            controller=controller,
            services=self.services,
            consumers=self.consumers,
            service_policy=self.service_policy,
        )
