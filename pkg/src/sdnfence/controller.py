"""Policy-enforcing controller.

The controller owns the terminal-level policy and decides, per flow, which
rules the switches get.  Deny state is proactive: uploading a policy yields
drop entries at the edge switch of every blocked or denied source, so
hostile traffic dies at its first hop without ever reaching the controller
again.  Allow state is lazy: nothing is installed for an allowed pair until
its first packet actually shows up as a packet-in, at which point the
controller hands back forward entries for every switch on the least-cost
path, plus the mirrored entries for the response direction.

The controller never touches switches itself.  Every operation returns the
rule operations it wants applied, and the caller (testbed, simulator,
deployment glue) is responsible for pushing them into the fabric.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .dataplane import FlowAction, FlowEntry, Packet
from .errors import (
    NoPathError,
    NoPolicyUploadedError,
    PairNotAllowedError,
    TopologyError,
    UnknownTerminalError,
)
from .model import Topology
from .policy import TerminalPolicy


@dataclass(frozen=True)
class PacketIn:
    """A table miss reported by a switch: where it happened and the packet."""

    switch_id: str
    in_port: int
    packet: Packet


class Verdict(str, Enum):
    PERMIT = "permit"
    DENY = "deny"


@dataclass(frozen=True)
class Decision:
    """The controller's answer to one packet-in."""

    verdict: Verdict
    rules: tuple[tuple[str, FlowEntry], ...] = ()

    @property
    def permitted(self) -> bool:
        return self.verdict is Verdict.PERMIT


@dataclass(frozen=True)
class RuleDelta:
    """Rule operations a policy change wants applied to the fabric."""

    installs: tuple[tuple[str, FlowEntry], ...] = ()
    removals: tuple[tuple[str, FlowEntry], ...] = ()

    @property
    def empty(self) -> bool:
        return not self.installs and not self.removals

    def to_dict(self) -> dict:
        return {
            "installs": [{"switch": s, "entry": e.to_dict()} for s, e in self.installs],
            "removals": [{"switch": s, "entry": e.to_dict()} for s, e in self.removals],
        }


@dataclass
class ControllerStats:
    packet_ins: int = 0
    permits: int = 0
    denials: int = 0
    rules_installed: int = 0
    rules_removed: int = 0

    def to_dict(self) -> dict:
        return {
            "packet_ins": self.packet_ins,
            "permits": self.permits,
            "denials": self.denials,
            "rules_installed": self.rules_installed,
            "rules_removed": self.rules_removed,
        }


def _rule_sort_key(item: tuple[str, FlowEntry]) -> tuple:
    switch_id, entry = item
    return (switch_id, entry.sort_key())


class Controller:
    """Decides admission per flow and synthesizes the rules to enforce it.

    A packet-in is denied unless all of the following hold: both header
    pairs resolve to known terminals, the packet entered the fabric at its
    source terminal's own attachment port (anything else is header
    spoofing), the source is not blocked, and the ordered terminal pair is
    allowed.  Denials install nothing, so unknown or spoofed traffic keeps
    falling to the controller and keeps being refused.
    """

    def __init__(self, topology: Topology) -> None:
        self.topology = topology
        self.policy: TerminalPolicy | None = None
        self.stats = ControllerStats()
        self._by_addr = {
            (t.mac, t.ip): t for t in topology.terminals_by_id.values()
        }
        # rules currently installed for allowed pairs, keyed by ordered pair
        self._pair_rules: dict[tuple[str, str], tuple[tuple[str, FlowEntry], ...]] = {}
        # proactive drop entries derived from the current policy
        self._deny_rules: frozenset[tuple[str, FlowEntry]] = frozenset()
        # path rules are a function of topology alone; cache them across
        # policy changes
        self._pair_cache: dict[tuple[str, str], tuple[tuple[str, FlowEntry], ...]] = {}

    # -- policy lifecycle -----------------------------------------------------

    def _check_terminals(self, policy: TerminalPolicy) -> None:
        known = self.topology.terminals_by_id
        referenced = (
            {t for pair in policy.allow_t for t in pair}
            | {t for pair in policy.deny_t for t in pair}
            | set(policy.blocked)
        )
        unknown = sorted(referenced - known.keys())
        if unknown:
            raise UnknownTerminalError(f"policy references unknown terminals: {', '.join(unknown)}")

    def _deny_entries(self, policy: TerminalPolicy) -> frozenset[tuple[str, FlowEntry]]:
        entries: set[tuple[str, FlowEntry]] = set()
        terminals = self.topology.terminals_by_id
        for terminal_id in policy.blocked:
            src = terminals[terminal_id]
            port = self.topology.attachment(terminal_id)
            entries.add((
                port.switch_id,
                FlowEntry(src.mac, src.ip, None, None, port.port_no, FlowAction.DROP),
            ))
        for src_id, dst_id in policy.deny_t:
            src, dst = terminals[src_id], terminals[dst_id]
            port = self.topology.attachment(src_id)
            entries.add((
                port.switch_id,
                FlowEntry(src.mac, src.ip, dst.mac, dst.ip, port.port_no, FlowAction.DROP),
            ))
        return frozenset(entries)

    def upload_policy(self, policy: TerminalPolicy) -> RuleDelta:
        """Replace all enforcement state with a freshly uploaded policy.

        Everything previously installed is withdrawn; the returned delta
        installs exactly the proactive drop entries of the new policy.
        Allowed pairs get no rules yet.
        """
        self._check_terminals(policy)
        removals = sorted(self._installed_items(), key=_rule_sort_key)
        installs = sorted(self._deny_entries(policy), key=_rule_sort_key)
        self._pair_rules.clear()
        self._deny_rules = frozenset(installs)
        self.policy = policy
        self.stats.rules_removed += len(removals)
        self.stats.rules_installed += len(installs)
        return RuleDelta(installs=tuple(installs), removals=tuple(removals))

    def apply_update(self, policy: TerminalPolicy) -> RuleDelta:
        """Move to a new policy without disturbing still-valid state.

        Drop entries are diffed.  Rules of allow pairs that survive the
        update stay installed; rules of pairs no longer allowed are
        withdrawn.  Newly allowed pairs are not pre-installed; their rules
        arrive on first use like any other.  Called before any upload, this
        is simply the first upload.
        """
        if self.policy is None:
            return self.upload_policy(policy)
        self._check_terminals(policy)
        new_deny = self._deny_entries(policy)
        installs = sorted(new_deny - self._deny_rules, key=_rule_sort_key)
        removals = list(self._deny_rules - new_deny)
        for pair in sorted(self._pair_rules):
            if pair not in policy.allow_t:
                removals.extend(self._pair_rules.pop(pair))
        removals.sort(key=_rule_sort_key)
        self._deny_rules = new_deny
        self.policy = policy
        self.stats.rules_removed += len(removals)
        self.stats.rules_installed += len(installs)
        return RuleDelta(installs=tuple(installs), removals=tuple(removals))

    # -- flow admission -------------------------------------------------------

    def handle_packet_in(self, event: PacketIn) -> Decision:
        """Admit or refuse the flow behind one escalated packet."""
        if self.policy is None:
            raise NoPolicyUploadedError("a policy must be uploaded before packets arrive")
        self.stats.packet_ins += 1
        packet = event.packet
        src = self._by_addr.get((packet.src_mac, packet.src_ip))
        dst = self._by_addr.get((packet.dst_mac, packet.dst_ip))
        if src is None or dst is None:
            return self._deny()
        try:
            attachment = self.topology.attachment(src.id)
        except TopologyError:
            return self._deny()  # headers claim a terminal that is not even wired up
        if (attachment.switch_id, attachment.port_no) != (event.switch_id, event.in_port):
            # headers claim a terminal that lives elsewhere: spoofed
            return self._deny()
        if not self.policy.permits(src.id, dst.id):
            return self._deny()
        pair = (src.id, dst.id)
        rules = self._pair_rules.get(pair)
        if rules is None:
            try:
                rules = self._path_rules(pair)
            except NoPathError:
                return self._deny()
            self._pair_rules[pair] = rules
            self.stats.rules_installed += len(rules)
        self.stats.permits += 1
        return Decision(Verdict.PERMIT, rules)

    def _deny(self) -> Decision:
        self.stats.denials += 1
        return Decision(Verdict.DENY)

    # -- rule synthesis -------------------------------------------------------

    def _path_rules(self, pair: tuple[str, str]) -> tuple[tuple[str, FlowEntry], ...]:
        cached = self._pair_cache.get(pair)
        if cached is not None:
            return cached
        src_id, dst_id = pair
        path = self.topology.least_cost_path(src_id, dst_id)
        if path is None:
            raise NoPathError(f"no route from {src_id!r} to {dst_id!r}")
        terminals = self.topology.terminals_by_id
        src, dst = terminals[src_id], terminals[dst_id]
        forward = [
            (
                hop.switch_id,
                FlowEntry(src.mac, src.ip, dst.mac, dst.ip, hop.in_port, FlowAction.FORWARD, hop.out_port),
            )
            for hop in path.switch_hops
        ]
        reverse = [
            (
                hop.switch_id,
                FlowEntry(dst.mac, dst.ip, src.mac, src.ip, hop.out_port, FlowAction.FORWARD, hop.in_port),
            )
            for hop in reversed(path.switch_hops)
        ]
        rules = tuple(forward + reverse)
        self._pair_cache[pair] = rules
        return rules

    def synthesize_flow_rules(
        self, src_terminal: str, dst_terminal: str
    ) -> tuple[tuple[str, FlowEntry], ...]:
        """Rules enforcing one allowed pair: the forward entries along the
        least-cost path and the mirrored response entries, in path order.

        The pair must be allowed by the current policy; synthesis for
        anything else is refused rather than silently opening a flow.
        """
        if self.policy is None:
            raise NoPolicyUploadedError("no policy uploaded")
        pair = (src_terminal, dst_terminal)
        if not self.policy.permits(src_terminal, dst_terminal):
            raise PairNotAllowedError(f"pair {pair!r} is not allowed by the policy")
        return self._path_rules(pair)

    # -- introspection --------------------------------------------------------

    def _installed_items(self) -> list[tuple[str, FlowEntry]]:
        items = list(self._deny_rules)
        for rules in self._pair_rules.values():
            items.extend(rules)
        return items

    def installed_rules(self) -> dict[str, set[FlowEntry]]:
        """Everything the controller believes is installed, by switch."""
        by_switch: dict[str, set[FlowEntry]] = {}
        for switch_id, entry in self._installed_items():
            by_switch.setdefault(switch_id, set()).add(entry)
        return by_switch

    def installed_pairs(self) -> frozenset[tuple[str, str]]:
        """Ordered pairs whose path rules are currently installed."""
        return frozenset(self._pair_rules)
