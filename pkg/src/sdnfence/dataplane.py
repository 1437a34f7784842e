"""Deterministic switch-fabric simulator.

Switches hold flow tables and forward injected packets hop by hop; there is
no queuing, no timing and no packet loss, so a given table state and packet
always produce the same trace.  A switch that has no matching entry either
drops the packet or, when a controller is wired in, raises a packet-in and
retries the lookup after the controller's verdict.  The empty table forwards
nothing: reachability exists only where rules were installed.

Matching follows two precedence levels: drop entries are consulted before
forward entries, and within a level the oldest installed entry wins.  An
entry's counter counts the packets it matched.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Iterator

from .errors import (
    ForwardingLoopError,
    UnknownPortError,
    UnknownSwitchError,
    UnknownTerminalError,
)
from .model import Switch, Topology, is_valid_ip, is_valid_mac, port_key

if TYPE_CHECKING:  # pragma: no cover
    from .controller import Controller


class FlowAction(str, Enum):
    FORWARD = "forward"
    DROP = "drop"


@dataclass(frozen=True)
class FlowEntry:
    """One flow-table entry.

    Matching is exact on source MAC/IP and ingress port.  Destination MAC/IP
    are either both exact or both wildcarded (``None``); wildcards are only
    legal on drop entries, which is how one rule cuts off every flow of a
    blocked source.  Forward entries name the egress port, drop entries have
    none.
    """

    src_mac: str
    src_ip: str
    dst_mac: str | None
    dst_ip: str | None
    in_port: int
    action: FlowAction
    out_port: int | None = None

    def __post_init__(self) -> None:
        if isinstance(self.src_mac, str):
            object.__setattr__(self, "src_mac", self.src_mac.lower())
        if isinstance(self.dst_mac, str):
            object.__setattr__(self, "dst_mac", self.dst_mac.lower())
        if (self.dst_mac is None) != (self.dst_ip is None):
            raise ValueError("destination MAC and IP must be wildcarded together")
        if not isinstance(self.in_port, int) or self.in_port < 1:
            raise ValueError(f"invalid ingress port {self.in_port!r}")
        if self.action is FlowAction.FORWARD:
            if self.out_port is None:
                raise ValueError("forward entries need an egress port")
            if self.dst_mac is None:
                raise ValueError("forward entries cannot wildcard the destination")
        else:
            if self.out_port is not None:
                raise ValueError("drop entries take no egress port")

    @property
    def wildcard_dst(self) -> bool:
        return self.dst_mac is None

    def sort_key(self) -> tuple:
        return (
            self.src_ip,
            self.src_mac,
            self.dst_ip or "",
            self.dst_mac or "",
            self.in_port,
            self.action.value,
            self.out_port if self.out_port is not None else 0,
        )

    def to_dict(self) -> dict:
        data: dict = {
            "src_mac": self.src_mac,
            "src_ip": self.src_ip,
            "dst_mac": self.dst_mac if self.dst_mac is not None else "*",
            "dst_ip": self.dst_ip if self.dst_ip is not None else "*",
            "in_port": self.in_port,
            "action": self.action.value,
        }
        if self.action is FlowAction.FORWARD:
            data["out_port"] = self.out_port
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "FlowEntry":
        dst_mac = data["dst_mac"]
        dst_ip = data["dst_ip"]
        return cls(
            src_mac=data["src_mac"],
            src_ip=data["src_ip"],
            dst_mac=None if dst_mac == "*" else dst_mac,
            dst_ip=None if dst_ip == "*" else dst_ip,
            in_port=data["in_port"],
            action=FlowAction(data["action"]),
            out_port=data.get("out_port"),
        )


@dataclass(frozen=True)
class Packet:
    """An injected frame: addressing headers plus an opaque payload."""

    src_mac: str
    src_ip: str
    dst_mac: str
    dst_ip: str
    payload: bytes = b""

    def __post_init__(self) -> None:
        object.__setattr__(self, "src_mac", self.src_mac.lower())
        object.__setattr__(self, "dst_mac", self.dst_mac.lower())
        for label, mac in (("source", self.src_mac), ("destination", self.dst_mac)):
            if not is_valid_mac(mac):
                raise ValueError(f"malformed {label} MAC {mac!r}")
        for label, ip in (("source", self.src_ip), ("destination", self.dst_ip)):
            if not is_valid_ip(ip):
                raise ValueError(f"malformed {label} IP {ip!r}")


class FlowTable:
    """An ordered set of flow entries with exact-match lookup.

    Entries are a set: installing an identical entry again is a no-op, as is
    removing an absent one.  Lookup is O(1) via per-category indexes keyed on
    the match fields; the indexes are rebuilt lazily after removals.
    """

    def __init__(self) -> None:
        self._seq = 0
        self._order: dict[FlowEntry, int] = {}
        self._counters: dict[FlowEntry, int] = {}
        self._fwd: dict[tuple, tuple[int, FlowEntry]] = {}
        self._drop_exact: dict[tuple, tuple[int, FlowEntry]] = {}
        self._drop_wild: dict[tuple, tuple[int, FlowEntry]] = {}
        self._dirty = False

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, entry: FlowEntry) -> bool:
        return entry in self._order

    def entries(self) -> tuple[FlowEntry, ...]:
        """All entries in installation order."""
        return tuple(sorted(self._order, key=self._order.__getitem__))

    def counter(self, entry: FlowEntry) -> int:
        return self._counters[entry]

    def install(self, entry: FlowEntry) -> bool:
        """Add an entry; False when it was already present."""
        if entry in self._order:
            return False
        self._order[entry] = self._seq
        self._counters[entry] = 0
        if not self._dirty:
            self._index(entry, self._order[entry])
        self._seq += 1
        return True

    def remove(self, entry: FlowEntry) -> bool:
        """Drop an entry; False when it was not present."""
        if entry not in self._order:
            return False
        del self._order[entry]
        del self._counters[entry]
        self._dirty = True
        return True

    def _index(self, entry: FlowEntry, seq: int) -> None:
        if entry.action is FlowAction.DROP:
            if entry.wildcard_dst:
                key = (entry.src_mac, entry.src_ip, entry.in_port)
                bucket = self._drop_wild
            else:
                key = (entry.src_mac, entry.src_ip, entry.dst_mac, entry.dst_ip, entry.in_port)
                bucket = self._drop_exact
        else:
            key = (entry.src_mac, entry.src_ip, entry.dst_mac, entry.dst_ip, entry.in_port)
            bucket = self._fwd
        held = bucket.get(key)
        if held is None or seq < held[0]:
            bucket[key] = (seq, entry)

    def _rebuild(self) -> None:
        self._fwd.clear()
        self._drop_exact.clear()
        self._drop_wild.clear()
        for entry, seq in self._order.items():
            self._index(entry, seq)
        self._dirty = False

    def match(self, packet: Packet, in_port: int) -> FlowEntry | None:
        """First matching entry, drop class first, oldest first; counts the hit."""
        if self._dirty:
            self._rebuild()
        exact_key = (packet.src_mac, packet.src_ip, packet.dst_mac, packet.dst_ip, in_port)
        wild_key = (packet.src_mac, packet.src_ip, in_port)
        candidates = [
            hit for hit in (self._drop_exact.get(exact_key), self._drop_wild.get(wild_key))
            if hit is not None
        ]
        if not candidates:
            hit = self._fwd.get(exact_key)
            if hit is None:
                return None
            candidates = [hit]
        _seq, entry = min(candidates)
        self._counters[entry] += 1
        return entry


@dataclass
class SwitchState:
    """A switch of the fabric together with its runtime flow table."""

    spec: Switch
    table: FlowTable = field(default_factory=FlowTable)


class DropReason(str, Enum):
    DROP_ENTRY = "drop-entry"
    NO_MATCH = "no-match"
    MISROUTED = "misrouted"


class TraceOutcome(str, Enum):
    DELIVERED = "delivered"
    DROPPED = "dropped"
    ESCALATED_DELIVERED = "escalated-delivered"
    ESCALATED_DENIED = "escalated-denied"


@dataclass(frozen=True)
class TraceResult:
    """What happened to one injected packet.

    ``path`` lists the vertices the packet visited, source terminal first;
    for delivered packets it ends at the destination terminal and equals the
    route the rules encode.  ``dropped_at`` and ``reason`` are set for drops,
    and for controller denials ``dropped_at`` is the switch that escalated.
    """

    outcome: TraceOutcome
    path: tuple[str, ...] = ()
    dropped_at: str | None = None
    reason: DropReason | None = None

    @property
    def delivered(self) -> bool:
        return self.outcome in (TraceOutcome.DELIVERED, TraceOutcome.ESCALATED_DELIVERED)

    @property
    def escalated(self) -> bool:
        return self.outcome in (TraceOutcome.ESCALATED_DELIVERED, TraceOutcome.ESCALATED_DENIED)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "path": list(self.path),
            "dropped_at": self.dropped_at,
            "reason": self.reason.value if self.reason else None,
        }


class Network:
    """The simulated fabric: one flow table per topology switch."""

    def __init__(self, topology: Topology) -> None:
        self.topology = topology
        self.switches: dict[str, SwitchState] = {
            s.id: SwitchState(s) for s in topology.switches_by_id.values()
        }

    # -- rule management ------------------------------------------------------

    def _switch(self, switch_id: str) -> SwitchState:
        state = self.switches.get(switch_id)
        if state is None:
            raise UnknownSwitchError(f"no switch {switch_id!r} in this network")
        return state

    def install_entry(self, switch_id: str, entry: FlowEntry) -> bool:
        """Validate an entry against its switch, then add it to the table."""
        state = self._switch(switch_id)
        spec = state.spec
        if not spec.has_port(entry.in_port):
            raise UnknownPortError(f"switch {switch_id!r} has no port {entry.in_port}")
        if entry.action is FlowAction.FORWARD:
            assert entry.out_port is not None
            if not spec.has_port(entry.out_port):
                raise UnknownPortError(f"switch {switch_id!r} has no port {entry.out_port}")
            if entry.out_port == entry.in_port and len(spec.ports) > 1:
                raise ValueError(
                    f"entry reflects traffic out of its ingress port {entry.in_port} "
                    f"on multi-port switch {switch_id!r}"
                )
        return state.table.install(entry)

    def remove_entry(self, switch_id: str, entry: FlowEntry) -> bool:
        return self._switch(switch_id).table.remove(entry)

    def apply_rules(
        self,
        installs: Iterable[tuple[str, FlowEntry]] = (),
        removals: Iterable[tuple[str, FlowEntry]] = (),
    ) -> None:
        """Apply a batch of rule operations, removals first."""
        for switch_id, entry in removals:
            self.remove_entry(switch_id, entry)
        for switch_id, entry in installs:
            self.install_entry(switch_id, entry)

    def rule_count(self) -> int:
        return sum(len(s.table) for s in self.switches.values())

    def iter_rules(self) -> Iterator[tuple[str, FlowEntry]]:
        for switch_id in sorted(self.switches):
            for entry in self.switches[switch_id].table.entries():
                yield switch_id, entry

    def tables_snapshot(self, include_counters: bool = False) -> dict:
        """Canonical per-switch table dump, for comparison and serialization."""
        snapshot: dict = {}
        for switch_id in sorted(self.switches):
            rows = []
            table = self.switches[switch_id].table
            for entry in sorted(table.entries(), key=FlowEntry.sort_key):
                row = entry.to_dict()
                if include_counters:
                    row["packets"] = table.counter(entry)
                rows.append(row)
            snapshot[switch_id] = rows
        return snapshot

    def clone(self) -> "Network":
        """An independent copy sharing the immutable topology."""
        other = Network(self.topology)
        for switch_id, state in self.switches.items():
            other.switches[switch_id].table = copy.deepcopy(state.table)
        return other

    # -- packet forwarding ----------------------------------------------------

    def inject(
        self,
        at_terminal: str,
        packet: Packet,
        controller: "Controller | None" = None,
        *,
        spoofed: bool = False,
    ) -> TraceResult:
        """Send one packet into the fabric at a terminal's attachment port.

        The packet's source headers must be the injecting terminal's own
        unless the caller explicitly marks the injection as spoofed.  With a
        controller attached, a table miss becomes a packet-in; at most one
        escalation is spent per traversal, so a second miss is a drop.
        """
        terminal = self.topology.terminals_by_id.get(at_terminal)
        if terminal is None:
            raise UnknownTerminalError(f"unknown terminal {at_terminal!r}")
        if not spoofed and (packet.src_mac, packet.src_ip) != (terminal.mac, terminal.ip):
            raise ValueError(
                f"packet source headers do not belong to {at_terminal!r}; "
                "pass spoofed=True for deliberate spoofing"
            )
        attachment = self.topology.attachment(at_terminal)
        trace: list[str] = [at_terminal]
        switch_id, in_port = attachment.switch_id, attachment.port_no
        escalated = False
        hops = 0
        max_hops = 4 * max(1, len(self.switches))
        while True:
            hops += 1
            if hops > max_hops:
                raise ForwardingLoopError(
                    f"packet exceeded {max_hops} switch visits; rules form a loop"
                )
            state = self._switch(switch_id)
            trace.append(port_key(switch_id, in_port))
            while True:
                entry = state.table.match(packet, in_port)
                if entry is not None:
                    break
                if controller is None or escalated:
                    return TraceResult(
                        TraceOutcome.DROPPED, tuple(trace), switch_id, DropReason.NO_MATCH
                    )
                escalated = True
                from .controller import PacketIn  # local import; controller imports us

                decision = controller.handle_packet_in(PacketIn(switch_id, in_port, packet))
                if not decision.permitted:
                    return TraceResult(
                        TraceOutcome.ESCALATED_DENIED, tuple(trace), switch_id, None
                    )
                for target_switch, new_entry in decision.rules:
                    self.install_entry(target_switch, new_entry)
            if entry.action is FlowAction.DROP:
                return TraceResult(
                    TraceOutcome.DROPPED, tuple(trace), switch_id, DropReason.DROP_ENTRY
                )
            assert entry.out_port is not None
            trace.append(port_key(switch_id, entry.out_port))
            neighbor = self.topology.external_neighbor(switch_id, entry.out_port)
            if neighbor is None:
                return TraceResult(
                    TraceOutcome.DROPPED, tuple(trace), switch_id, DropReason.MISROUTED
                )
            kind, value = neighbor
            if kind == "terminal":
                trace.append(value)  # type: ignore[arg-type]
                dst = self.topology.terminals_by_id[value]  # type: ignore[index]
                if (dst.mac, dst.ip) == (packet.dst_mac, packet.dst_ip):
                    outcome = (
                        TraceOutcome.ESCALATED_DELIVERED if escalated else TraceOutcome.DELIVERED
                    )
                    return TraceResult(outcome, tuple(trace))
                return TraceResult(
                    TraceOutcome.DROPPED, tuple(trace), switch_id, DropReason.MISROUTED
                )
            switch_id, in_port = value  # type: ignore[misc]
