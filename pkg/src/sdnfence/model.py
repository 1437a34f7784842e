"""Formal network and service model.

This module defines the static entities everything else is built on:
terminals (hosts identified by MAC/IP), switches with numbered ports, links
with costs, the topology that ties them together, and the service-plane
entities (web services, service consumers, and the composition automaton
that records which service invokes which).

Two conventions matter throughout the package:

* A *vertex* is addressed by a string key: a terminal by its id (``"t1"``),
  a switch port by ``"<switch>.p<port>"`` (``"sw1.p3"``).  Paths are
  sequences of vertex keys.
* Ports of one switch are implicitly interconnected.  Crossing a switch from
  its entry port to an exit port costs nothing; only declared links carry
  cost.  A packet traverses exactly one entry/exit port pair per visit to a
  switch.

Constructors accept malformed input; :func:`validate_model` and
:func:`validate_composition` report problems instead of raising, so callers
can collect every violation of a bad input file in one pass.
"""

from __future__ import annotations

import heapq
import ipaddress
import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import UnknownVertexError

_MAC_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")
_PORT_KEY_RE = re.compile(r"^(?P<switch>.+)\.p(?P<port>\d+)$")


def is_valid_mac(text: str) -> bool:
    """Accept colon-separated MAC addresses, case-insensitively."""
    return isinstance(text, str) and bool(_MAC_RE.match(text.lower()))


def is_valid_ip(text: str) -> bool:
    if not isinstance(text, str):
        return False
    try:
        ipaddress.IPv4Address(text)
    except (ipaddress.AddressValueError, ValueError):
        return False
    return True


def port_key(switch_id: str, port_no: int) -> str:
    """Vertex key of a switch port."""
    return f"{switch_id}.p{port_no}"


def parse_port_key(key: str) -> tuple[str, int] | None:
    """Inverse of :func:`port_key`; ``None`` if the key has another shape."""
    m = _PORT_KEY_RE.match(key)
    if m is None:
        return None
    return m.group("switch"), int(m.group("port"))


@dataclass(frozen=True)
class Terminal:
    """A host attached to the fabric, identified by its MAC/IP pair."""

    id: str
    mac: str
    ip: str

    def __post_init__(self) -> None:
        # normalise case so header comparison is plain string equality
        object.__setattr__(self, "mac", self.mac.lower() if isinstance(self.mac, str) else self.mac)

    def to_dict(self) -> dict:
        return {"id": self.id, "mac": self.mac, "ip": self.ip}

    @classmethod
    def from_dict(cls, data: dict) -> "Terminal":
        return cls(id=data["id"], mac=data["mac"], ip=data["ip"])


@dataclass(frozen=True)
class SwitchPort:
    """A single numbered port of a switch."""

    switch_id: str
    port_no: int

    @property
    def key(self) -> str:
        return port_key(self.switch_id, self.port_no)


@dataclass(frozen=True)
class Switch:
    """A switch and the set of port numbers it exposes."""

    id: str
    ports: tuple[int, ...]

    def has_port(self, port_no: int) -> bool:
        return port_no in self.ports

    def to_dict(self) -> dict:
        return {"id": self.id, "ports": list(self.ports)}

    @classmethod
    def from_dict(cls, data: dict) -> "Switch":
        return cls(id=data["id"], ports=tuple(data["ports"]))


@dataclass(frozen=True)
class Link:
    """An undirected link between two vertices with a non-negative cost.

    Endpoints are vertex keys: terminal ids or port keys.  A link between
    two ports of the same switch is an inner link and must cost zero; links
    that cross devices must have strictly positive cost.
    """

    a: str
    b: str
    cost: float

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "cost": self.cost}

    @classmethod
    def from_dict(cls, data: dict) -> "Link":
        return cls(a=data["a"], b=data["b"], cost=float(data["cost"]))


@dataclass(frozen=True)
class SwitchHop:
    """One switch traversal of a path: entered at in_port, left at out_port."""

    switch_id: str
    in_port: int
    out_port: int


@dataclass(frozen=True)
class Path:
    """A least-cost route between two terminals.

    ``vertices`` starts at the source terminal, ends at the destination
    terminal, and lists every port crossed in between, in order.
    ``switch_hops`` gives the same route as (switch, in_port, out_port)
    triples, which is the shape rule synthesis consumes.
    """

    vertices: tuple[str, ...]
    cost: float
    switch_hops: tuple[SwitchHop, ...]

    @property
    def src(self) -> str:
        return self.vertices[0]

    @property
    def dst(self) -> str:
        return self.vertices[-1]

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "cost": self.cost,
            "switch_hops": [
                {"switch": h.switch_id, "in_port": h.in_port, "out_port": h.out_port}
                for h in self.switch_hops
            ],
        }


@dataclass(frozen=True)
class WebService:
    """A service endpoint hosted on a terminal.

    The privacy policy blob is carried verbatim and never interpreted.
    """

    id: str
    uri: str
    terminal: str
    privacy_policy: str | None = None

    def to_dict(self) -> dict:
        data: dict = {"id": self.id, "uri": self.uri, "terminal": self.terminal}
        if self.privacy_policy is not None:
            data["privacy_policy"] = self.privacy_policy
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "WebService":
        return cls(
            id=data["id"],
            uri=data["uri"],
            terminal=data["terminal"],
            privacy_policy=data.get("privacy_policy"),
        )


@dataclass(frozen=True)
class Consumer:
    """An external client of the composition, also hosted on a terminal.

    The privacy preference blob is carried verbatim and never interpreted.
    """

    id: str
    terminal: str
    privacy_prefs: str | None = None

    def to_dict(self) -> dict:
        data: dict = {"id": self.id, "terminal": self.terminal}
        if self.privacy_prefs is not None:
            data["privacy_prefs"] = self.privacy_prefs
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Consumer":
        return cls(
            id=data["id"],
            terminal=data["terminal"],
            privacy_prefs=data.get("privacy_prefs"),
        )


@dataclass(frozen=True)
class Composition:
    """The invocation automaton of a service composition.

    States are service ids; each transition ``(src, event, dst)`` records
    that ``src`` invokes ``dst`` and is labelled by an event drawn from
    ``events``.  ``initial`` is the entry service.
    """

    services: frozenset[str]
    events: frozenset[str]
    initial: str
    transitions: frozenset[tuple[str, str, str]]

    def to_dict(self) -> dict:
        return {
            "services": sorted(self.services),
            "events": sorted(self.events),
            "initial": self.initial,
            "transitions": [list(t) for t in sorted(self.transitions)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Composition":
        return cls(
            services=frozenset(data["services"]),
            events=frozenset(data["events"]),
            initial=data["initial"],
            transitions=frozenset(tuple(t) for t in data["transitions"]),
        )


@dataclass(frozen=True)
class Violation:
    """One well-formedness problem found by a validator."""

    code: str
    subjects: tuple[str, ...]
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "subjects": list(self.subjects), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    """The full, deterministically ordered list of violations.

    An empty report means every structural invariant holds.  Reports compare
    equal regardless of the order in which checks discovered problems, because
    violations are sorted on construction.
    """

    violations: tuple[Violation, ...]

    @classmethod
    def of(cls, violations: Iterable[Violation]) -> "ValidationReport":
        return cls(tuple(sorted(violations, key=lambda v: (v.code, v.subjects, v.message))))

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def _cost_ok(cost: object) -> bool:
    return isinstance(cost, (int, float)) and not isinstance(cost, bool) and math.isfinite(cost)


class Topology:
    """Terminals, switches and links, with path queries over the whole.

    The constructor indexes whatever it is given without judging it;
    :func:`validate_model` is the authority on well-formedness.  Path queries
    assume a topology that validates cleanly (in particular: non-negative
    costs, inner links at cost zero, positive cost across devices).

    Least-cost path results are memoised per source terminal, so repeated
    queries from one source after the first are dictionary lookups.
    """

    def __init__(
        self,
        terminals: Iterable[Terminal],
        switches: Iterable[Switch],
        links: Iterable[Link],
    ) -> None:
        self.terminals: tuple[Terminal, ...] = tuple(terminals)
        self.switches: tuple[Switch, ...] = tuple(switches)
        self.links: tuple[Link, ...] = tuple(links)

        self.terminals_by_id: dict[str, Terminal] = {}
        for t in self.terminals:
            self.terminals_by_id.setdefault(t.id, t)
        self.switches_by_id: dict[str, Switch] = {}
        for s in self.switches:
            self.switches_by_id.setdefault(s.id, s)

        # declared port keys
        self._ports: set[str] = {
            port_key(s.id, p) for s in self.switches_by_id.values() for p in s.ports
        }

        # device-level adjacency: device id -> list of
        # (neighbor_device, cost, local_port|None, remote_port|None)
        # terminals use port None on their side.
        self._adj: dict[str, list[tuple[str, float, int | None, int | None]]] = {
            t: [] for t in self.terminals_by_id
        }
        for s in self.switches_by_id:
            self._adj[s] = []
        self._attachments: dict[str, SwitchPort] = {}
        self._port_links: dict[str, list[tuple[str, str]]] = {}  # port key -> peer kinds
        self._build_adjacency()
        self._sssp_cache: dict[str, dict[str, Path]] = {}

    # -- construction helpers -------------------------------------------------

    def resolve_vertex(self, key: str) -> tuple[str, object] | None:
        """Classify a vertex key: ('terminal', Terminal) or ('port', SwitchPort)."""
        if key in self.terminals_by_id:
            return ("terminal", self.terminals_by_id[key])
        parsed = parse_port_key(key)
        if parsed is not None:
            sw_id, port_no = parsed
            sw = self.switches_by_id.get(sw_id)
            if sw is not None and sw.has_port(port_no):
                return ("port", SwitchPort(sw_id, port_no))
        return None

    def _build_adjacency(self) -> None:
        for link in self.links:
            if not _cost_ok(link.cost) or link.cost < 0:
                continue  # validate_model reports it; unusable for routing
            ra = self.resolve_vertex(link.a)
            rb = self.resolve_vertex(link.b)
            if ra is None or rb is None:
                continue
            kind_a, obj_a = ra
            kind_b, obj_b = rb
            if kind_a == "terminal" and kind_b == "terminal":
                continue  # disallowed; reported by validate_model
            if kind_a == "port" and kind_b == "port":
                pa: SwitchPort = obj_a  # type: ignore[assignment]
                pb: SwitchPort = obj_b  # type: ignore[assignment]
                if pa.switch_id == pb.switch_id:
                    continue  # inner link; implicit crossing already covers it
                self._adj[pa.switch_id].append((pb.switch_id, float(link.cost), pa.port_no, pb.port_no))
                self._adj[pb.switch_id].append((pa.switch_id, float(link.cost), pb.port_no, pa.port_no))
            else:
                if kind_a == "terminal":
                    term: Terminal = obj_a  # type: ignore[assignment]
                    port: SwitchPort = obj_b  # type: ignore[assignment]
                else:
                    term = obj_b  # type: ignore[assignment]
                    port = obj_a  # type: ignore[assignment]
                self._adj[term.id].append((port.switch_id, float(link.cost), None, port.port_no))
                self._adj[port.switch_id].append((term.id, float(link.cost), port.port_no, None))
                if term.id not in self._attachments:
                    self._attachments[term.id] = port
        for edges in self._adj.values():
            edges.sort(key=lambda e: (e[0], e[2] if e[2] is not None else -1, e[3] if e[3] is not None else -1))

    # -- queries --------------------------------------------------------------

    def attachment(self, terminal_id: str) -> SwitchPort:
        """The switch port a terminal hangs off.

        Raises UnknownVertexError for undeclared terminals and
        TopologyError for declared but unattached ones.
        """
        from .errors import TopologyError

        if terminal_id not in self.terminals_by_id:
            raise UnknownVertexError(f"unknown terminal {terminal_id!r}")
        port = self._attachments.get(terminal_id)
        if port is None:
            raise TopologyError(f"terminal {terminal_id!r} is not attached to any switch")
        return port

    def external_neighbor(self, switch_id: str, port_no: int) -> tuple[str, object] | None:
        """What hangs off a given switch port: ('terminal', id) or
        ('switch', (switch_id, port_no)), or None for an unwired port."""
        for nbr, _cost, local, remote in self._adj.get(switch_id, ()):
            if local == port_no:
                if remote is None:
                    return ("terminal", nbr)
                return ("switch", (nbr, remote))
        return None

    def connected(self, src: str, dst: str) -> bool:
        return self.least_cost_path(src, dst) is not None

    def least_cost_path(self, src: str, dst: str) -> Path | None:
        """Deterministic least-cost route between two distinct terminals.

        Ties on cost break lexicographically on the vertex-key sequence, so
        equal inputs always yield the identical path.  Returns None when no
        route exists.
        """
        if src not in self.terminals_by_id:
            raise UnknownVertexError(f"unknown terminal {src!r}")
        if dst not in self.terminals_by_id:
            raise UnknownVertexError(f"unknown terminal {dst!r}")
        if src == dst:
            raise ValueError("least_cost_path requires two distinct terminals")
        if src not in self._sssp_cache:
            self._sssp_cache[src] = self._single_source_paths(src)
        return self._sssp_cache[src].get(dst)

    def _single_source_paths(self, src: str) -> dict[str, Path]:
        """Settle least (cost, vertex-sequence) labels from one terminal.

        States are either a terminal or a (switch, entry port) pair; a packet
        may not leave a switch through the port it entered, which encodes the
        one-crossing-per-visit rule.  Labels order by cost first and by the
        vertex sequence second, so the settled label per state is the unique
        deterministic optimum.  Positive inter-device costs keep optimal
        routes device-simple; revisits only ever produce costlier labels.
        """
        best: dict[str, Path] = {}
        seen: set[tuple[str, int]] = set()
        # heap entries: (cost, vertex_seq, device, entry_port) with -1 when
        # the device is a terminal, so entries always compare cleanly.
        heap: list[tuple[float, tuple[str, ...], str, int]] = [(0.0, (src,), src, -1)]
        while heap:
            cost, seq, device, entry = heapq.heappop(heap)
            state = (device, entry)
            if state in seen:
                continue
            seen.add(state)
            at_terminal = device in self.terminals_by_id
            if at_terminal:
                if device != src:
                    best[device] = Path(seq, cost, self._hops_of(seq))
                    continue  # terminals are endpoints, never transit
            for nbr, edge_cost, local, remote in self._adj[device]:
                if not at_terminal and local == entry:
                    continue  # no U-turn through the entry port
                exit_step = () if at_terminal else (port_key(device, local),)
                if nbr in self.terminals_by_id:
                    if nbr == src:
                        continue
                    step = seq + exit_step + (nbr,)
                    heapq.heappush(heap, (cost + edge_cost, step, nbr, -1))
                else:
                    step = seq + exit_step + (port_key(nbr, remote),)
                    heapq.heappush(heap, (cost + edge_cost, step, nbr, remote))
        return best

    def _hops_of(self, seq: tuple[str, ...]) -> tuple[SwitchHop, ...]:
        hops: list[SwitchHop] = []
        ports = [parse_port_key(v) if v in self._ports else None for v in seq]
        i = 0
        while i < len(seq) - 1:
            cur, nxt = ports[i], ports[i + 1]
            if cur is not None and nxt is not None and cur[0] == nxt[0]:
                hops.append(SwitchHop(cur[0], cur[1], nxt[1]))
                i += 2
            else:
                i += 1
        return tuple(hops)

    def to_dict(self) -> dict:
        return {
            "terminals": [t.to_dict() for t in self.terminals],
            "switches": [s.to_dict() for s in self.switches],
            "links": [l.to_dict() for l in self.links],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        return cls(
            terminals=[Terminal.from_dict(t) for t in data["terminals"]],
            switches=[Switch.from_dict(s) for s in data["switches"]],
            links=[Link.from_dict(l) for l in data["links"]],
        )


def validate_model(
    topology: Topology,
    services: Iterable[WebService] = (),
    consumers: Iterable[Consumer] = (),
) -> ValidationReport:
    """Check every structural invariant of a deployment model.

    The report is empty exactly when the topology is well formed (unique
    ids and addresses, every link endpoint resolvable, inner links free and
    inter-device links strictly positive, every terminal attached exactly
    once) and the service plane maps principals to terminals injectively.
    """
    out: list[Violation] = []
    services = tuple(services)
    consumers = tuple(consumers)

    seen_t: set[str] = set()
    seen_ip: dict[str, str] = {}
    seen_mac: dict[str, str] = {}
    for t in topology.terminals:
        if t.id in seen_t:
            out.append(Violation("duplicate-terminal-id", (t.id,), f"terminal id {t.id!r} declared more than once"))
            continue
        seen_t.add(t.id)
        if not is_valid_ip(t.ip):
            out.append(Violation("bad-ip", (t.id,), f"terminal {t.id!r} has malformed IP {t.ip!r}"))
        elif t.ip in seen_ip:
            out.append(Violation("duplicate-ip", tuple(sorted((seen_ip[t.ip], t.id))), f"IP {t.ip!r} assigned twice"))
        else:
            seen_ip[t.ip] = t.id
        if not is_valid_mac(t.mac):
            out.append(Violation("bad-mac", (t.id,), f"terminal {t.id!r} has malformed MAC {t.mac!r}"))
        elif t.mac in seen_mac:
            out.append(Violation("duplicate-mac", tuple(sorted((seen_mac[t.mac], t.id))), f"MAC {t.mac!r} assigned twice"))
        else:
            seen_mac[t.mac] = t.id

    seen_sw: set[str] = set()
    for s in topology.switches:
        if s.id in seen_sw:
            out.append(Violation("duplicate-switch-id", (s.id,), f"switch id {s.id!r} declared more than once"))
            continue
        seen_sw.add(s.id)
        seen_ports: set[int] = set()
        for p in s.ports:
            if not isinstance(p, int) or isinstance(p, bool) or p < 1:
                out.append(Violation("bad-port", (s.id, str(p)), f"switch {s.id!r} declares invalid port {p!r}"))
            elif p in seen_ports:
                out.append(Violation("duplicate-port", (s.id, str(p)), f"switch {s.id!r} declares port {p} twice"))
            else:
                seen_ports.add(p)

    for t in topology.terminals:
        if parse_port_key(t.id) is not None and t.id in topology._ports:
            out.append(Violation("ambiguous-vertex-id", (t.id,), f"terminal id {t.id!r} collides with a port key"))

    attach_count: dict[str, int] = {t.id: 0 for t in topology.terminals}
    for link in topology.links:
        label = f"link {link.a}--{link.b}"
        if not _cost_ok(link.cost) or link.cost < 0:
            out.append(Violation("invalid-cost", (label,), f"{label} has invalid cost {link.cost!r}"))
            continue
        ra = topology.resolve_vertex(link.a)
        rb = topology.resolve_vertex(link.b)
        if ra is None:
            out.append(Violation("unknown-endpoint", (label, link.a), f"{label}: endpoint {link.a!r} is not a declared vertex"))
        if rb is None:
            out.append(Violation("unknown-endpoint", (label, link.b), f"{label}: endpoint {link.b!r} is not a declared vertex"))
        if ra is None or rb is None:
            continue
        if link.a == link.b:
            out.append(Violation("degenerate-link", (label,), f"{label} joins {link.a!r} to itself"))
            continue
        kinds = (ra[0], rb[0])
        if kinds == ("terminal", "terminal"):
            out.append(Violation("terminal-terminal-link", (label,), f"{label} joins two terminals directly"))
            continue
        if kinds == ("port", "port"):
            pa: SwitchPort = ra[1]  # type: ignore[assignment]
            pb: SwitchPort = rb[1]  # type: ignore[assignment]
            if pa.switch_id == pb.switch_id:
                if link.cost != 0:
                    out.append(Violation("inner-link-cost", (label,), f"{label} stays inside {pa.switch_id!r} but costs {link.cost!r}; inner links are free"))
            elif link.cost <= 0:
                out.append(Violation("nonpositive-cost", (label,), f"{label} crosses devices at cost {link.cost!r}; inter-device cost must be positive"))
        else:
            term = ra[1] if ra[0] == "terminal" else rb[1]
            if link.cost <= 0:
                out.append(Violation("nonpositive-cost", (label,), f"{label} crosses devices at cost {link.cost!r}; inter-device cost must be positive"))
            attach_count[term.id] = attach_count.get(term.id, 0) + 1  # type: ignore[union-attr]

    for tid in sorted(attach_count):
        n = attach_count[tid]
        if n == 0:
            out.append(Violation("terminal-unattached", (tid,), f"terminal {tid!r} has no link to any switch"))
        elif n > 1:
            out.append(Violation("terminal-multi-attached", (tid,), f"terminal {tid!r} is attached {n} times; exactly one attachment is required"))

    seen_svc: set[str] = set()
    seen_uri: dict[str, str] = {}
    terminal_owner: dict[str, str] = {}
    for svc in services:
        if svc.id in seen_svc:
            out.append(Violation("duplicate-service-id", (svc.id,), f"service id {svc.id!r} declared more than once"))
            continue
        seen_svc.add(svc.id)
        if svc.uri in seen_uri:
            out.append(Violation("duplicate-uri", tuple(sorted((seen_uri[svc.uri], svc.id))), f"URI {svc.uri!r} assigned twice"))
        else:
            seen_uri[svc.uri] = svc.id
        if svc.terminal not in topology.terminals_by_id:
            out.append(Violation("unknown-terminal", (svc.id, svc.terminal), f"service {svc.id!r} is placed on undeclared terminal {svc.terminal!r}"))
        elif svc.terminal in terminal_owner:
            out.append(Violation("shared-terminal", tuple(sorted((terminal_owner[svc.terminal], svc.id))) + (svc.terminal,), f"terminal {svc.terminal!r} hosts more than one principal"))
        else:
            terminal_owner[svc.terminal] = svc.id

    seen_con: set[str] = set()
    for con in consumers:
        if con.id in seen_con:
            out.append(Violation("duplicate-consumer-id", (con.id,), f"consumer id {con.id!r} declared more than once"))
            continue
        seen_con.add(con.id)
        if con.id in seen_svc:
            out.append(Violation("duplicate-principal-id", (con.id,), f"id {con.id!r} names both a service and a consumer"))
        if con.terminal not in topology.terminals_by_id:
            out.append(Violation("unknown-terminal", (con.id, con.terminal), f"consumer {con.id!r} is placed on undeclared terminal {con.terminal!r}"))
        elif con.terminal in terminal_owner:
            out.append(Violation("shared-terminal", tuple(sorted((terminal_owner[con.terminal], con.id))) + (con.terminal,), f"terminal {con.terminal!r} hosts more than one principal"))
        else:
            terminal_owner[con.terminal] = con.id

    return ValidationReport.of(out)


def validate_composition(composition: Composition) -> ValidationReport:
    """Check the invocation automaton against its declared alphabets."""
    out: list[Violation] = []
    if composition.initial not in composition.services:
        out.append(Violation(
            "initial-not-declared",
            (composition.initial,),
            f"initial service {composition.initial!r} is not a declared service",
        ))
    for src, event, dst in sorted(composition.transitions):
        label = f"{src}-[{event}]->{dst}"
        if src not in composition.services:
            out.append(Violation("undeclared-service", (label, src), f"transition {label} starts at undeclared service {src!r}"))
        if dst not in composition.services:
            out.append(Violation("undeclared-service", (label, dst), f"transition {label} ends at undeclared service {dst!r}"))
        if event not in composition.events:
            out.append(Violation("undeclared-event", (label, event), f"transition {label} uses undeclared event {event!r}"))
    return ValidationReport.of(out)
