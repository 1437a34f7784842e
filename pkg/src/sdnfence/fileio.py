"""Serialization of models, policies, rules and reports.

Input parsing is strict: unknown keys, missing keys and wrong types are
rejected with a message naming the offending place, rather than being
guessed over.  Semantic problems (a policy granting an unknown service,
say) are *not* raised here; loaders return structurally sound objects and
leave meaning to the validators, so a command can separate "unreadable
input" from "readable input that violates the model".

All dumps are deterministic: keys are sorted and content order is
canonical, so equal inputs serialize to equal bytes.  Anything measured
(timings) lives under its own top-level key in reports, letting consumers
compare everything else byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .dataplane import FlowEntry, Network
from .errors import InputFormatError
from .model import Consumer, Link, Switch, Terminal, Topology, WebService
from .policy import Principal, PrincipalKind, ServicePolicy
from .scenarios import Scenario


def _load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"{path}: cannot read: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: not valid JSON: {exc}") from exc


def _check_keys(
    obj: Any,
    ctx: str,
    required: dict[str, type | tuple[type, ...]],
    optional: dict[str, type | tuple[type, ...]] | None = None,
) -> None:
    if not isinstance(obj, dict):
        raise InputFormatError(f"{ctx}: expected an object, got {type(obj).__name__}")
    optional = optional or {}
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise InputFormatError(f"{ctx}: unknown keys: {', '.join(unknown)}")
    for key, kind in required.items():
        if key not in obj:
            raise InputFormatError(f"{ctx}: missing key {key!r}")
        if not isinstance(obj[key], kind):
            raise InputFormatError(f"{ctx}: key {key!r} has the wrong type")
    for key, kind in optional.items():
        if key in obj and not isinstance(obj[key], kind):
            raise InputFormatError(f"{ctx}: key {key!r} has the wrong type")


def _check_list(obj: Any, ctx: str) -> list:
    if not isinstance(obj, list):
        raise InputFormatError(f"{ctx}: expected a list, got {type(obj).__name__}")
    return obj


# -- topology -----------------------------------------------------------------


def load_topology(path: str | Path) -> Topology:
    data = _load_json(path)
    _check_keys(data, f"{path}", {"terminals": list, "switches": list, "links": list})
    terminals = []
    for i, item in enumerate(data["terminals"]):
        ctx = f"{path}: terminals[{i}]"
        _check_keys(item, ctx, {"id": str, "mac": str, "ip": str})
        terminals.append(Terminal(item["id"], item["mac"], item["ip"]))
    switches = []
    for i, item in enumerate(data["switches"]):
        ctx = f"{path}: switches[{i}]"
        _check_keys(item, ctx, {"id": str, "ports": list})
        for p in item["ports"]:
            if not isinstance(p, int) or isinstance(p, bool):
                raise InputFormatError(f"{ctx}: ports must be integers")
        switches.append(Switch(item["id"], tuple(item["ports"])))
    links = []
    for i, item in enumerate(data["links"]):
        ctx = f"{path}: links[{i}]"
        _check_keys(item, ctx, {"a": str, "b": str, "cost": (int, float)})
        if isinstance(item["cost"], bool):
            raise InputFormatError(f"{ctx}: cost must be a number")
        links.append(Link(item["a"], item["b"], float(item["cost"])))
    return Topology(terminals, switches, links)


def dump_topology(topology: Topology, path: str | Path) -> None:
    _write_json(topology.to_dict(), path)


# -- service plane ------------------------------------------------------------


def load_services(path: str | Path) -> tuple[tuple[WebService, ...], tuple[Consumer, ...]]:
    data = _load_json(path)
    _check_keys(data, f"{path}", {"services": list}, {"consumers": list})
    services = []
    for i, item in enumerate(data["services"]):
        ctx = f"{path}: services[{i}]"
        _check_keys(
            item, ctx,
            {"id": str, "uri": str, "terminal": str},
            {"privacy_policy": str},
        )
        services.append(WebService(
            item["id"], item["uri"], item["terminal"], item.get("privacy_policy")
        ))
    consumers = []
    for i, item in enumerate(data.get("consumers", [])):
        ctx = f"{path}: consumers[{i}]"
        _check_keys(item, ctx, {"id": str, "terminal": str}, {"privacy_prefs": str})
        consumers.append(Consumer(item["id"], item["terminal"], item.get("privacy_prefs")))
    return tuple(services), tuple(consumers)


def dump_services(
    services: tuple[WebService, ...], consumers: tuple[Consumer, ...], path: str | Path
) -> None:
    _write_json(
        {
            "services": [s.to_dict() for s in services],
            "consumers": [c.to_dict() for c in consumers],
        },
        path,
    )


# -- policy -------------------------------------------------------------------


@dataclass(frozen=True)
class PolicyDoc:
    """A policy file as written: syntactically sound, semantically unchecked."""

    allow: tuple[tuple[Principal, str], ...]
    deny: tuple[tuple[Principal, str], ...]
    malicious: tuple[str, ...]

    def to_service_policy(self) -> ServicePolicy:
        """Build the checked policy object; raises PolicyError on conflicts."""
        return ServicePolicy(
            allow=frozenset(self.allow),
            deny=frozenset(self.deny),
            malicious=frozenset(self.malicious),
        )


def _parse_principal(text: str, ctx: str) -> Principal:
    kind, sep, name = text.partition(":")
    if not sep or not name:
        raise InputFormatError(
            f"{ctx}: principal {text!r} must be written 'service:<id>' or 'consumer:<id>'"
        )
    try:
        return Principal(PrincipalKind(kind), name)
    except ValueError:
        raise InputFormatError(f"{ctx}: unknown principal kind {kind!r}") from None


def load_policy(path: str | Path) -> PolicyDoc:
    data = _load_json(path)
    _check_keys(data, f"{path}", {"allow": list}, {"deny": list, "malicious": list})

    def parse_pairs(items: list, label: str) -> tuple[tuple[Principal, str], ...]:
        pairs = []
        for i, item in enumerate(items):
            ctx = f"{path}: {label}[{i}]"
            row = _check_list(item, ctx)
            if len(row) != 2 or not all(isinstance(x, str) for x in row):
                raise InputFormatError(f"{ctx}: expected [principal, service-id]")
            pairs.append((_parse_principal(row[0], ctx), row[1]))
        return tuple(pairs)

    malicious = []
    for i, item in enumerate(data.get("malicious", [])):
        if not isinstance(item, str):
            raise InputFormatError(f"{path}: malicious[{i}]: expected a consumer id")
        malicious.append(item)
    return PolicyDoc(
        allow=parse_pairs(data["allow"], "allow"),
        deny=parse_pairs(data.get("deny", []), "deny"),
        malicious=tuple(malicious),
    )


def dump_policy(policy: ServicePolicy, path: str | Path) -> None:
    _write_json(policy.to_dict(), path)


# -- rules --------------------------------------------------------------------


def dump_rules(source: Network | list[tuple[str, FlowEntry]], path: str | Path) -> None:
    """Write the canonical per-switch rule listing.

    Entries are sorted by their match fields, not their installation order,
    so equal rule sets always produce equal bytes.
    """
    if isinstance(source, Network):
        items = list(source.iter_rules())
    else:
        items = list(source)
    by_switch: dict[str, list[FlowEntry]] = {}
    for switch_id, entry in items:
        by_switch.setdefault(switch_id, []).append(entry)
    doc = {
        "switches": [
            {
                "id": switch_id,
                "entries": [e.to_dict() for e in sorted(set(entries), key=FlowEntry.sort_key)],
            }
            for switch_id, entries in sorted(by_switch.items())
        ]
    }
    _write_json(doc, path)


def load_rules(path: str | Path) -> list[tuple[str, FlowEntry]]:
    data = _load_json(path)
    _check_keys(data, f"{path}", {"switches": list})
    out: list[tuple[str, FlowEntry]] = []
    for i, item in enumerate(data["switches"]):
        ctx = f"{path}: switches[{i}]"
        _check_keys(item, ctx, {"id": str, "entries": list})
        for j, row in enumerate(item["entries"]):
            ectx = f"{ctx}: entries[{j}]"
            _check_keys(
                row, ectx,
                {
                    "src_mac": str, "src_ip": str, "dst_mac": str, "dst_ip": str,
                    "in_port": int, "action": str,
                },
                {"out_port": int},
            )
            try:
                out.append((item["id"], FlowEntry.from_dict(row)))
            except ValueError as exc:
                raise InputFormatError(f"{ectx}: {exc}") from exc
    return out


# -- scenarios ----------------------------------------------------------------


def load_scenario(path: str | Path) -> Scenario:
    data = _load_json(path)
    _check_keys(
        data, f"{path}",
        {"name": str, "steps": list},
        {"description": str, "fixture": str},
    )
    for i, item in enumerate(data["steps"]):
        ctx = f"{path}: steps[{i}]"
        _check_keys(
            item, ctx,
            {"at": str, "src": str, "dst": str, "expect": str},
            {"payload": str, "spoofed": bool},
        )
    try:
        return Scenario.from_dict(data)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


# -- generic ------------------------------------------------------------------


def _write_json(doc: Any, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_report(doc: dict, path: str | Path) -> None:
    """Write a report document; everything measured must sit under 'timings'."""
    _write_json(doc, path)


def read_json(path: str | Path) -> Any:
    return _load_json(path)
