"""Application-plane access policy and its compilation to terminal level.

The owner of a composition states *who may call what* in terms of
principals: services and consumers.  That service-level policy is derived
from the composition automaton plus explicit consumer grants, then rewritten
into a terminal-level policy by substituting each principal with the
terminal that hosts it.  The terminal-level form is what the controller
enforces; its pairs are ordered (initiator, responder) terminal ids.

Whole-policy replacement is expressed as a diff so a running deployment can
be updated rule-by-rule instead of being rebuilt; :func:`diff_terminal_policies`
and :func:`apply_policy_delta` round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import (
    GrantToMaliciousConsumerError,
    MappingIncompleteError,
    PolicyError,
    UndeclaredPrincipalError,
)
from .model import Composition, Consumer, ValidationReport, Violation, WebService


class PrincipalKind(str, Enum):
    SERVICE = "service"
    CONSUMER = "consumer"


@dataclass(frozen=True, order=True)
class Principal:
    """A policy subject: one service or one consumer, by id."""

    kind: PrincipalKind
    id: str

    @classmethod
    def service(cls, id: str) -> "Principal":
        return cls(PrincipalKind.SERVICE, id)

    @classmethod
    def consumer(cls, id: str) -> "Principal":
        return cls(PrincipalKind.CONSUMER, id)

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.id}"


Pair = tuple[Principal, str]  # (initiating principal, target service id)


@dataclass(frozen=True)
class ServicePolicy:
    """Service-level access policy over principals.

    ``allow`` and ``deny`` hold (principal, service) pairs; ``malicious``
    holds consumer ids that must be cut off entirely.  Allow and deny are
    disjoint by construction, and no principal may target itself.
    """

    allow: frozenset[Pair] = field(default_factory=frozenset)
    deny: frozenset[Pair] = field(default_factory=frozenset)
    malicious: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        clash = self.allow & self.deny
        if clash:
            pairs = ", ".join(f"({p}, {s})" for p, s in sorted(clash))
            raise PolicyError(f"pairs both allowed and denied: {pairs}")
        for pair_set, label in ((self.allow, "allow"), (self.deny, "deny")):
            for principal, service in pair_set:
                if principal.kind is PrincipalKind.SERVICE and principal.id == service:
                    raise PolicyError(f"{label} pair grants {service!r} access to itself")
        blocked_grants = {p.id for p, _ in self.allow if p.kind is PrincipalKind.CONSUMER} & self.malicious
        if blocked_grants:
            raise GrantToMaliciousConsumerError(
                f"malicious consumers hold grants: {', '.join(sorted(blocked_grants))}"
            )

    def to_dict(self) -> dict:
        return {
            "allow": [[str(p), s] for p, s in sorted(self.allow)],
            "deny": [[str(p), s] for p, s in sorted(self.deny)],
            "malicious": sorted(self.malicious),
        }


def derive_service_policy(
    composition: Composition,
    consumer_grants: Iterable[tuple[str, str]] = (),
    malicious: Iterable[str] = (),
    known_consumers: Iterable[str] | None = None,
) -> ServicePolicy:
    """Build the service-level policy a composition implies.

    Every transition ``s_i -> s_j`` of the automaton becomes an allow pair
    (service s_i, s_j); each consumer grant ``(c, s)`` becomes an allow pair
    (consumer c, s).  Self-invocations never cross the network and are
    dropped.  Grants naming unknown services, and (when ``known_consumers``
    is given) unknown consumers, are rejected; so are grants to consumers
    flagged malicious.
    """
    allow: set[Pair] = set()
    for src, _event, dst in composition.transitions:
        if src == dst:
            continue  # stays on one terminal, nothing to enforce
        allow.add((Principal.service(src), dst))

    malicious_ids = frozenset(malicious)
    known = frozenset(known_consumers) if known_consumers is not None else None
    for consumer_id, service_id in consumer_grants:
        if service_id not in composition.services:
            raise UndeclaredPrincipalError(
                f"grant for consumer {consumer_id!r} targets undeclared service {service_id!r}"
            )
        if known is not None and consumer_id not in known:
            raise UndeclaredPrincipalError(f"grant names undeclared consumer {consumer_id!r}")
        if consumer_id in malicious_ids:
            raise GrantToMaliciousConsumerError(
                f"consumer {consumer_id!r} is flagged malicious and cannot hold grants"
            )
        allow.add((Principal.consumer(consumer_id), service_id))

    if known is not None:
        stray = malicious_ids - known
        if stray:
            raise UndeclaredPrincipalError(
                f"malicious set names undeclared consumers: {', '.join(sorted(stray))}"
            )

    return ServicePolicy(allow=frozenset(allow), malicious=malicious_ids)


TerminalPair = tuple[str, str]  # ordered (initiator terminal, responder terminal)


@dataclass(frozen=True)
class TerminalPolicy:
    """Terminal-level access policy, the controller's working form.

    ``allow_t`` and ``deny_t`` are ordered terminal pairs; ``blocked`` holds
    terminals whose traffic is dropped wholesale (the hosts of malicious
    consumers).  The same disjointness and no-self-pair rules as at service
    level apply.
    """

    allow_t: frozenset[TerminalPair] = field(default_factory=frozenset)
    deny_t: frozenset[TerminalPair] = field(default_factory=frozenset)
    blocked: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        clash = self.allow_t & self.deny_t
        if clash:
            raise PolicyError(f"terminal pairs both allowed and denied: {sorted(clash)}")
        for pair_set, label in ((self.allow_t, "allow"), (self.deny_t, "deny")):
            for a, b in pair_set:
                if a == b:
                    raise PolicyError(f"{label} pair ({a!r}, {b!r}) relates a terminal to itself")

    def permits(self, src_terminal: str, dst_terminal: str) -> bool:
        """Whether the initiator may open traffic toward the responder."""
        if src_terminal in self.blocked:
            return False
        return (src_terminal, dst_terminal) in self.allow_t

    def to_dict(self) -> dict:
        return {
            "allow": [list(p) for p in sorted(self.allow_t)],
            "deny": [list(p) for p in sorted(self.deny_t)],
            "blocked": sorted(self.blocked),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TerminalPolicy":
        return cls(
            allow_t=frozenset(tuple(p) for p in data.get("allow", [])),
            deny_t=frozenset(tuple(p) for p in data.get("deny", [])),
            blocked=frozenset(data.get("blocked", [])),
        )


def _binding(
    services: Iterable[WebService],
    consumers: Iterable[Consumer],
) -> tuple[dict[Principal, str], dict[str, str]]:
    """Principal -> terminal map plus its inverse; rejects shared terminals."""
    by_principal: dict[Principal, str] = {}
    by_terminal: dict[str, str] = {}
    for svc in services:
        principal = Principal.service(svc.id)
        by_principal[principal] = svc.terminal
        other = by_terminal.setdefault(svc.terminal, str(principal))
        if other != str(principal):
            raise PolicyError(
                f"terminal {svc.terminal!r} hosts both {other} and {principal}; "
                "the principal-to-terminal mapping must be injective"
            )
    for con in consumers:
        principal = Principal.consumer(con.id)
        by_principal[principal] = con.terminal
        other = by_terminal.setdefault(con.terminal, str(principal))
        if other != str(principal):
            raise PolicyError(
                f"terminal {con.terminal!r} hosts both {other} and {principal}; "
                "the principal-to-terminal mapping must be injective"
            )
    return by_principal, by_terminal


def to_terminal_policy(
    policy: ServicePolicy,
    services: Iterable[WebService],
    consumers: Iterable[Consumer],
) -> TerminalPolicy:
    """Rewrite a service-level policy onto terminals.

    Each principal is replaced by the terminal hosting it; malicious
    consumers land in ``blocked``.  Because the hosting map is injective the
    rewrite is one-to-one: the terminal policy has exactly as many allow and
    deny pairs as the service policy.
    """
    services = tuple(services)
    consumers = tuple(consumers)
    by_principal, _ = _binding(services, consumers)
    svc_terminal = {s.id: s.terminal for s in services}
    con_terminal = {c.id: c.terminal for c in consumers}

    def bind(principal: Principal) -> str:
        terminal = by_principal.get(principal)
        if terminal is None:
            raise MappingIncompleteError(f"no terminal binding for {principal}")
        return terminal

    def bind_service(service_id: str) -> str:
        terminal = svc_terminal.get(service_id)
        if terminal is None:
            raise MappingIncompleteError(f"no terminal binding for service:{service_id}")
        return terminal

    allow_t = frozenset((bind(p), bind_service(s)) for p, s in policy.allow)
    deny_t = frozenset((bind(p), bind_service(s)) for p, s in policy.deny)
    blocked = set()
    for consumer_id in policy.malicious:
        terminal = con_terminal.get(consumer_id)
        if terminal is None:
            raise MappingIncompleteError(f"no terminal binding for consumer:{consumer_id}")
        blocked.add(terminal)
    return TerminalPolicy(allow_t=allow_t, deny_t=deny_t, blocked=frozenset(blocked))


@dataclass(frozen=True)
class PolicyDelta:
    """The exact edit turning one terminal policy into another."""

    added_allow: frozenset[TerminalPair] = field(default_factory=frozenset)
    removed_allow: frozenset[TerminalPair] = field(default_factory=frozenset)
    added_deny: frozenset[TerminalPair] = field(default_factory=frozenset)
    removed_deny: frozenset[TerminalPair] = field(default_factory=frozenset)
    added_blocked: frozenset[str] = field(default_factory=frozenset)
    removed_blocked: frozenset[str] = field(default_factory=frozenset)

    @property
    def empty(self) -> bool:
        return not (
            self.added_allow or self.removed_allow
            or self.added_deny or self.removed_deny
            or self.added_blocked or self.removed_blocked
        )

    def to_dict(self) -> dict:
        return {
            "added_allow": sorted(self.added_allow),
            "removed_allow": sorted(self.removed_allow),
            "added_deny": sorted(self.added_deny),
            "removed_deny": sorted(self.removed_deny),
            "added_blocked": sorted(self.added_blocked),
            "removed_blocked": sorted(self.removed_blocked),
        }


def validate_policy_refs(
    allow: Iterable[Pair],
    deny: Iterable[Pair],
    malicious: Iterable[str],
    services: Iterable[WebService],
    consumers: Iterable[Consumer],
) -> ValidationReport:
    """Report-style check that a written policy only names declared things.

    This is the collecting counterpart of the exceptions the constructors
    raise: it walks the whole policy and reports every dangling reference
    and every grant held by a malicious consumer, instead of stopping at
    the first.
    """
    service_ids = {s.id for s in services}
    consumer_ids = {c.id for c in consumers}
    malicious = frozenset(malicious)
    out: list[Violation] = []

    def check_pairs(pairs: Iterable[Pair], label: str) -> None:
        for principal, target in pairs:
            declared = (
                service_ids if principal.kind is PrincipalKind.SERVICE else consumer_ids
            )
            if principal.id not in declared:
                out.append(Violation(
                    "undeclared-principal",
                    (label, str(principal)),
                    f"{label} pair names undeclared {principal}",
                ))
            if target not in service_ids:
                out.append(Violation(
                    "undeclared-service",
                    (label, target),
                    f"{label} pair targets undeclared service {target!r}",
                ))
            if (
                label == "allow"
                and principal.kind is PrincipalKind.CONSUMER
                and principal.id in malicious
            ):
                out.append(Violation(
                    "grant-to-malicious",
                    (str(principal),),
                    f"malicious consumer {principal.id!r} holds an allow grant",
                ))

    check_pairs(allow, "allow")
    check_pairs(deny, "deny")
    for consumer_id in sorted(malicious):
        if consumer_id not in consumer_ids:
            out.append(Violation(
                "undeclared-malicious",
                (consumer_id,),
                f"malicious set names undeclared consumer {consumer_id!r}",
            ))
    return ValidationReport.of(out)


def diff_terminal_policies(old: TerminalPolicy, new: TerminalPolicy) -> PolicyDelta:
    """Set difference per policy component, old to new."""
    return PolicyDelta(
        added_allow=new.allow_t - old.allow_t,
        removed_allow=old.allow_t - new.allow_t,
        added_deny=new.deny_t - old.deny_t,
        removed_deny=old.deny_t - new.deny_t,
        added_blocked=new.blocked - old.blocked,
        removed_blocked=old.blocked - new.blocked,
    )


def apply_policy_delta(old: TerminalPolicy, delta: PolicyDelta) -> TerminalPolicy:
    """Apply a diff; inverse of :func:`diff_terminal_policies`."""
    return TerminalPolicy(
        allow_t=(old.allow_t - delta.removed_allow) | delta.added_allow,
        deny_t=(old.deny_t - delta.removed_deny) | delta.added_deny,
        blocked=(old.blocked - delta.removed_blocked) | delta.added_blocked,
    )
