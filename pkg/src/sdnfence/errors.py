"""Exception hierarchy shared by every layer of the package.

All errors raised by this package derive from :class:`EnforcementError` so
callers can catch one base type at an API boundary.  Subclasses are grouped
roughly by the layer that raises them: model construction and lookup, policy
compilation, controller state, data-plane simulation, and the generators used
by the benchmark harness.
"""

from __future__ import annotations


class EnforcementError(Exception):
    """Base class for every error raised by this package."""


class ModelError(EnforcementError):
    """A model-level operation was asked to do something impossible."""


class UnknownVertexError(ModelError):
    """A referenced terminal or switch port is not part of the topology."""


class TopologyError(ModelError):
    """The topology cannot support the requested operation (e.g. an
    unattached terminal used as an injection point)."""


class PolicyError(EnforcementError):
    """A policy violates its own structural invariants."""


class UndeclaredPrincipalError(PolicyError):
    """A policy references a service or consumer that was never declared."""


class GrantToMaliciousConsumerError(PolicyError):
    """A consumer grant names a consumer that is also flagged malicious."""


class MappingIncompleteError(PolicyError):
    """A principal referenced by the policy has no terminal binding."""


class ControllerError(EnforcementError):
    """The controller was driven outside its operating contract."""


class NoPolicyUploadedError(ControllerError):
    """A packet-in arrived before any policy was uploaded."""


class UnknownTerminalError(ControllerError):
    """A policy or request references a terminal the controller does not
    manage."""


class PairNotAllowedError(ControllerError):
    """Rule synthesis was requested for a pair the policy does not allow."""


class NoPathError(EnforcementError):
    """No forwarding path exists between the requested terminals."""


class DataplaneError(EnforcementError):
    """The simulated data plane rejected an operation."""


class UnknownSwitchError(DataplaneError):
    """A rule operation targets a switch that does not exist."""


class UnknownPortError(DataplaneError):
    """A rule references a port its switch does not have."""


class ForwardingLoopError(DataplaneError):
    """A packet traversed more hops than any loop-free path could need."""


class FixtureMismatchError(EnforcementError):
    """A scenario references terminals that its fixture does not define."""


class GenerationError(EnforcementError):
    """The benchmark generator cannot satisfy the requested dimensions."""


class InputFormatError(EnforcementError):
    """An input file does not conform to its documented schema."""
