"""Policy-driven enforcement for service compositions on an SDN fabric.

The pipeline in one sentence: describe services, consumers and the switch
fabric (:mod:`.model`), state or derive who may call what (:mod:`.policy`),
let the controller turn that into per-switch flow rules on demand
(:mod:`.controller`, :mod:`.dataplane`), and prove the deployed result
honest by injecting probe traffic (:mod:`.verify`).
"""

from .bench import BenchResult, GeneratedModel, TimingStats, generate_model, run_bench, run_bench_scales
from .controller import Controller, ControllerStats, Decision, PacketIn, RuleDelta, Verdict
from .dataplane import (
    DropReason,
    FlowAction,
    FlowEntry,
    FlowTable,
    Network,
    Packet,
    SwitchState,
    TraceOutcome,
    TraceResult,
)
from .errors import (
    ControllerError,
    DataplaneError,
    EnforcementError,
    FixtureMismatchError,
    ForwardingLoopError,
    GenerationError,
    GrantToMaliciousConsumerError,
    InputFormatError,
    MappingIncompleteError,
    ModelError,
    NoPathError,
    NoPolicyUploadedError,
    PairNotAllowedError,
    PolicyError,
    TopologyError,
    UndeclaredPrincipalError,
    UnknownPortError,
    UnknownSwitchError,
    UnknownTerminalError,
    UnknownVertexError,
)
from .fileio import (
    PolicyDoc,
    dump_policy,
    dump_rules,
    dump_services,
    dump_topology,
    load_policy,
    load_rules,
    load_scenario,
    load_services,
    load_topology,
    read_json,
    write_report,
)
from .fixtures import (
    FIXTURES,
    Fixture,
    blocklist_fixture,
    load_fixture,
    make_terminal,
    monitoring_composition,
    monitoring_fixture,
    two_switch_fixture,
)
from .model import (
    Composition,
    Consumer,
    Link,
    Path,
    Switch,
    SwitchHop,
    SwitchPort,
    Terminal,
    Topology,
    ValidationReport,
    Violation,
    WebService,
    parse_port_key,
    port_key,
    validate_composition,
    validate_model,
)
from .policy import (
    Principal,
    PrincipalKind,
    PolicyDelta,
    ServicePolicy,
    TerminalPolicy,
    apply_policy_delta,
    derive_service_policy,
    diff_terminal_policies,
    to_terminal_policy,
    validate_policy_refs,
)
from .scenarios import (
    ATTACK_SCENARIOS,
    BUILTIN_SCENARIOS,
    Scenario,
    ScenarioReport,
    Step,
    StepResult,
    run_scenario,
)
from .testbed import Testbed
from .verify import (
    ComplianceFinding,
    ComplianceReport,
    ProbeMode,
    check_compliance,
    reachable_pairs,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
