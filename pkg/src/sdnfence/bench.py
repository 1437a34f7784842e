"""Synthetic-scale benchmark: generated fabrics, generated policies, timings.

The generator grows a random connected switch fabric (a random spanning
tree plus a few chords), hangs terminals off random switches, declares one
service per terminal and samples a policy of the requested size.  Given one
seed the whole run is a pure function: topology, policy, rule counts and
compliance results are bit-identical across runs; only the measured timings
differ, and they are kept in their own section of every serialized result
so the deterministic part can be compared byte for byte.

Three phases are timed separately per repeat: policy transformation to
terminal level, the one-time least-cost path warm-up per distinct source,
and rule synthesis for every pair.  Keeping the warm-up out of the
synthesis figure makes the per-pair cost comparable across scales; the
warm-up is a fixed cost of the fabric, not of the policy size.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass

from .controller import Controller, PacketIn
from .dataplane import Network, Packet
from .errors import GenerationError
from .fixtures import make_terminal
from .model import Consumer, Link, Switch, Terminal, Topology, WebService
from .policy import Principal, ServicePolicy, TerminalPolicy, to_terminal_policy
from .testbed import Testbed
from .verify import check_compliance


@dataclass(frozen=True)
class TimingStats:
    """Seconds: smallest, arithmetic mean and largest over a set of runs."""

    min: float
    mean: float
    max: float

    @classmethod
    def of(cls, samples: list[float]) -> "TimingStats":
        return cls(min=min(samples), mean=statistics.fmean(samples), max=max(samples))

    def to_dict(self) -> dict:
        return {"min": self.min, "mean": self.mean, "max": self.max}


@dataclass(frozen=True)
class GeneratedModel:
    topology: Topology
    services: tuple[WebService, ...]
    consumers: tuple[Consumer, ...]
    policy: ServicePolicy


def generate_model(
    n_switches: int, n_terminals: int, n_pairs: int, rng: random.Random
) -> GeneratedModel:
    """A connected random deployment of the requested dimensions.

    Switch fabric: random spanning tree plus ``n_switches // 3`` extra
    chords.  Every terminal hosts one service; the policy allows ``n_pairs``
    ordered terminal pairs sampled uniformly.  More pairs than ordered
    terminal pairs exist cannot be satisfied and is refused.
    """
    if n_switches < 1:
        raise GenerationError("at least one switch is required")
    if n_terminals < 0:
        raise GenerationError("negative terminal count")
    capacity = n_terminals * (n_terminals - 1)
    if n_pairs > capacity:
        raise GenerationError(
            f"{n_pairs} pairs requested but {n_terminals} terminals "
            f"offer only {capacity} ordered pairs"
        )

    switch_ids = [f"sw{i:03d}" for i in range(1, n_switches + 1)]
    # abstract edges first; ports are numbered once the degree is known
    switch_edges: list[tuple[int, int]] = []
    for i in range(1, n_switches):
        switch_edges.append((rng.randrange(i), i))
    present = set(switch_edges)
    for _ in range(n_switches // 3):
        for _attempt in range(20):
            a, b = rng.randrange(n_switches), rng.randrange(n_switches)
            if a == b:
                continue
            edge = (min(a, b), max(a, b))
            if edge not in present and (edge[1], edge[0]) not in present:
                present.add(edge)
                switch_edges.append(edge)
                break

    terminals = [make_terminal(j, id=f"t{j:03d}") for j in range(1, n_terminals + 1)]
    homes = [rng.randrange(n_switches) for _ in terminals]

    next_port = [1] * n_switches

    def take_port(switch_index: int) -> int:
        port = next_port[switch_index]
        next_port[switch_index] += 1
        return port

    links: list[Link] = []
    for a, b in switch_edges:
        pa, pb = take_port(a), take_port(b)
        cost = float(rng.choice((1, 2, 3)))
        links.append(Link(f"{switch_ids[a]}.p{pa}", f"{switch_ids[b]}.p{pb}", cost))
    for terminal, home in zip(terminals, homes):
        port = take_port(home)
        links.append(Link(terminal.id, f"{switch_ids[home]}.p{port}", 1.0))

    switches = [
        Switch(switch_ids[i], tuple(range(1, next_port[i]))) for i in range(n_switches)
    ]

    services = tuple(
        WebService(f"s{j:03d}", f"/svc/{j}", terminals[j - 1].id)
        for j in range(1, n_terminals + 1)
    )
    by_terminal = {svc.terminal: svc.id for svc in services}
    all_pairs = [
        (a.id, b.id) for a in terminals for b in terminals if a.id != b.id
    ]
    chosen = rng.sample(all_pairs, n_pairs)
    allow = frozenset(
        (Principal.service(by_terminal[a]), by_terminal[b]) for a, b in chosen
    )
    return GeneratedModel(
        topology=Topology(terminals, switches, links),
        services=services,
        consumers=(),
        policy=ServicePolicy(allow=allow),
    )


@dataclass(frozen=True)
class BenchResult:
    """One benchmark scale: configuration, invariant outputs, timings."""

    switches: int
    terminals: int
    pairs: int
    seed: int
    repeats: int
    rules_synthesized: int
    entries_per_pair: float
    compliance_ok: bool
    compliance_probed: int
    transform: TimingStats
    path_warmup: TimingStats
    synthesis: TimingStats
    packet_in: TimingStats

    @property
    def synthesis_per_pair(self) -> float:
        """Mean seconds to synthesize one pair's rules, warm paths."""
        return self.synthesis.mean / self.pairs if self.pairs else 0.0

    def deterministic_dict(self) -> dict:
        """The seed-reproducible half of the result; never any timings."""
        return {
            "switches": self.switches,
            "terminals": self.terminals,
            "pairs": self.pairs,
            "seed": self.seed,
            "repeats": self.repeats,
            "rules_synthesized": self.rules_synthesized,
            "entries_per_pair": self.entries_per_pair,
            "compliance_ok": self.compliance_ok,
            "compliance_probed": self.compliance_probed,
        }

    def to_dict(self) -> dict:
        return {
            "config": {
                "switches": self.switches,
                "terminals": self.terminals,
                "pairs": self.pairs,
                "seed": self.seed,
                "repeats": self.repeats,
            },
            "results": {
                "rules_synthesized": self.rules_synthesized,
                "entries_per_pair": self.entries_per_pair,
                "compliance_ok": self.compliance_ok,
                "compliance_probed": self.compliance_probed,
            },
            "timings": {
                "transform": self.transform.to_dict(),
                "path_warmup": self.path_warmup.to_dict(),
                "synthesis": self.synthesis.to_dict(),
                "synthesis_per_pair_mean": self.synthesis_per_pair,
                "packet_in": self.packet_in.to_dict(),
            },
        }


def run_bench(
    switches: int,
    terminals: int,
    pairs: int,
    seed: int,
    *,
    repeats: int = 5,
    latency_samples: int = 100,
    compliance_samples: int = 200,
) -> BenchResult:
    """Generate one deployment and measure the enforcement pipeline on it.

    Transformation, path warm-up and synthesis are repeated ``repeats``
    times on cold structures; packet-in latency is sampled per call on the
    warm deployment; finally a sampled behavioural compliance check runs on
    the live fabric.
    """
    rng = random.Random(seed)
    model = generate_model(switches, terminals, pairs, rng)
    pair_list = sorted(
        to_terminal_policy(model.policy, model.services, model.consumers).allow_t
    )

    transform_times: list[float] = []
    warmup_times: list[float] = []
    synthesis_times: list[float] = []
    terminal_policy: TerminalPolicy | None = None
    controller: Controller | None = None
    topology: Topology | None = None

    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        terminal_policy = to_terminal_policy(model.policy, model.services, model.consumers)
        transform_times.append(time.perf_counter() - t0)

        # cold path cache each repeat: rebuild the topology from scratch
        topology = Topology(
            model.topology.terminals, model.topology.switches, model.topology.links
        )
        first_dst: dict[str, str] = {}
        for a, b in pair_list:
            first_dst.setdefault(a, b)
        t0 = time.perf_counter()
        for src, dst in first_dst.items():
            topology.least_cost_path(src, dst)
        warmup_times.append(time.perf_counter() - t0)

        controller = Controller(topology)
        controller.upload_policy(terminal_policy)
        t0 = time.perf_counter()
        rules_total = 0
        for src, dst in pair_list:
            rules_total += len(controller.synthesize_flow_rules(src, dst))
        synthesis_times.append(time.perf_counter() - t0)

    assert controller is not None and topology is not None and terminal_policy is not None

    # packet-in latency on warm paths but a cold admission state, which is
    # what a first packet of a flow actually meets
    probe_rng = random.Random(f"{seed}:probes")
    live = Controller(topology)
    live.upload_policy(terminal_policy)
    if len(pair_list) <= latency_samples:
        latency_pairs = list(pair_list)
    else:
        latency_pairs = probe_rng.sample(pair_list, latency_samples)
    latency_times: list[float] = []
    for src, dst in latency_pairs:
        attachment = topology.attachment(src)
        packet = _packet(topology.terminals_by_id[src], topology.terminals_by_id[dst])
        event = PacketIn(attachment.switch_id, attachment.port_no, packet)
        t0 = time.perf_counter()
        live.handle_packet_in(event)
        latency_times.append(time.perf_counter() - t0)

    # behavioural spot check on the real fabric; probes run live, their
    # installs are real enforcement state
    network = Network(topology)
    network.apply_rules(
        installs=[(sw, e) for sw, es in sorted(live.installed_rules().items()) for e in es]
    )
    bed = Testbed(
        topology=topology,
        network=network,
        controller=live,
        services=model.services,
        consumers=model.consumers,
        service_policy=model.policy,
    )
    compliance = check_compliance(
        bed,
        sample=compliance_samples,
        rng=random.Random(f"{seed}:compliance"),
        clone_per_probe=False,
    )

    rules_last = rules_total
    return BenchResult(
        switches=switches,
        terminals=terminals,
        pairs=pairs,
        seed=seed,
        repeats=max(1, repeats),
        rules_synthesized=rules_last,
        entries_per_pair=(rules_last / pairs) if pairs else 0.0,
        compliance_ok=compliance.compliant,
        compliance_probed=compliance.probed,
        transform=TimingStats.of(transform_times),
        path_warmup=TimingStats.of(warmup_times),
        synthesis=TimingStats.of(synthesis_times),
        packet_in=TimingStats.of(latency_times or [0.0]),
    )


def _packet(src: Terminal, dst: Terminal) -> Packet:
    return Packet(src.mac, src.ip, dst.mac, dst.ip)


def run_bench_scales(
    switches: int,
    terminals: int,
    pairs_list: list[int],
    seed: int,
    **kwargs,
) -> list[BenchResult]:
    """One :func:`run_bench` per requested pair count, same fabric seed."""
    return [
        run_bench(switches, terminals, pairs, seed, **kwargs) for pairs in pairs_list
    ]
