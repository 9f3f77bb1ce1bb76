"""Scenario files: the structured-text description of a run — backbone
topology, sub-network attachments, manager placement, scripted events, seed,
and duration.

Format: `key = value` assignments at top level (`seed`, `duration_ms`,
`sm_host`) and line-oriented sections introduced by `[name]`:

    [nodes]        node refs, whitespace separated, one or more per line
    [links]        a b latency_ms
    [attachments]  subnet master_node
    [subnets]      subnet qos requested_mhz priority profile   (optional)
    [events]       t kind target    (link targets written a-b)

`#` starts a comment. Unlisted subnets that appear in [attachments] get a
default telemetry requirement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import EventKind, NetEvent
from .spectrum import QosClass
from .topology import NodeRef, TopologyGraph

DEFAULT_DURATION_MS = 60000

_EVENT_KINDS = {
    "node_up": EventKind.NODE_UP,
    "node_down": EventKind.NODE_DOWN,
    "link_up": EventKind.LINK_UP,
    "link_down": EventKind.LINK_DOWN,
    "subnet_power_on": EventKind.SUBNET_POWER_ON,
    "subnet_power_off": EventKind.SUBNET_POWER_OFF,
}
_QOS_NAMES = {"urllc": QosClass.URLLC, "embb": QosClass.EMBB}
_PROFILE_NAMES = ("cnc_control", "sensor_telemetry")


class ScenarioError(ValueError):
    """Parse or validation failure, with a line number when one applies."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class SubnetSpec:
    """Per-subnet requirement and traffic shape declared by the scenario."""

    subnet: int
    qos: QosClass
    requested_mhz: int
    priority: int
    profile: str  # "cnc_control" | "sensor_telemetry"


@dataclass
class Scenario:
    topology: TopologyGraph
    sm_host: NodeRef
    attachments: dict[int, NodeRef]
    subnets: dict[int, SubnetSpec]
    events: list[NetEvent] = field(default_factory=list)
    seed: int = 0
    duration_ms: int = DEFAULT_DURATION_MS


def _default_spec(subnet: int) -> SubnetSpec:
    return SubnetSpec(subnet, QosClass.EMBB, requested_mhz=20, priority=1,
                      profile="sensor_telemetry")


def load_scenario(source: str) -> Scenario:
    """Parse and validate scenario text; raises ScenarioError with the
    offending line number on malformed input."""
    graph = TopologyGraph()
    top: dict[str, int] = {}
    sm_host: NodeRef | None = None
    attachments: dict[int, NodeRef] = {}
    subnets: dict[int, SubnetSpec] = {}
    events: list[tuple[int, NetEvent]] = []
    section = None

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("nodes", "links", "attachments", "subnets",
                               "events"):
                raise ScenarioError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            if "=" not in line:
                raise ScenarioError(f"expected key = value, got {line!r}", lineno)
            key, _, value = (part.strip() for part in line.partition("="))
            if key not in ("seed", "duration_ms", "sm_host"):
                raise ScenarioError(f"unknown key {key!r}", lineno)
            if key in top or (key == "sm_host" and sm_host is not None):
                raise ScenarioError(f"duplicate key {key!r}", lineno)
            number = _parse_int(value, key, lineno)
            if key == "sm_host":
                sm_host = number
            else:
                top[key] = number
            continue
        fields = line.split()
        if section == "nodes":
            for text in fields:
                ref = _parse_int(text, "node", lineno)
                if graph.has_node(ref):
                    raise ScenarioError(f"duplicate node {ref}", lineno)
                graph.add_node(ref)
        elif section == "links":
            if len(fields) != 3:
                raise ScenarioError("links need: a b latency_ms", lineno)
            a, b, lat = (_parse_int(f, "link field", lineno) for f in fields)
            _check(graph.has_node(a), f"link endpoint {a} not a node", lineno)
            _check(graph.has_node(b), f"link endpoint {b} not a node", lineno)
            _check(not graph.has_link(a, b), f"duplicate link {a}-{b}", lineno)
            _check(a != b, f"self-loop on node {a}", lineno)
            _check(lat > 0, "latency must be > 0", lineno)
            graph.add_link(a, b, lat)
        elif section == "attachments":
            if len(fields) != 2:
                raise ScenarioError("attachments need: subnet node", lineno)
            subnet, node = (_parse_int(f, "attachment", lineno) for f in fields)
            _check(subnet not in attachments,
                   f"subnet {subnet} attached twice", lineno)
            _check(graph.has_node(node),
                   f"attachment references unknown node {node}", lineno)
            attachments[subnet] = node
        elif section == "subnets":
            if len(fields) != 5:
                raise ScenarioError(
                    "subnets need: id qos requested_mhz priority profile", lineno)
            subnet = _parse_int(fields[0], "subnet id", lineno)
            qos = _QOS_NAMES.get(fields[1].lower())
            _check(qos is not None, f"unknown qos {fields[1]!r}", lineno)
            requested = _parse_int(fields[2], "requested_mhz", lineno)
            _check(0 < requested <= 100,
                   f"requested_mhz {requested} outside (0, 100]", lineno)
            priority = _parse_int(fields[3], "priority", lineno)
            _check(priority >= 0, "priority must be >= 0", lineno)
            profile = fields[4].lower()
            _check(profile in _PROFILE_NAMES,
                   f"unknown profile {fields[4]!r}", lineno)
            _check(subnet not in subnets,
                   f"subnet {subnet} declared twice", lineno)
            subnets[subnet] = SubnetSpec(subnet, qos, requested, priority, profile)
        elif section == "events":
            if len(fields) != 3:
                raise ScenarioError("events need: t kind target", lineno)
            t = _parse_int(fields[0], "event time", lineno)
            _check(t >= 0, "event time must be >= 0", lineno)
            kind = _EVENT_KINDS.get(fields[1].lower())
            _check(kind is not None, f"unknown event kind {fields[1]!r}", lineno)
            target = _parse_target(kind, fields[2], lineno)
            events.append((lineno, NetEvent(t, kind, target)))

    # cross-checks over the assembled scenario
    if not graph.nodes():
        raise ScenarioError("empty topology")
    if sm_host is None:
        raise ScenarioError("no sm_host declared")
    if not graph.has_node(sm_host):
        raise ScenarioError(f"sm_host {sm_host} is not a node")
    for lineno, event in events:
        _check_event_target(graph, attachments, event, lineno)
    for subnet in subnets:
        _check(subnet in attachments,
               f"subnet {subnet} has a requirement but no attachment")
    for subnet in attachments:
        subnets.setdefault(subnet, _default_spec(subnet))

    return Scenario(
        topology=graph,
        sm_host=sm_host,
        attachments=dict(sorted(attachments.items())),
        subnets=dict(sorted(subnets.items())),
        events=[e for _, e in events],
        seed=top.get("seed", 0),
        duration_ms=top.get("duration_ms", DEFAULT_DURATION_MS),
    )


def _parse_int(text: str, what: str, lineno: int) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ScenarioError(f"{what} must be an integer, got {text!r}", lineno)


def _parse_target(kind: EventKind, text: str, lineno: int):
    if kind in (EventKind.LINK_UP, EventKind.LINK_DOWN):
        parts = text.split("-")
        if len(parts) != 2:
            raise ScenarioError(f"link target must be a-b, got {text!r}", lineno)
        a = _parse_int(parts[0], "link endpoint", lineno)
        b = _parse_int(parts[1], "link endpoint", lineno)
        return (a, b)
    return _parse_int(text, "event target", lineno)


def _check(cond: bool, message: str, lineno: int | None = None) -> None:
    if not cond:
        raise ScenarioError(message, lineno)


def _check_event_target(graph: TopologyGraph, attachments: dict[int, NodeRef],
                        event: NetEvent, lineno: int) -> None:
    if event.kind in (EventKind.NODE_UP, EventKind.NODE_DOWN):
        _check(graph.has_node(event.target),
               f"event targets unknown node {event.target}", lineno)
    elif event.kind in (EventKind.LINK_UP, EventKind.LINK_DOWN):
        a, b = event.target
        _check(graph.has_link(a, b),
               f"event targets unknown link {a}-{b}", lineno)
    else:
        _check(event.target in attachments,
               f"event targets unknown subnet {event.target}", lineno)


# Bundled demonstration fixture: a 12-node backbone ring with shortcut
# chords, the manager on node 0, the machine-control sub-network on node 3
# and the telemetry sub-network on node 7. The backbone size is a fixture
# choice, not an external requirement.
DEMO_SCENARIO = """\
# Two-subnet demonstration backbone.
seed = 7
duration_ms = 60000
sm_host = 0

[nodes]
0 1 2 3 4 5 6 7 8 9 10 11

[links]
0 1 1
1 2 1
2 3 2
3 4 1
4 5 2
5 6 1
6 7 2
7 8 1
8 9 2
9 10 1
10 11 2
11 0 1
0 6 3
2 9 2
4 10 3
1 7 3

[attachments]
1 3
2 7

[subnets]
1 urllc 40 0 cnc_control
2 embb  60 1 sensor_telemetry
"""


def demo_scenario(seed: int | None = None,
                  duration_ms: int | None = None) -> Scenario:
    """The bundled two-subnet fixture, optionally reseeded/retimed."""
    scn = load_scenario(DEMO_SCENARIO)
    if seed is not None:
        scn.seed = seed
    if duration_ms is not None:
        scn.duration_ms = duration_ms
    return scn
