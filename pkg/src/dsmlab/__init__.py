"""Deterministic testbed for centrally managed spectrum sharing between
emulated 6G sub-networks, riding on a self-organizing ID-routed control
plane with an integrated name-lookup DHT."""

from .dht import DhtRecord, DhtService, PutFailed
from .kernel import (EventKind, MonotonicityError, NetEvent, SimKernel)
from .manager import (SM_DHT_KEY, SessionStatus, SmSession, SpectrumManager)
from .routing import (ControlMessage, ControlPlane, Contact, DropReason,
                      MessageKind, RouteResult, RoutingTable, format_id,
                      key_to_id, shared_prefix_len, xor_distance)
from .scenario import (DEMO_SCENARIO, Scenario, ScenarioError, SubnetSpec,
                       demo_scenario, load_scenario)
from .snc import SncPhase, SubnetController
from .spectrum import (AllocationPlan, BAND_HIGH_MHZ, BAND_LOW_MHZ,
                       EMPTY_BAND, QosClass, SpectrumBand, SubnetRequirement,
                       TOTAL_WIDTH_MHZ, compute_allocation,
                       largest_remainder_split)
from .testbed import InvariantViolation, Testbed
from .tokenmac import (CNC_CONTROL, SENSOR_TELEMETRY, SubnetMetrics,
                       TokenSubnet, TrafficProfile, capacity_mbps,
                       nearest_rank)
from .topology import (TopologyError, TopologyGraph, articulation_points,
                       connected_components, random_connected_topology)

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan", "BAND_HIGH_MHZ", "BAND_LOW_MHZ", "CNC_CONTROL",
    "Contact", "ControlMessage", "ControlPlane", "DEMO_SCENARIO", "DhtRecord",
    "DhtService", "DropReason", "EMPTY_BAND", "EventKind",
    "InvariantViolation", "MessageKind", "MonotonicityError", "NetEvent",
    "PutFailed", "QosClass", "RouteResult", "RoutingTable", "SENSOR_TELEMETRY",
    "SM_DHT_KEY", "Scenario", "ScenarioError", "SessionStatus", "SimKernel",
    "SmSession", "SncPhase", "SpectrumBand", "SpectrumManager",
    "SubnetController", "SubnetMetrics", "SubnetRequirement", "SubnetSpec",
    "TOTAL_WIDTH_MHZ", "Testbed", "TokenSubnet", "TopologyError",
    "TopologyGraph", "TrafficProfile", "articulation_points",
    "capacity_mbps", "compute_allocation", "connected_components",
    "demo_scenario", "format_id", "key_to_id", "largest_remainder_split",
    "load_scenario", "nearest_rank", "random_connected_topology",
    "shared_prefix_len", "xor_distance",
]
