"""Wires a Scenario into a runnable system: kernel + control plane + DHT +
manager + one controller per sub-network, scripted event application,
per-second metrics export, and runtime invariant checks."""

from __future__ import annotations

import json

from .dht import DhtService
from .kernel import EventKind, NetEvent, RANK_METRICS, SimKernel
from .manager import SpectrumManager
from .routing import ControlMessage, ControlPlane
from .scenario import Scenario, ScenarioError
from .snc import SncPhase, SubnetController
from .spectrum import BAND_HIGH_MHZ, BAND_LOW_MHZ, TOTAL_WIDTH_MHZ
from .tokenmac import (CNC_CONTROL, CNC_DEVICES, SENSOR_DEVICES,
                       SENSOR_TELEMETRY, SubnetMetrics, TokenSubnet)
from .topology import NodeRef

METRICS_PERIOD_MS = 1000
METRICS_CSV_HEADER = ("t,subnet,width_mhz,throughput_mbps,p50_us,p99_us,"
                      "jitter_us,miss_ratio,dropped")
LOG_TAIL_LEN = 50

_PROFILES = {
    "cnc_control": (CNC_DEVICES, CNC_CONTROL),
    "sensor_telemetry": (SENSOR_DEVICES, SENSOR_TELEMETRY),
}


class InvariantViolation(RuntimeError):
    """A runtime self-check failed; surfaces as exit code 2 from the CLI."""


class Testbed:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.kernel = SimKernel(scenario.seed)
        self.graph = scenario.topology
        self.plane = ControlPlane(self.kernel, self.graph)
        self.dht = DhtService(self.kernel, self.plane)
        self.sm_host = scenario.sm_host
        self.manager = SpectrumManager(self.kernel, self.plane, self.dht,
                                       self.sm_host)
        self.sncs: dict[int, SubnetController] = {}
        self._master_of: dict[NodeRef, int] = {}
        for subnet, master in scenario.attachments.items():
            if master == self.sm_host:
                raise ScenarioError(
                    f"subnet {subnet} master {master} is the sm host")
            if master in self._master_of:
                raise ScenarioError(
                    f"node {master} is the master of two subnets")
            spec = scenario.subnets[subnet]
            devices, profile = _PROFILES[spec.profile]
            ring = TokenSubnet(subnet, devices, profile,
                               self.kernel.rng(f"subnet-{subnet}"))
            self.sncs[subnet] = SubnetController(
                self.kernel, self.plane, self.dht, spec, master, ring)
            self._master_of[master] = subnet
        self.latest_metrics: dict[int, SubnetMetrics] = {}
        self.metrics_rows: list[str] = [METRICS_CSV_HEADER]
        self._last_plan_version = 0
        self._started = False
        self.kernel.set_event_handler(self._on_event)
        self.plane.set_app_handler(self._on_app)
        self.manager.plan_listeners.append(self._on_plan)

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        """Boot the backbone and services at t=0 (silently — the log starts
        with the first scheduled activity) and queue the scripted events."""
        if self._started:
            return
        self._started = True
        self.plane.boot_all()
        self.plane.start()
        self.dht.start()
        self.manager.start()
        for snc in self.sncs.values():
            snc.power_on()
        self.kernel.every(METRICS_PERIOD_MS, RANK_METRICS, (0,),
                          self._metrics_tick)
        for event in self.scenario.events:
            self.kernel.schedule(event)

    def run(self) -> list[str]:
        self.start()
        return self.kernel.run_until(self.scenario.duration_ms)

    def run_until(self, t: int) -> list[str]:
        self.start()
        return self.kernel.run_until(t)

    # -- scripted / injected events -----------------------------------------

    def _on_event(self, event: NetEvent) -> None:
        kind = event.kind
        if kind in (EventKind.NODE_UP, EventKind.NODE_DOWN):
            ref = event.target
            self.kernel.log("kernel", kind.name, f"node={ref}")
            if kind is EventKind.NODE_UP:
                if not self.graph.is_up(ref):
                    self.graph.set_node(ref, True)
                    self.plane.boot_node(ref)
                    if ref == self.sm_host:
                        self.manager.on_host_reboot()
                    if ref in self._master_of:
                        self.sncs[self._master_of[ref]].resume()
            else:
                if self.graph.is_up(ref):
                    self.graph.set_node(ref, False)
                    self.plane.shutdown_node(ref)
                    if ref == self.sm_host:
                        self.manager.on_host_down()
                    if ref in self._master_of:
                        self.sncs[self._master_of[ref]].suspend()
        elif kind in (EventKind.LINK_UP, EventKind.LINK_DOWN):
            a, b = event.target
            self.kernel.log("kernel", kind.name, f"link={a}-{b}")
            self.graph.set_link(a, b, kind is EventKind.LINK_UP)
        else:
            subnet = event.target
            self.kernel.log("kernel", kind.name, f"subnet={subnet}")
            if kind is EventKind.SUBNET_POWER_ON:
                self.sncs[subnet].power_on()
            else:
                self.sncs[subnet].power_off()

    def enqueue_command(self, kind: EventKind, target) -> None:
        """Thread-safe injection point: the command becomes a NetEvent at the
        virtual time the kernel drains it, identical to a scripted one."""
        def inject() -> None:
            self.kernel.schedule(NetEvent(self.kernel.now, kind, target))
        self.kernel.command_queue.put(inject)

    # -- message dispatch ----------------------------------------------------

    def _on_app(self, ref: NodeRef, msg: ControlMessage) -> None:
        if ref == self.sm_host:
            self.manager.handle(msg)
        elif ref in self._master_of:
            self.sncs[self._master_of[ref]].handle(msg)
        # anything else was addressed to a node hosting no service: discard

    # -- metrics and invariants ---------------------------------------------

    def _metrics_tick(self) -> None:
        t = self.kernel.now
        for subnet in sorted(self.sncs):
            snc = self.sncs[subnet]
            if snc.phase is SncPhase.OFF:
                metrics = SubnetMetrics(no_data=True)
                width = 0
            else:
                snc.subnet.advance(t * 1000)
                window_cap = snc.subnet.window_capacity_mbps()
                metrics = snc.subnet.collect_metrics(METRICS_PERIOD_MS)
                width = snc.band.width_mhz
                self._check_subnet(subnet, snc, metrics, window_cap)
            self.latest_metrics[subnet] = metrics
            self.metrics_rows.append(
                f"{t},{subnet},{width},{metrics.throughput_mbps:.3f},"
                f"{metrics.latency_p50_us:.1f},{metrics.latency_p99_us:.1f},"
                f"{metrics.jitter_us:.1f},{metrics.deadline_miss_ratio:.4f},"
                f"{metrics.frames_dropped}")

    def _check_subnet(self, subnet: int, snc: SubnetController,
                      metrics: SubnetMetrics, window_cap: int) -> None:
        if metrics.throughput_mbps > window_cap + 1e-9:
            raise InvariantViolation(
                f"subnet {subnet} throughput {metrics.throughput_mbps} "
                f"exceeds window capacity {window_cap}")
        totals = snc.subnet.totals()
        if totals["generated"] != (totals["delivered"] + totals["queued"]
                                   + totals["dropped"]):
            raise InvariantViolation(
                f"subnet {subnet} frame conservation broken: {totals}")

    def _on_plan(self, plan) -> None:
        if plan.version <= self._last_plan_version:
            raise InvariantViolation(
                f"plan version did not increase: {plan.version} after "
                f"{self._last_plan_version}")
        self._last_plan_version = plan.version
        bands = sorted(plan.assignments.values(), key=lambda b: b.low_mhz)
        for band in bands:
            if not (BAND_LOW_MHZ <= band.low_mhz <= band.high_mhz
                    <= BAND_HIGH_MHZ):
                raise InvariantViolation(f"band outside shared range: {band}")
        for prev, cur in zip(bands, bands[1:]):
            if cur.low_mhz < prev.high_mhz:
                raise InvariantViolation(
                    f"overlapping assignments: {prev} and {cur}")
        if sum(b.width_mhz for b in bands) > TOTAL_WIDTH_MHZ:
            raise InvariantViolation("assigned width exceeds the shared band")

    # -- observability -------------------------------------------------------

    def snapshot(self) -> dict:
        """Self-consistent state view; built between kernel events only."""
        plan = self.manager.plan
        sm_view = self.manager.state_view()
        subnets = {}
        for subnet in sorted(self.sncs):
            snc = self.sncs[subnet]
            metrics = self.latest_metrics.get(subnet)
            subnets[str(subnet)] = {
                "master": snc.master,
                "phase": snc.phase.value,
                "version": snc.current_plan_version,
                "band": _band_view(snc.band),
                "sm_status": sm_view.get(str(subnet), {}).get("status", "-"),
                "metrics": _metrics_view(metrics),
            }
        return {
            "t": self.kernel.now,
            "converged": self.plane.converged,
            "sm_host": self.sm_host,
            "topology": {
                "nodes": [
                    {"ref": ref, "up": self.graph.is_up(ref),
                     "role": self._role(ref)}
                    for ref in self.graph.nodes()
                ],
                "links": [
                    {"a": link.a, "b": link.b, "latency_ms": link.latency_ms,
                     "up": link.up}
                    for link in self.graph.links.values()
                ],
            },
            "plan": {
                "version": plan.version,
                "computed_at": plan.computed_at,
                "assignments": {
                    str(s): _band_view(b)
                    for s, b in sorted(plan.assignments.items())
                },
            },
            "subnets": subnets,
            "log_tail": self.kernel.log_records[-LOG_TAIL_LEN:],
        }

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)

    def _role(self, ref: NodeRef) -> str:
        if ref == self.sm_host:
            return "sm"
        if ref in self._master_of:
            return "master"
        return "router"

    def write_metrics(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.metrics_rows) + "\n")

    def write_log(self, path: str) -> None:
        with open(path, "w") as fh:
            for record in self.kernel.log_records:
                fh.write(record + "\n")


def _band_view(band) -> dict:
    return {"low_mhz": band.low_mhz, "high_mhz": band.high_mhz,
            "width_mhz": band.width_mhz}


def _metrics_view(metrics: SubnetMetrics | None) -> dict:
    if metrics is None:
        metrics = SubnetMetrics(no_data=True)
    return {
        "throughput_mbps": round(metrics.throughput_mbps, 3),
        "p50_us": round(metrics.latency_p50_us, 1),
        "p99_us": round(metrics.latency_p99_us, 1),
        "jitter_us": round(metrics.jitter_us, 1),
        "miss_ratio": round(metrics.deadline_miss_ratio, 4),
        "dropped": metrics.frames_dropped,
        "no_data": metrics.no_data,
    }
