"""Sub-network controller: lives on a master node, discovers the spectrum
manager by name, registers the sub-network's requirement, applies granted
bands to the token ring, and heartbeats while configured.

Phases: Off -> Discovering -> Registering -> Configured, with Degraded
entered on manager silence (last band kept, re-discovery in the background).
"""

from __future__ import annotations

from enum import Enum

from . import wire
from .dht import DhtService
from .kernel import Cancellable, RANK_SNC, SimKernel
from .manager import SM_DHT_KEY
from .routing import ControlMessage, ControlPlane, MessageKind
from .scenario import SubnetSpec
from .spectrum import EMPTY_BAND, SpectrumBand
from .tokenmac import TokenSubnet
from .topology import NodeRef

TICK_MS = 250
DISCOVERY_BACKOFF_MS = 500
DISCOVERY_BACKOFF_CAP_MS = 4000
REGISTER_TIMEOUT_MS = 2000
HEARTBEAT_PERIOD_MS = 1000
SM_SILENCE_TIMEOUT_MS = 3000


class SncPhase(Enum):
    OFF = "Off"
    DISCOVERING = "Discovering"
    REGISTERING = "Registering"
    CONFIGURED = "Configured"
    DEGRADED = "Degraded"


class SubnetController:
    def __init__(self, kernel: SimKernel, plane: ControlPlane,
                 dht: DhtService, spec: SubnetSpec, master: NodeRef,
                 subnet: TokenSubnet):
        self.kernel = kernel
        self.plane = plane
        self.dht = dht
        self.spec = spec
        self.master = master
        self.subnet = subnet
        self.phase = SncPhase.OFF
        self.current_plan_version = 0
        self.band = EMPTY_BAND
        self.sm_id: int | None = None
        self._timer: Cancellable | None = None
        self._backoff = DISCOVERY_BACKOFF_MS
        self._next_discovery_at = 0
        self._register_sent_at = 0
        self._last_heartbeat_sent = 0
        self._last_sm_contact = 0

    # -- power and node lifecycle -------------------------------------------

    def power_on(self) -> None:
        if self.phase is not SncPhase.OFF:
            return
        now = self.kernel.now
        self.phase = SncPhase.DISCOVERING
        self.sm_id = None
        self._backoff = DISCOVERY_BACKOFF_MS
        self._next_discovery_at = now
        self.subnet.fast_forward(now * 1000)
        self._timer = self.kernel.every(TICK_MS, RANK_SNC,
                                        (self.spec.subnet,), self._tick)

    def power_off(self) -> None:
        if self.phase is SncPhase.OFF:
            return
        self.subnet.advance(self.kernel.now * 1000)
        self.subnet.drop_queued()
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None
        self.phase = SncPhase.OFF
        self.band = EMPTY_BAND
        self.subnet.set_band(EMPTY_BAND)
        self.subnet.reset_window()  # a power cycle starts metrics afresh

    def suspend(self) -> None:
        """Master node died under us: stop all activity but keep state; the
        ring keeps its last band (nobody is left to change it)."""
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None

    def resume(self) -> None:
        """Master node rebooted (with a fresh identity): re-discover."""
        if self.phase is SncPhase.OFF:
            return
        now = self.kernel.now
        self.phase = SncPhase.DISCOVERING
        self.sm_id = None
        self._backoff = DISCOVERY_BACKOFF_MS
        self._next_discovery_at = now
        self._timer = self.kernel.every(TICK_MS, RANK_SNC,
                                        (self.spec.subnet,), self._tick)

    # -- state machine -------------------------------------------------------

    def _master_up(self) -> bool:
        return (self.master in self.plane.nodes
                and self.plane.graph.is_up(self.master))

    def _tick(self) -> None:
        if self.phase is SncPhase.OFF or not self._master_up():
            return
        now = self.kernel.now
        if self.phase is SncPhase.DISCOVERING:
            self._discover(now)
        elif self.phase is SncPhase.REGISTERING:
            if now - self._register_sent_at >= REGISTER_TIMEOUT_MS:
                # grant never came; the address may be stale, look it up again
                self.phase = SncPhase.DISCOVERING
                self._backoff = DISCOVERY_BACKOFF_MS
                self._next_discovery_at = now
        elif self.phase is SncPhase.CONFIGURED:
            self._heartbeat_due(now)
            if now - self._last_sm_contact > SM_SILENCE_TIMEOUT_MS:
                self.phase = SncPhase.DEGRADED
                self._backoff = DISCOVERY_BACKOFF_MS
                self._next_discovery_at = now
                self.kernel.log("snc", "DEGRADED",
                                f"subnet={self.spec.subnet} band_kept={self.band.width_mhz}")
        elif self.phase is SncPhase.DEGRADED:
            self._heartbeat_due(now)
            self._discover(now)

    def _discover(self, now: int) -> None:
        if now < self._next_discovery_at:
            return
        record = self.dht.get(self.master, SM_DHT_KEY)
        if record is None:
            self._next_discovery_at = now + self._backoff
            self._backoff = min(self._backoff * 2, DISCOVERY_BACKOFF_CAP_MS)
            return
        self.sm_id = record.value[0]
        self.phase = SncPhase.REGISTERING
        self._send_register()

    def _heartbeat_due(self, now: int) -> None:
        if now - self._last_heartbeat_sent >= HEARTBEAT_PERIOD_MS:
            self._last_heartbeat_sent = now
            self._send(wire.Heartbeat(self.spec.subnet,
                                      self.current_plan_version))

    def _send_register(self) -> None:
        self._register_sent_at = self.kernel.now
        self._send(wire.Register(self.spec.subnet, self.spec.qos,
                                 self.spec.requested_mhz, self.spec.priority))
        self.kernel.log("snc", "REGISTER_SENT", f"subnet={self.spec.subnet}")

    def _send(self, payload: wire.Payload) -> bool:
        if self.sm_id is None or not self._master_up():
            return False
        node = self.plane.nodes[self.master]
        return self.plane.send(self.master, ControlMessage(
            src=node.node_id, dst=self.sm_id, kind=MessageKind.APP,
            payload=wire.encode(payload)))

    # -- message handling ----------------------------------------------------

    def handle(self, msg: ControlMessage) -> None:
        if self.phase is SncPhase.OFF:
            return
        try:
            payload = wire.decode(msg.payload)
        except wire.WireError as exc:
            self.kernel.log("snc", "MALFORMED",
                            f"subnet={self.spec.subnet} error={exc}")
            return
        if isinstance(payload, wire.Grant):
            self._on_grant(payload)
        elif isinstance(payload, wire.Reconfigure):
            self._on_reconfigure(payload)
        elif isinstance(payload, wire.Ack):
            self._on_heartbeat_ack(payload)
        elif isinstance(payload, wire.Deregister):
            self._on_reregister_hint()
        else:
            self.kernel.log("snc", "UNEXPECTED",
                            f"subnet={self.spec.subnet} "
                            f"kind={type(payload).__name__}")

    def _on_grant(self, grant: wire.Grant) -> None:
        now = self.kernel.now
        self._last_sm_contact = now
        if grant.version < self.current_plan_version:
            return  # stale grant from an earlier plan
        self._apply_band(grant.version, grant.band)
        self.phase = SncPhase.CONFIGURED
        self._last_heartbeat_sent = now
        self.kernel.log(
            "snc", "CONFIGURED",
            f"subnet={self.spec.subnet} version={grant.version} "
            f"band={grant.band.low_mhz}-{grant.band.high_mhz}")

    def _on_reconfigure(self, rc: wire.Reconfigure) -> None:
        self._last_sm_contact = self.kernel.now
        if rc.version > self.current_plan_version:
            self._apply_band(rc.version, rc.band)
            self.kernel.log(
                "snc", "RECONFIGURED",
                f"subnet={self.spec.subnet} version={rc.version} "
                f"band={rc.band.low_mhz}-{rc.band.high_mhz}")
        # duplicates and stale versions are re-acknowledged, never re-applied
        self._send(wire.Ack(self.current_plan_version))
        if self.phase is SncPhase.DEGRADED:
            self.phase = SncPhase.CONFIGURED

    def _on_heartbeat_ack(self, ack: wire.Ack) -> None:
        # liveness only: the carried version is the manager's, not ours
        self._last_sm_contact = self.kernel.now
        if self.phase is SncPhase.DEGRADED:
            self.phase = SncPhase.CONFIGURED
            self.kernel.log("snc", "RECOVERED", f"subnet={self.spec.subnet}")

    def _on_reregister_hint(self) -> None:
        """The manager no longer recognizes us; register afresh."""
        if self.phase in (SncPhase.CONFIGURED, SncPhase.DEGRADED):
            self._last_sm_contact = self.kernel.now
            self.phase = SncPhase.REGISTERING
            self.kernel.log("snc", "REREGISTER", f"subnet={self.spec.subnet}")
            self._send_register()

    def _apply_band(self, version: int, band: SpectrumBand) -> None:
        # catch the ring up first so the change lands on a rotation boundary
        self.subnet.advance(self.kernel.now * 1000)
        self.current_plan_version = version
        self.band = band
        self.subnet.set_band(band)
