"""Central spectrum manager: publishes its address under a well-known DHT
name, registers sub-network requirements, recomputes the shared-band
allocation whenever membership changes, watches heartbeats, and pushes
reconfigurations until they are acknowledged."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

from . import wire
from .dht import DhtService, PutFailed
from .kernel import Cancellable, RANK_SM, SimKernel
from .routing import ControlMessage, ControlPlane, MessageKind
from .spectrum import (AllocationPlan, SpectrumBand, SubnetRequirement,
                       compute_allocation)
from .topology import NodeRef

SM_DHT_KEY = b"dynamic-spectrum-manager"

HEARTBEAT_PERIOD_MS = 1000
FAILURE_TIMEOUT_MS = 3 * HEARTBEAT_PERIOD_MS   # strict > comparison
DETECT_PERIOD_MS = 500
PUSH_RETRY_SPACING_MS = 500
PUSH_RETRIES = 2                               # resends after the first push
BOOTSTRAP_BACKOFF_MS = 1000
BOOTSTRAP_BACKOFF_CAP_MS = 8000


class SessionStatus(Enum):
    LIVE = "Live"
    FAILED = "Failed"
    DEREGISTERED = "Deregistered"


@dataclass
class SmSession:
    """Per-subnet registration state as the manager sees it."""

    requirement: SubnetRequirement
    snc_id: int
    last_heartbeat: int
    status: SessionStatus


@dataclass
class _Push:
    subnet: int
    version: int
    band: SpectrumBand
    sends: int = 0
    timer: Cancellable | None = None


def _fmt_band(band: SpectrumBand) -> str:
    return f"{band.low_mhz}-{band.high_mhz}"


def _fmt_plan(plan: AllocationPlan) -> str:
    if not plan.assignments:
        return "-"
    return " ".join(f"{s}:{_fmt_band(b)}"
                    for s, b in sorted(plan.assignments.items()))


class SpectrumManager:
    """Runs on one backbone node; all mutation happens inside kernel
    callbacks. Session and plan state survive a host reboot (think on-disk
    state), but the name registration is refreshed because the rebooted node
    carries a new identity."""

    def __init__(self, kernel: SimKernel, plane: ControlPlane,
                 dht: DhtService, host: NodeRef):
        self.kernel = kernel
        self.plane = plane
        self.dht = dht
        self.host = host
        self.sessions: dict[int, SmSession] = {}
        self.plan = AllocationPlan(version=0, assignments={}, computed_at=0)
        self.plan_listeners: list[Callable[[AllocationPlan], None]] = []
        self._acked_band: dict[int, SpectrumBand] = {}
        self._pushes: dict[int, _Push] = {}
        self._published = False
        self._next_bootstrap_at = 0
        self._bootstrap_backoff = BOOTSTRAP_BACKOFF_MS

    def start(self) -> None:
        self.kernel.every(DETECT_PERIOD_MS, RANK_SM, (self.host,),
                          self._detect_tick)

    # -- host lifecycle ------------------------------------------------------

    def _host_up(self) -> bool:
        return self.host in self.plane.nodes and self.plane.graph.is_up(self.host)

    def on_host_down(self) -> None:
        """The hosting node died: in-flight pushes are lost and the published
        name now points at a dead identity."""
        for push in self._pushes.values():
            if push.timer is not None:
                push.timer.cancel()
        self._pushes.clear()
        self.dht.disown(self.host)
        self._published = False

    def on_host_reboot(self) -> None:
        """Re-publish under the fresh identity; version priming happens in
        the bootstrap path."""
        self._published = False
        self._next_bootstrap_at = self.kernel.now
        self._bootstrap_backoff = BOOTSTRAP_BACKOFF_MS

    # -- periodic work -------------------------------------------------------

    def _detect_tick(self) -> None:
        if not self._host_up():
            return
        self._try_bootstrap()
        self._check_heartbeats()

    def _try_bootstrap(self) -> None:
        if self._published or not self.plane.converged:
            return
        now = self.kernel.now
        if now < self._next_bootstrap_at:
            return
        # prime the version from any surviving record so replicas prefer the
        # new address after a manager restart
        existing = self.dht.get(self.host, SM_DHT_KEY)
        version = existing.version + 1 if existing is not None else 1
        self_id = self.plane.nodes[self.host].node_id
        try:
            self.dht.put(self.host, SM_DHT_KEY, (self_id, "sm"), version)
        except PutFailed:
            self.kernel.log("dsm", "BOOTSTRAP_RETRY",
                            f"backoff_ms={self._bootstrap_backoff}")
            self._next_bootstrap_at = now + self._bootstrap_backoff
            self._bootstrap_backoff = min(self._bootstrap_backoff * 2,
                                          BOOTSTRAP_BACKOFF_CAP_MS)
            return
        self.dht.own(self.host, SM_DHT_KEY, (self_id, "sm"), version)
        self._published = True
        self._bootstrap_backoff = BOOTSTRAP_BACKOFF_MS
        self.kernel.log("dsm", "BOOTSTRAP", f"version={version}")

    def _check_heartbeats(self) -> None:
        now = self.kernel.now
        lost = []
        for subnet in sorted(self.sessions):
            session = self.sessions[subnet]
            if (session.status is SessionStatus.LIVE
                    and now - session.last_heartbeat > FAILURE_TIMEOUT_MS):
                session.status = SessionStatus.FAILED
                self.kernel.log("dsm", "FAILED",
                                f"subnet={subnet} reason=heartbeat_timeout")
                lost.append(subnet)
        if lost:
            self._recompute("heartbeat_timeout")

    # -- message handling ----------------------------------------------------

    def handle(self, msg: ControlMessage) -> None:
        try:
            payload = wire.decode(msg.payload)
        except wire.WireError as exc:
            self.kernel.log("dsm", "MALFORMED", f"error={exc}")
            return
        if isinstance(payload, wire.Register):
            self._on_register(msg.src, payload)
        elif isinstance(payload, wire.Heartbeat):
            self._on_heartbeat(msg.src, payload)
        elif isinstance(payload, wire.Ack):
            self._on_ack(msg.src, payload)
        elif isinstance(payload, wire.Deregister):
            self._on_deregister(payload)
        else:
            self.kernel.log("dsm", "UNEXPECTED",
                            f"kind={type(payload).__name__}")

    def _on_register(self, src_id: int, reg: wire.Register) -> None:
        now = self.kernel.now
        try:
            req = SubnetRequirement(subnet=reg.subnet, qos=reg.qos,
                                    requested_mhz=reg.requested_mhz,
                                    priority=reg.priority)
        except ValueError as exc:
            self.kernel.log("dsm", "REJECT",
                            f"subnet={reg.subnet} reason={exc}")
            return
        self.kernel.log(
            "dsm", "REGISTER",
            f"subnet={reg.subnet} qos={req.qos.name} "
            f"requested={req.requested_mhz} priority={req.priority}")
        session = self.sessions.get(reg.subnet)
        if (session is not None and session.status is SessionStatus.LIVE
                and session.requirement == req):
            # idempotent re-registration (e.g. a lost grant): same plan
            session.snc_id = src_id
            session.last_heartbeat = now
            self._send_grant(reg.subnet)
            return
        self.sessions[reg.subnet] = SmSession(req, src_id, now,
                                              SessionStatus.LIVE)
        self._recompute("register", skip_push={reg.subnet})
        self._send_grant(reg.subnet)

    def _on_heartbeat(self, src_id: int, hb: wire.Heartbeat) -> None:
        session = self.sessions.get(hb.subnet)
        now = self.kernel.now
        if session is None or session.status is not SessionStatus.LIVE:
            # not under management: hint the sender to register afresh
            self.kernel.log("dsm", "HEARTBEAT_UNKNOWN", f"subnet={hb.subnet}")
            if session is not None:
                session.last_heartbeat = now
            self._send_app(src_id, wire.Deregister(hb.subnet))
            return
        session.last_heartbeat = now
        session.snc_id = src_id
        self._send_app(src_id, wire.Ack(self.plan.version))

    def _on_ack(self, src_id: int, ack: wire.Ack) -> None:
        subnet = next((s for s in sorted(self.sessions)
                       if self.sessions[s].snc_id == src_id), None)
        if subnet is None:
            self.kernel.log("dsm", "ACK_UNKNOWN", f"version={ack.version}")
            return
        self.sessions[subnet].last_heartbeat = self.kernel.now
        self.kernel.log("dsm", "ACK", f"subnet={subnet} version={ack.version}")
        push = self._pushes.get(subnet)
        if push is not None and ack.version >= push.version:
            self._acked_band[subnet] = push.band
            if push.timer is not None:
                push.timer.cancel()
            del self._pushes[subnet]

    def _on_deregister(self, dereg: wire.Deregister) -> None:
        session = self.sessions.get(dereg.subnet)
        if session is None or session.status is SessionStatus.DEREGISTERED:
            return
        session.status = SessionStatus.DEREGISTERED
        self.kernel.log("dsm", "DEREGISTER", f"subnet={dereg.subnet}")
        self._recompute("deregister")

    # -- allocation ----------------------------------------------------------

    def _recompute(self, reason: str, skip_push: set[int] | None = None) -> None:
        live = [self.sessions[s].requirement for s in sorted(self.sessions)
                if self.sessions[s].status is SessionStatus.LIVE]
        self.plan = compute_allocation(live, self.plan.version + 1,
                                       self.kernel.now)
        self.kernel.log(
            "dsm", "PLAN",
            f"version={self.plan.version} reason={reason} "
            f"assignments={_fmt_plan(self.plan)}")
        for listener in self.plan_listeners:
            listener(self.plan)
        for subnet in sorted(self.sessions):
            if self.sessions[subnet].status is not SessionStatus.LIVE:
                continue
            if skip_push and subnet in skip_push:
                continue
            band = self.plan.band_for(subnet)
            outstanding = self._pushes.get(subnet)
            if outstanding is not None and outstanding.band == band:
                continue  # the in-flight push already carries this band
            if outstanding is None and self._acked_band.get(subnet) == band:
                self.kernel.log("dsm", "PUSH_SUPPRESSED",
                                f"subnet={subnet} version={self.plan.version}")
                continue
            self._start_push(subnet, band)

    def _send_grant(self, subnet: int) -> None:
        session = self.sessions[subnet]
        band = self.plan.band_for(subnet)
        self.kernel.log(
            "dsm", "GRANT",
            f"subnet={subnet} version={self.plan.version} band={_fmt_band(band)}")
        self._send_app(session.snc_id, wire.Grant(self.plan.version, band))
        # grants are not acknowledged; a lost grant resurfaces as
        # re-registration after the controller's timeout
        self._acked_band[subnet] = band

    # -- reconfigure push ----------------------------------------------------

    def _start_push(self, subnet: int, band: SpectrumBand) -> None:
        old = self._pushes.pop(subnet, None)
        if old is not None and old.timer is not None:
            old.timer.cancel()
        push = _Push(subnet, self.plan.version, band)
        self._pushes[subnet] = push
        self._send_push(push)

    def _send_push(self, push: _Push) -> None:
        session = self.sessions.get(push.subnet)
        if session is None or session.status is not SessionStatus.LIVE:
            self._pushes.pop(push.subnet, None)
            return
        push.sends += 1
        self.kernel.log(
            "dsm", "PUSH",
            f"subnet={push.subnet} version={push.version} "
            f"band={_fmt_band(push.band)} attempt={push.sends}")
        self._send_app(session.snc_id, wire.Reconfigure(push.version, push.band))
        push.timer = self.kernel.call_at(
            self.kernel.now + PUSH_RETRY_SPACING_MS, RANK_SM,
            (self.host, push.subnet), lambda: self._push_deadline(push))

    def _push_deadline(self, push: _Push) -> None:
        if self._pushes.get(push.subnet) is not push or not self._host_up():
            return
        if push.sends <= PUSH_RETRIES:
            self._send_push(push)
            return
        del self._pushes[push.subnet]
        session = self.sessions[push.subnet]
        if session.status is SessionStatus.LIVE:
            session.status = SessionStatus.FAILED
            self.kernel.log("dsm", "FAILED",
                            f"subnet={push.subnet} reason=push_unacknowledged")
            self._recompute("push_unacknowledged")

    # -- plumbing ------------------------------------------------------------

    def _send_app(self, dst_id: int, payload: wire.Payload) -> bool:
        if not self._host_up():
            return False
        node = self.plane.nodes[self.host]
        return self.plane.send(self.host, ControlMessage(
            src=node.node_id, dst=dst_id, kind=MessageKind.APP,
            payload=wire.encode(payload)))

    def state_view(self) -> dict:
        """Immutable-ish summary for snapshots."""
        return {
            str(subnet): {
                "status": session.status.value,
                "qos": session.requirement.qos.name,
                "requested_mhz": session.requirement.requested_mhz,
                "priority": session.requirement.priority,
                "last_heartbeat": session.last_heartbeat,
            }
            for subnet, session in sorted(self.sessions.items())
        }
