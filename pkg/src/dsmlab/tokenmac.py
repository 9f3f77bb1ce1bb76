"""Emulated token-based sub-network: a fixed ring of devices sharing one
channel, with exclusive transmit rights rotating each token period.

The channel rate is a linear function of granted width (4 bit/s/Hz), so a
width in MHz is numerically the rate in bit/us. Each rotation serves queued
frames in ring order within the rotation's airtime budget; frames never span
rotations, so a window aligned to rotation boundaries can never exceed
capacity. All internal time is integer nanoseconds for exact replay."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .spectrum import EMPTY_BAND, SpectrumBand

SPECTRAL_EFFICIENCY_BPS_PER_HZ = 4
TOKEN_PERIOD_US = 250
QUEUE_BOUND_FRAMES = 1024


class DeviceRole(Enum):
    ACTUATOR = "actuator"
    SENSOR = "sensor"
    CONTROLLER = "controller"


@dataclass(frozen=True)
class TrafficProfile:
    kind: str               # "cnc_control" | "sensor_telemetry"
    frame_bytes: int
    period_us: int
    deadline_us: int | None = None  # hard latency bound, control traffic only


CNC_CONTROL = TrafficProfile("cnc_control", frame_bytes=64, period_us=1000,
                             deadline_us=1000)
SENSOR_TELEMETRY = TrafficProfile("sensor_telemetry", frame_bytes=1500,
                                  period_us=500)

# Device sets for the two demo sub-networks: machine-control ring and the
# process-monitoring sensor ring.
CNC_DEVICES = [
    ("controller-proxy", DeviceRole.CONTROLLER),
    ("servo-1", DeviceRole.ACTUATOR),
    ("servo-2", DeviceRole.ACTUATOR),
    ("servo-3", DeviceRole.ACTUATOR),
    ("spindle", DeviceRole.ACTUATOR),
    ("e-stop", DeviceRole.SENSOR),
    ("end-switch-1", DeviceRole.SENSOR),
    ("end-switch-2", DeviceRole.SENSOR),
]
SENSOR_DEVICES = [
    ("vibration", DeviceRole.SENSOR),
    ("acoustic", DeviceRole.SENSOR),
    ("temperature", DeviceRole.SENSOR),
    ("humidity", DeviceRole.SENSOR),
]


def capacity_mbps(band: SpectrumBand) -> int:
    return band.width_mhz * SPECTRAL_EFFICIENCY_BPS_PER_HZ


@dataclass
class SubnetMetrics:
    throughput_mbps: float = 0.0
    latency_p50_us: float = 0.0
    latency_p99_us: float = 0.0
    jitter_us: float = 0.0
    deadline_miss_ratio: float = 0.0
    frames_dropped: int = 0
    no_data: bool = False


def nearest_rank(sorted_samples: list[int], percentile: float) -> int:
    """Nearest-rank percentile over a pre-sorted sample list."""
    if not sorted_samples:
        raise ValueError("empty sample list")
    n = len(sorted_samples)
    rank = max(1, -(-int(percentile * n) // 100))  # ceil(p*n/100), min 1
    return sorted_samples[min(rank, n) - 1]


@dataclass
class _Device:
    name: str
    role: DeviceRole
    phase_ns: int
    next_gen_ns: int = 0
    queue: deque = field(default_factory=deque)  # generation times, ns
    generated: int = 0
    delivered: int = 0
    dropped: int = 0


class TokenSubnet:
    """Deterministic token-ring emulation for one sub-network.

    The band may only change between `advance` calls, so reconfigurations
    take effect exactly at a rotation boundary.
    """

    def __init__(self, subnet_id: int, devices: list[tuple[str, DeviceRole]],
                 profile: TrafficProfile, rng: random.Random,
                 token_period_us: int = TOKEN_PERIOD_US,
                 queue_bound: int = QUEUE_BOUND_FRAMES):
        self.subnet_id = subnet_id
        self.profile = profile
        self.token_period_us = token_period_us
        self.queue_bound = queue_bound
        self.band = EMPTY_BAND
        self.clock_ns = 0  # always a rotation boundary
        period_ns = profile.period_us * 1000
        self.devices = []
        for name, role in devices:
            phase = rng.randrange(period_ns)
            self.devices.append(_Device(name, role, phase, next_gen_ns=phase))
        # window accumulators drained by collect_metrics
        self._window_samples: list[int] = []  # latency, ns
        self._window_bits = 0
        self._window_dropped = 0
        self._window_late = 0
        self._window_delivered = 0
        self._window_cap = 0  # highest capacity seen inside the window

    def set_band(self, band: SpectrumBand) -> None:
        self.band = band
        self._window_cap = max(self._window_cap, capacity_mbps(band))

    def window_capacity_mbps(self) -> int:
        """Upper bound for throughput over the current window: the largest
        capacity any rotation in it could have used."""
        return self._window_cap

    @property
    def frame_bits(self) -> int:
        return self.profile.frame_bytes * 8

    def advance(self, to_us: int) -> None:
        """Run whole token rotations up to to_us; a trailing partial rotation
        waits for the next call."""
        target_ns = to_us * 1000
        rotation_ns = self.token_period_us * 1000
        rate_bit_per_us = capacity_mbps(self.band)
        while self.clock_ns + rotation_ns <= target_ns:
            start_ns = self.clock_ns
            self._generate_until(start_ns)
            self._serve_rotation(start_ns, rotation_ns, rate_bit_per_us)
            self.clock_ns = start_ns + rotation_ns

    def _generate_until(self, t_ns: int) -> None:
        for dev in self.devices:
            while dev.next_gen_ns < t_ns:
                dev.generated += 1
                if len(dev.queue) >= self.queue_bound:
                    dev.dropped += 1
                    self._window_dropped += 1
                else:
                    dev.queue.append(dev.next_gen_ns)
                dev.next_gen_ns += self.profile.period_us * 1000

    def _serve_rotation(self, start_ns: int, rotation_ns: int,
                        rate_bit_per_us: int) -> None:
        if rate_bit_per_us <= 0:
            return
        airtime_ns = -(-self.frame_bits * 1000 // rate_bit_per_us)  # ceil
        used_ns = 0
        deadline_ns = (self.profile.deadline_us or 0) * 1000
        for dev in self.devices:
            while dev.queue and used_ns + airtime_ns <= rotation_ns:
                gen_ns = dev.queue.popleft()
                used_ns += airtime_ns
                done_ns = start_ns + used_ns
                latency = done_ns - gen_ns
                dev.delivered += 1
                self._window_delivered += 1
                self._window_bits += self.frame_bits
                self._window_samples.append(latency)
                if deadline_ns and latency > deadline_ns:
                    self._window_late += 1

    def drop_queued(self) -> int:
        """Flush every queued frame as dropped (power-off path); keeps the
        conservation equation exact."""
        flushed = 0
        for dev in self.devices:
            n = len(dev.queue)
            dev.queue.clear()
            dev.dropped += n
            flushed += n
        self._window_dropped += flushed
        return flushed

    def fast_forward(self, to_us: int) -> None:
        """Skip a powered-off gap: align the clock to the last rotation
        boundary and move generation schedules past the gap on their phase
        grid, without generating anything."""
        rotation_ns = self.token_period_us * 1000
        target_ns = (to_us * 1000 // rotation_ns) * rotation_ns
        if target_ns <= self.clock_ns:
            return
        self.clock_ns = target_ns
        period_ns = self.profile.period_us * 1000
        for dev in self.devices:
            if dev.next_gen_ns < target_ns:
                missed = -(-(target_ns - dev.next_gen_ns) // period_ns)
                dev.next_gen_ns += missed * period_ns

    # -- accounting ---------------------------------------------------------

    def totals(self) -> dict[str, int]:
        """Conservation counters: generated = delivered + queued + dropped."""
        return {
            "generated": sum(d.generated for d in self.devices),
            "delivered": sum(d.delivered for d in self.devices),
            "queued": sum(len(d.queue) for d in self.devices),
            "dropped": sum(d.dropped for d in self.devices),
        }

    def collect_metrics(self, window_ms: int) -> SubnetMetrics:
        """Drain the current window into a metrics snapshot."""
        if window_ms <= 0:
            raise ValueError("window must be > 0")
        metrics = SubnetMetrics()
        samples = sorted(self._window_samples)
        delivered = self._window_delivered
        dropped = self._window_dropped
        if not samples and not dropped:
            metrics.no_data = True
        else:
            metrics.throughput_mbps = self._window_bits / (window_ms * 1000.0)
            if samples:
                p50 = nearest_rank(samples, 50)
                p99 = nearest_rank(samples, 99)
                metrics.latency_p50_us = p50 / 1000.0
                metrics.latency_p99_us = p99 / 1000.0
                metrics.jitter_us = (p99 - p50) / 1000.0
            if self.profile.deadline_us is not None and (delivered + dropped) > 0:
                metrics.deadline_miss_ratio = (
                    (self._window_late + dropped) / (delivered + dropped))
            metrics.frames_dropped = dropped
        self.reset_window()
        return metrics

    def reset_window(self) -> None:
        self._window_samples = []
        self._window_bits = 0
        self._window_dropped = 0
        self._window_late = 0
        self._window_delivered = 0
        self._window_cap = capacity_mbps(self.band)
