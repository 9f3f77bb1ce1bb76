"""Shared-spectrum model and the manager's allocation policy.

The managed band is the 100 MHz between 3700 and 3800 MHz. Allocation runs in
two phases: a guarantee phase granting each live sub-network its requested
width in (priority, subnet id) order while supply lasts, then an expansion
phase that spreads any leftover width over the live sub-networks
proportionally to their requests (integer MHz, largest-remainder rounding).
Bands are placed contiguously from the low edge upward in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

BAND_LOW_MHZ = 3700
BAND_HIGH_MHZ = 3800
TOTAL_WIDTH_MHZ = BAND_HIGH_MHZ - BAND_LOW_MHZ


class QosClass(Enum):
    URLLC = 0
    EMBB = 1


@dataclass(frozen=True)
class SpectrumBand:
    """Contiguous frequency interval in MHz; width 0 encodes "no spectrum"."""

    low_mhz: int
    high_mhz: int

    def __post_init__(self) -> None:
        if not (BAND_LOW_MHZ <= self.low_mhz <= self.high_mhz <= BAND_HIGH_MHZ):
            raise ValueError(
                f"band [{self.low_mhz}, {self.high_mhz}] outside "
                f"[{BAND_LOW_MHZ}, {BAND_HIGH_MHZ}]")

    @property
    def width_mhz(self) -> int:
        return self.high_mhz - self.low_mhz


EMPTY_BAND = SpectrumBand(BAND_LOW_MHZ, BAND_LOW_MHZ)


@dataclass(frozen=True)
class SubnetRequirement:
    subnet: int
    qos: QosClass
    requested_mhz: int
    priority: int  # lower = more important

    def __post_init__(self) -> None:
        if not (0 < self.requested_mhz <= TOTAL_WIDTH_MHZ):
            raise ValueError(
                f"requested width {self.requested_mhz} MHz out of (0, {TOTAL_WIDTH_MHZ}]")
        if self.priority < 0:
            raise ValueError("priority must be unsigned")


@dataclass
class AllocationPlan:
    version: int
    assignments: dict[int, SpectrumBand] = field(default_factory=dict)
    computed_at: int = 0

    def band_for(self, subnet: int) -> SpectrumBand:
        return self.assignments.get(subnet, EMPTY_BAND)

    def total_width(self) -> int:
        return sum(b.width_mhz for b in self.assignments.values())


def largest_remainder_split(weights: dict[int, int], units: int) -> dict[int, int]:
    """Split `units` integer units proportionally to weights with the sum
    preserved exactly; remainder units go to the largest fractional parts,
    ties to the lower id. Exact integer arithmetic throughout."""
    total_weight = sum(weights.values())
    if units < 0:
        raise ValueError("units must be >= 0")
    if total_weight <= 0 or units == 0:
        return {sid: 0 for sid in weights}
    base: dict[int, int] = {}
    fractions: list[tuple[int, int]] = []  # (-remainder_scaled, id)
    for sid, w in weights.items():
        num = units * w
        base[sid] = num // total_weight
        fractions.append((-(num % total_weight), sid))
    leftover = units - sum(base.values())
    for _, sid in sorted(fractions)[:leftover]:
        base[sid] += 1
    return base


def compute_allocation(live: list[SubnetRequirement], version: int,
                       computed_at: int = 0) -> AllocationPlan:
    """Two-phase grant over the shared band; empty live set yields an empty plan."""
    plan = AllocationPlan(version=version, computed_at=computed_at)
    if not live:
        return plan
    order = sorted(live, key=lambda r: (r.priority, r.subnet))

    remaining = TOTAL_WIDTH_MHZ
    widths: dict[int, int] = {}
    for req in order:
        grant = min(req.requested_mhz, remaining)
        widths[req.subnet] = grant
        remaining -= grant

    if remaining > 0:
        extra = largest_remainder_split(
            {req.subnet: req.requested_mhz for req in order}, remaining)
        for sid, add in extra.items():
            widths[sid] += add

    edge = BAND_LOW_MHZ
    for req in order:
        width = widths[req.subnet]
        plan.assignments[req.subnet] = SpectrumBand(edge, edge + width)
        edge += width
    return plan
