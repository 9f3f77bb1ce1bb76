"""Spectrum allocation policy.

The reference values here come from two independent directions: a
Fraction-based largest-remainder oracle for the integer split, and a
naive brute-force validator for whole plans that re-derives the grant from
first principles with none of the production code paths.
"""

import random
from fractions import Fraction

import pytest

from dsmlab.spectrum import (
    BAND_HIGH_MHZ,
    BAND_LOW_MHZ,
    EMPTY_BAND,
    QosClass,
    SpectrumBand,
    SubnetRequirement,
    TOTAL_WIDTH_MHZ,
    compute_allocation,
    largest_remainder_split,
)


def _req(subnet, width, priority, qos=QosClass.EMBB):
    return SubnetRequirement(subnet, qos, width, priority)


# -- largest remainder ------------------------------------------------------

def _split_oracle(weights, units):
    """Exact-rational re-derivation of the split, written independently."""
    total = sum(weights.values())
    if total <= 0 or units == 0:
        return {k: 0 for k in weights}
    quota = {k: Fraction(units * w, total) for k, w in weights.items()}
    out = {k: int(q) for k, q in quota.items()}  # floor: quotas are >= 0
    leftover = units - sum(out.values())
    order = sorted(weights, key=lambda k: (-(quota[k] - out[k]), k))
    for k in order[:leftover]:
        out[k] += 1
    return out


def test_split_matches_fraction_oracle():
    rng = random.Random(31337)
    for _ in range(500):
        n = rng.randrange(1, 9)
        weights = {sid: rng.randrange(1, 101) for sid in rng.sample(range(1, 50), n)}
        units = rng.randrange(0, 101)
        got = largest_remainder_split(weights, units)
        assert got == _split_oracle(weights, units)
        assert sum(got.values()) == (units if sum(weights.values()) else 0)


def test_split_edge_cases():
    assert largest_remainder_split({}, 10) == {}
    assert largest_remainder_split({1: 5, 2: 5}, 0) == {1: 0, 2: 0}
    assert largest_remainder_split({1: 1}, 100) == {1: 100}
    # exact tie on the fractional part resolves to the lower id
    assert largest_remainder_split({1: 1, 2: 1}, 5) == {1: 3, 2: 2}
    with pytest.raises(ValueError):
        largest_remainder_split({1: 1}, -1)


# -- whole-plan validator ---------------------------------------------------

def _validate_plan(live, plan):
    """Brute-force re-derivation plus structural checks; returns a list of
    violation strings (empty = plan is valid)."""
    problems = []
    by_order = sorted(live, key=lambda r: (r.priority, r.subnet))

    # structural: in-band, non-overlap, contiguity from the low edge, and the
    # placement order of the allocation policy
    edge = BAND_LOW_MHZ
    for req in by_order:
        band = plan.band_for(req.subnet)
        if not (BAND_LOW_MHZ <= band.low_mhz <= band.high_mhz <= BAND_HIGH_MHZ):
            problems.append(f"subnet {req.subnet} band out of range")
        if band.low_mhz != edge:
            problems.append(f"subnet {req.subnet} not contiguous at {edge}")
        edge = band.high_mhz
    if edge - BAND_LOW_MHZ != plan.total_width():
        problems.append("width bookkeeping inconsistent")
    if plan.total_width() > TOTAL_WIDTH_MHZ:
        problems.append("total exceeds the managed band")
    if live and plan.total_width() != TOTAL_WIDTH_MHZ:
        problems.append("band not fully utilized with live subnets")
    if not live and plan.assignments:
        problems.append("assignments without live subnets")

    # priority monotonicity: a shortfall anywhere means every strictly later
    # subnet in (priority, id) order got nothing
    starved = False
    for req in by_order:
        width = plan.band_for(req.subnet).width_mhz
        if starved and width != 0:
            problems.append(f"subnet {req.subnet} granted despite higher-priority shortfall")
        if width < req.requested_mhz:
            starved = True

    # value check: replay the two phases naively
    supply = TOTAL_WIDTH_MHZ
    expect = {}
    for req in by_order:
        take = req.requested_mhz if req.requested_mhz <= supply else supply
        expect[req.subnet] = take
        supply -= take
    if supply and by_order:
        extra = _split_oracle({r.subnet: r.requested_mhz for r in by_order}, supply)
        for sid in expect:
            expect[sid] += extra[sid]
    for req in by_order:
        if plan.band_for(req.subnet).width_mhz != expect[req.subnet]:
            problems.append(
                f"subnet {req.subnet}: width {plan.band_for(req.subnet).width_mhz}"
                f" != expected {expect[req.subnet]}")
    return problems


def test_property_suite_1000_random_requirement_sets():
    rng = random.Random(90210)
    for _ in range(1000):
        n = rng.randrange(1, 9)
        subnets = rng.sample(range(1, 100), n)
        live = [_req(s, rng.randrange(1, 101), rng.randrange(0, 5)) for s in subnets]
        plan = compute_allocation(live, version=1)
        assert _validate_plan(live, plan) == []


def test_empty_live_set_yields_empty_plan():
    plan = compute_allocation([], version=3)
    assert plan.assignments == {}
    assert plan.total_width() == 0
    assert plan.band_for(1) == EMPTY_BAND


def test_single_subnet_gets_everything():
    plan = compute_allocation([_req(2, 60, 1)], version=1)
    assert plan.band_for(2) == SpectrumBand(3700, 3800)


def test_guarantee_order_and_expansion():
    # priorities decide the guarantee order; leftover spreads by request size
    live = [_req(1, 40, 0, QosClass.URLLC), _req(2, 60, 1)]
    plan = compute_allocation(live, version=1)
    assert plan.band_for(1) == SpectrumBand(3700, 3740)
    assert plan.band_for(2) == SpectrumBand(3740, 3800)


def test_oversubscription_starves_low_priority():
    live = [_req(1, 80, 0), _req(2, 80, 1), _req(3, 10, 2)]
    plan = compute_allocation(live, version=1)
    assert plan.band_for(1).width_mhz == 80
    assert plan.band_for(2).width_mhz == 20
    assert plan.band_for(3).width_mhz == 0
    assert plan.band_for(3) == SpectrumBand(3800, 3800)


def test_equal_priority_breaks_ties_by_subnet_id():
    live = [_req(9, 70, 1), _req(4, 70, 1)]
    plan = compute_allocation(live, version=1)
    assert plan.band_for(4).width_mhz == 70
    assert plan.band_for(9).width_mhz == 30
    assert plan.band_for(4).low_mhz == 3700


def test_expansion_is_proportional_with_exact_sum():
    live = [_req(1, 30, 0), _req(2, 10, 0)]
    plan = compute_allocation(live, version=1)
    # 60 MHz leftover splits 45/15
    assert plan.band_for(1).width_mhz == 75
    assert plan.band_for(2).width_mhz == 25
    assert plan.total_width() == 100


def test_requirement_validation():
    with pytest.raises(ValueError):
        SubnetRequirement(1, QosClass.EMBB, 0, 0)
    with pytest.raises(ValueError):
        SubnetRequirement(1, QosClass.EMBB, 101, 0)
    with pytest.raises(ValueError):
        SubnetRequirement(1, QosClass.EMBB, 50, -1)
    with pytest.raises(ValueError):
        SpectrumBand(3690, 3710)


def test_plans_are_deterministic():
    live = [_req(5, 33, 2), _req(3, 41, 0), _req(8, 77, 1)]
    a = compute_allocation(live, version=1)
    b = compute_allocation(list(reversed(live)), version=1)
    assert a.assignments == b.assignments
