"""End-to-end wiring: scenario to running system, scripted and injected
events, metrics export, invariant checks, snapshots."""

import json

import pytest

from dsmlab.kernel import EventKind, NetEvent
from dsmlab.scenario import ScenarioError, demo_scenario, load_scenario
from dsmlab.snc import SncPhase
from dsmlab.spectrum import AllocationPlan, SpectrumBand
from dsmlab.testbed import InvariantViolation, METRICS_CSV_HEADER, Testbed
from dsmlab.tokenmac import SubnetMetrics


def test_run_until_zero_produces_no_log():
    tb = Testbed(demo_scenario())
    log = tb.run_until(0)
    assert log == []
    assert tb.kernel.now == 0


def test_demo_run_configures_both_subnets_and_partitions_band():
    tb = Testbed(demo_scenario())
    tb.run()
    assert tb.plane.converged
    one, two = tb.sncs[1], tb.sncs[2]
    assert one.phase is SncPhase.CONFIGURED
    assert two.phase is SncPhase.CONFIGURED
    assert one.band == SpectrumBand(3700, 3740)
    assert two.band == SpectrumBand(3740, 3800)
    assert tb.manager.plan.version == 2
    # one metrics row per subnet per second, plus the header
    assert tb.metrics_rows[0] == METRICS_CSV_HEADER
    assert len(tb.metrics_rows) == 1 + 2 * 60
    assert not any("| DROP |" in r for r in tb.kernel.log_records)


def test_master_cannot_be_the_manager_host():
    text = """\
sm_host = 0
[nodes]
0 1
[links]
0 1 1
[attachments]
1 0
"""
    with pytest.raises(ScenarioError, match="sm host"):
        Testbed(load_scenario(text))


def test_one_node_cannot_master_two_subnets():
    text = """\
sm_host = 0
[nodes]
0 1
[links]
0 1 1
[attachments]
1 1
2 1
"""
    with pytest.raises(ScenarioError, match="master of two"):
        Testbed(load_scenario(text))


def test_scripted_power_off_zeroes_metrics_rows():
    scn = demo_scenario(duration_ms=10_000)
    scn.events.extend(load_scenario(
        "sm_host = 0\n[nodes]\n0 1\n[links]\n0 1 1\n[attachments]\n2 1\n"
        "[events]\n5000 subnet_power_off 2\n").events)
    tb = Testbed(scn)
    tb.run()
    assert tb.sncs[2].phase is SncPhase.OFF
    for t in range(5000, 10_001, 1000):
        assert f"{t},2,0,0.000,0.0,0.0,0.0,0.0000,0" in tb.metrics_rows
    # subnet 1 keeps moving data and, once the silent peer times out,
    # inherits the freed width
    width_at = {int(r.split(",")[0]): int(r.split(",")[2])
                for r in tb.metrics_rows[1:] if r.split(",")[1] == "1"}
    assert width_at[4000] == 40
    assert width_at[10_000] == 100


def test_master_node_cycle_reaches_configured_again():
    scn = demo_scenario(duration_ms=25_000)
    scn.events.extend([NetEvent(5000, EventKind.NODE_DOWN, 3),
                       NetEvent(8000, EventKind.NODE_UP, 3)])
    tb = Testbed(scn)
    tb.run()
    assert tb.sncs[1].phase is SncPhase.CONFIGURED
    assert tb.sncs[1].band == SpectrumBand(3700, 3740)
    assert tb.manager.state_view()["1"]["status"] == "Live"
    assert any("NODE_DOWN" in r for r in tb.kernel.log_records)
    assert any("NODE_UP" in r for r in tb.kernel.log_records)


def test_injected_command_replays_like_a_scripted_event():
    scripted = demo_scenario()
    scripted.events.extend(load_scenario(
        "sm_host = 0\n[nodes]\n0 1\n[links]\n0 1 1\n[attachments]\n2 1\n"
        "[events]\n5100 subnet_power_off 2\n").events)
    a = Testbed(scripted)
    a.run()

    b = Testbed(demo_scenario())
    b.run_until(5100)
    b.enqueue_command(EventKind.SUBNET_POWER_OFF, 2)
    b.run_until(60_000)
    assert a.kernel.log_records == b.kernel.log_records


def test_snapshot_shape_roles_and_sorted_json():
    tb = Testbed(demo_scenario())
    tb.run_until(15_000)
    snap = tb.snapshot()
    assert snap["t"] == 15_000
    assert snap["converged"] is True
    assert snap["sm_host"] == 0
    roles = {n["ref"]: n["role"] for n in snap["topology"]["nodes"]}
    assert roles[0] == "sm" and roles[3] == "master" and roles[7] == "master"
    assert roles[5] == "router"
    assert set(snap["plan"]["assignments"]) == {"1", "2"}
    assert snap["plan"]["assignments"]["1"]["width_mhz"] == 40
    assert snap["subnets"]["2"]["phase"] == "Configured"
    assert snap["subnets"]["2"]["sm_status"] == "Live"
    assert snap["subnets"]["1"]["metrics"]["dropped"] == 0
    assert len(snap["log_tail"]) == 50
    text = tb.snapshot_json()
    assert json.dumps(json.loads(text), sort_keys=True) == text


def test_plan_invariants_reject_regressions_and_overlap():
    tb = Testbed(demo_scenario())
    tb._on_plan(AllocationPlan(1, {}, 0))
    with pytest.raises(InvariantViolation, match="did not increase"):
        tb._on_plan(AllocationPlan(1, {}, 0))
    with pytest.raises(InvariantViolation, match="[Oo]verlap"):
        tb._on_plan(AllocationPlan(2, {1: SpectrumBand(3700, 3760),
                                       2: SpectrumBand(3750, 3800)}, 0))


def test_subnet_invariants_reject_impossible_metrics():
    tb = Testbed(demo_scenario())
    tb.run_until(3000)
    snc = tb.sncs[1]
    with pytest.raises(InvariantViolation, match="capacity"):
        tb._check_subnet(1, snc, SubnetMetrics(throughput_mbps=10_000.0), 400)
    snc.subnet.devices[0].generated += 1  # break conservation on purpose
    with pytest.raises(InvariantViolation, match="conservation"):
        tb._check_subnet(1, snc, SubnetMetrics(), 400)


def test_written_artifacts_round_trip(tmp_path):
    tb = Testbed(demo_scenario(duration_ms=3000))
    tb.run()
    metrics = tmp_path / "metrics.csv"
    log = tmp_path / "events.log"
    tb.write_metrics(str(metrics))
    tb.write_log(str(log))
    lines = metrics.read_text().splitlines()
    assert lines[0] == METRICS_CSV_HEADER
    assert len(lines) == len(tb.metrics_rows)
    assert log.read_text().splitlines() == tb.kernel.log_records


def test_identical_scenarios_replay_identically():
    a = Testbed(demo_scenario(duration_ms=15_000))
    b = Testbed(demo_scenario(duration_ms=15_000))
    assert a.run() == b.run()
    assert a.metrics_rows == b.metrics_rows
