"""Scenario text parsing and validation."""

import pytest

from dsmlab.kernel import EventKind
from dsmlab.scenario import (
    DEMO_SCENARIO,
    ScenarioError,
    demo_scenario,
    load_scenario,
)
from dsmlab.spectrum import QosClass

MINIMAL = """\
sm_host = 0
[nodes]
0 1
[links]
0 1 2
[attachments]
5 1
"""


def test_demo_scenario_parses_to_expected_shape():
    scn = load_scenario(DEMO_SCENARIO)
    assert scn.seed == 7
    assert scn.duration_ms == 60000
    assert scn.sm_host == 0
    assert sorted(scn.topology.nodes()) == list(range(12))
    assert scn.topology.has_link(11, 0)
    assert scn.attachments == {1: 3, 2: 7}
    one = scn.subnets[1]
    assert (one.qos, one.requested_mhz, one.priority, one.profile) == (
        QosClass.URLLC, 40, 0, "cnc_control")
    two = scn.subnets[2]
    assert (two.qos, two.requested_mhz, two.priority, two.profile) == (
        QosClass.EMBB, 60, 1, "sensor_telemetry")
    assert scn.events == []


def test_defaults_seed_duration_and_subnet_spec():
    scn = load_scenario(MINIMAL)
    assert scn.seed == 0
    assert scn.duration_ms == 60000
    spec = scn.subnets[5]
    assert spec.qos is QosClass.EMBB
    assert spec.requested_mhz == 20
    assert spec.priority == 1
    assert spec.profile == "sensor_telemetry"


def test_events_parse_including_link_pairs():
    scn = load_scenario(MINIMAL + """\
[events]
100 node_down 1
200 link_down 0-1
300 link_up 0-1
400 subnet_power_off 5
""")
    kinds = [e.kind for e in scn.events]
    assert kinds == [EventKind.NODE_DOWN, EventKind.LINK_DOWN,
                     EventKind.LINK_UP, EventKind.SUBNET_POWER_OFF]
    assert scn.events[1].target == (0, 1)
    assert scn.events[3].target == 5


def test_comments_and_blank_lines_ignored():
    scn = load_scenario("""
# top comment
sm_host = 0   # trailing
[nodes]
0 1   # two of them
[links]
0 1 1
[attachments]
1 0
""")
    assert scn.sm_host == 0
    assert len(scn.topology.nodes()) == 2


@pytest.mark.parametrize("text,line,fragment", [
    ("bogus\n", 1, "key = value"),
    ("tempo = 3\n", 1, "unknown key"),
    ("sm_host = 0\nsm_host = 1\n", 2, "duplicate key"),
    ("sm_host = 0\n[nowhere]\n", 2, "unknown section"),
    ("sm_host = 0\n[nodes]\n0 0\n", 3, "duplicate node"),
    ("sm_host = 0\n[nodes]\n0 x\n", 3, "integer"),
    ("sm_host = 0\n[nodes]\n0 1\n[links]\n0 1\n", 5, "links need"),
    ("sm_host = 0\n[nodes]\n0 1\n[links]\n0 2 1\n", 5, "not a node"),
    ("sm_host = 0\n[nodes]\n0 1\n[links]\n0 0 1\n", 5, "self-loop"),
    ("sm_host = 0\n[nodes]\n0 1\n[links]\n0 1 0\n", 5, "latency"),
    ("sm_host = 0\n[nodes]\n0 1\n[links]\n0 1 1\n0 1 2\n", 6, "duplicate link"),
    (MINIMAL + "[attachments]\n5 0\n", 9, "attached twice"),
    (MINIMAL + "[attachments]\n6 9\n", 9, "unknown node"),
    (MINIMAL + "[subnets]\n5 urllc 40 0\n", 9, "subnets need"),
    (MINIMAL + "[subnets]\n5 gold 40 0 cnc_control\n", 9, "unknown qos"),
    (MINIMAL + "[subnets]\n5 urllc 101 0 cnc_control\n", 9, "requested_mhz"),
    (MINIMAL + "[subnets]\n5 urllc 40 -1 cnc_control\n", 9, "priority"),
    (MINIMAL + "[subnets]\n5 urllc 40 0 bursty\n", 9, "unknown profile"),
    (MINIMAL + "[events]\n5 node_down\n", 9, "events need"),
    (MINIMAL + "[events]\n-5 node_down 1\n", 9, "must be >= 0"),
    (MINIMAL + "[events]\n5 node_melt 1\n", 9, "unknown event kind"),
    (MINIMAL + "[events]\n5 link_down 0:1\n", 9, "a-b"),
    (MINIMAL + "[events]\n5 node_down 9\n", 9, "unknown node"),
    (MINIMAL + "[events]\n5 link_down 0-9\n", 9, "unknown link"),
    (MINIMAL + "[events]\n5 subnet_power_on 9\n", 9, "unknown subnet"),
])
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ScenarioError) as err:
        load_scenario(text)
    assert err.value.line == line
    assert fragment in str(err.value)
    assert str(err.value).startswith(f"line {line}:")


@pytest.mark.parametrize("text,fragment", [
    ("sm_host = 0\n", "empty topology"),
    ("[nodes]\n0\n", "no sm_host"),
    ("sm_host = 4\n[nodes]\n0\n", "not a node"),
    ("sm_host = 0\n[nodes]\n0\n[subnets]\n1 urllc 40 0 cnc_control\n",
     "no attachment"),
])
def test_whole_file_validation_errors(text, fragment):
    with pytest.raises(ScenarioError) as err:
        load_scenario(text)
    assert fragment in str(err.value)


def test_demo_scenario_override_helpers():
    scn = demo_scenario(seed=99, duration_ms=1234)
    assert scn.seed == 99 and scn.duration_ms == 1234
    assert demo_scenario().seed == 7


def test_attachments_and_subnets_come_out_sorted():
    scn = load_scenario("""\
sm_host = 0
[nodes]
0 1 2
[links]
0 1 1
1 2 1
[attachments]
9 2
3 1
""")
    assert list(scn.attachments) == [3, 9]
    assert list(scn.subnets) == [3, 9]
