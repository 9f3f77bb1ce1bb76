"""Operator gateway: stream queue discipline, HTTP endpoints, SSE fan-out."""

import http.client
import json
import time

import pytest

from dsmlab.gateway import (
    GAP_FRAME,
    GatewayServer,
    STREAM_QUEUE_MAX,
    _Stream,
    record_to_frame,
)
from dsmlab.scenario import demo_scenario
from dsmlab.snc import SncPhase
from dsmlab.testbed import Testbed


# -- stream queue -----------------------------------------------------------

def test_stream_is_fifo_and_drains_on_pop():
    stream = _Stream()
    stream.push({"n": 1})
    stream.push({"n": 2})
    assert stream.pop(0.01) == [{"n": 1}, {"n": 2}]
    assert stream.pop(0.01) == []


def test_stream_overflow_leaves_single_gap_marker():
    stream = _Stream()
    for n in range(STREAM_QUEUE_MAX + 250):
        stream.push({"n": n})
    frames = stream.pop(0.01)
    assert frames[0] is GAP_FRAME
    assert GAP_FRAME not in frames[1:]
    assert len(frames) <= STREAM_QUEUE_MAX + 1
    assert frames[-1] == {"n": STREAM_QUEUE_MAX + 249}
    # the survivors are the newest contiguous suffix
    kept = [f["n"] for f in frames[1:]]
    assert kept == list(range(kept[0], STREAM_QUEUE_MAX + 250))


def test_record_to_frame_preserves_pipes_in_details():
    frame = record_to_frame("1500 | dsm | PLAN | version=2 note=a | b")
    assert frame == {"t": 1500, "module": "dsm", "event": "PLAN",
                     "details": "version=2 note=a | b"}


# -- HTTP surface -----------------------------------------------------------

@pytest.fixture
def gateway():
    tb = Testbed(demo_scenario(duration_ms=10_000))
    gw = GatewayServer(tb)
    gw.start()
    yield gw
    gw.stop()


def _request(gw, method, path, body=None):
    host, port = gw.address
    conn = http.client.HTTPConnection(host, port, timeout=5)
    payload = None if body is None else body.encode()
    headers = {"Content-Length": str(len(payload))} if payload else {}
    conn.request(method, path, body=payload, headers=headers)
    resp = conn.getresponse()
    data = resp.read()
    conn.close()
    return resp.status, resp.getheader("Content-Type"), data


def test_state_endpoint_serves_current_snapshot(gateway):
    status, ctype, data = _request(gateway, "GET", "/api/state")
    assert status == 200
    assert ctype == "application/json"
    snap = json.loads(data)
    assert snap["t"] == 0
    assert snap["sm_host"] == 0
    gateway.testbed.run_until(5000)
    gateway.publish_snapshot()
    _, _, data = _request(gateway, "GET", "/api/state")
    assert json.loads(data)["t"] == 5000


def test_command_validation_and_effect(gateway):
    cases = [
        ('{"kind": "subnet_power", "subnet": 9, "on": false}', False),
        ('{"kind": "subnet_power", "subnet": 2}', False),
        ('{"kind": "node_power", "node": "x", "on": true}', False),
        ('{"kind": "resync"}', False),
        ('{"kind": "subnet_power", "subnet": 2, "on": false}', True),
    ]
    for body, expect in cases:
        status, _, data = _request(gateway, "POST", "/api/command", body)
        assert status == 200
        assert json.loads(data)["accepted"] is expect, body
    tb = gateway.testbed
    tb.run_until(6000)  # drains the queued command into the event stream
    assert tb.sncs[2].phase is SncPhase.OFF
    assert any("SUBNET_POWER_OFF" in r for r in tb.kernel.log_records)


def test_malformed_command_body_is_a_400(gateway):
    status, _, data = _request(gateway, "POST", "/api/command", "{nope")
    assert status == 400
    assert json.loads(data) == {"accepted": False, "reason": "malformed JSON"}


def test_unknown_api_paths_are_404(gateway):
    assert _request(gateway, "GET", "/api/missing")[0] == 404
    assert _request(gateway, "POST", "/api/state")[0] == 404


def test_fallback_page_served_without_static_dir(gateway):
    status, ctype, data = _request(gateway, "GET", "/")
    assert status == 200
    assert ctype.startswith("text/html")
    assert b"dsmlab gateway" in data
    assert _request(gateway, "GET", "/anything.js")[0] == 404


def test_static_dir_serving_and_traversal_guard(tmp_path):
    (tmp_path / "index.html").write_text("<html>dash</html>")
    (tmp_path / "app.js").write_text("console.log(1)")
    tb = Testbed(demo_scenario(duration_ms=1000))
    gw = GatewayServer(tb, static_dir=str(tmp_path))
    gw.start()
    try:
        assert _request(gw, "GET", "/")[2] == b"<html>dash</html>"
        status, ctype, data = _request(gw, "GET", "/app.js")
        assert status == 200 and "javascript" in ctype
        assert _request(gw, "GET", "/../pyproject.toml")[0] == 404
    finally:
        gw.stop()


def _read_sse_frames(resp, want, deadline_s=5.0):
    frames = []
    deadline = time.monotonic() + deadline_s
    while len(frames) < want and time.monotonic() < deadline:
        line = resp.fp.readline()
        if line.startswith(b"data: "):
            frames.append(json.loads(line[6:]))
    return frames


def test_event_stream_fans_out_to_two_clients(gateway):
    host, port = gateway.address
    conns = []
    try:
        for _ in range(2):
            conn = http.client.HTTPConnection(host, port, timeout=5)
            conn.request("GET", "/api/events")
            conns.append((conn, conn.getresponse()))
        for _ in range(200):           # wait for both streams to attach
            if len(gateway._streams) >= 2:
                break
            time.sleep(0.01)
        gateway.testbed.kernel.log("probe", "PING", "n=1")
        for _, resp in conns:
            frames = _read_sse_frames(resp, 1)
            assert frames and frames[0] == {
                "t": 0, "module": "probe", "event": "PING", "details": "n=1"}
    finally:
        for conn, _ in conns:
            conn.close()


def test_snapshot_frames_only_on_change(gateway):
    stream = gateway.attach_stream()
    gateway.publish_snapshot()             # nothing moved yet
    assert all(f["event"] != "SNAPSHOT" for f in stream.pop(0.05))
    gateway.testbed.run_until(3000)
    gateway.publish_snapshot()
    frames = [f for f in stream.pop(0.5) if f["event"] == "SNAPSHOT"]
    assert len(frames) == 1
    gateway.detach_stream(stream)


def test_run_scenario_fast_mode_runs_to_completion():
    tb = Testbed(demo_scenario(duration_ms=2000))
    gw = GatewayServer(tb)
    try:
        gw.run_scenario(realtime=False, linger=False)
        assert tb.kernel.now == 2000
        assert json.loads(gw.snapshot_json())["t"] == 2000
    finally:
        gw.stop()


def test_shutdown_command_ends_linger(gateway):
    status, _, data = _request(gateway, "POST", "/api/command",
                               '{"kind": "shutdown"}')
    assert json.loads(data)["accepted"] is True
    start = time.monotonic()
    gateway.run_scenario(realtime=False, linger=True)
    assert time.monotonic() - start < 5
