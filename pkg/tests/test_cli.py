"""CLI behavior: subcommands, flag validation, exit codes, artifacts."""

import json

from dsmlab.cli import EX_INVARIANT, EX_OK, EX_SCENARIO, EX_USAGE, main
from dsmlab.scenario import DEMO_SCENARIO


def _demo_file(tmp_path, duration="duration_ms = 60000",
               replacement="duration_ms = 6000"):
    path = tmp_path / "demo.scn"
    path.write_text(DEMO_SCENARIO.replace(duration, replacement))
    return str(path)


def test_demo_subcommand_prints_scenario(capsys):
    assert main(["demo"]) == EX_OK
    out = capsys.readouterr().out
    assert out == DEMO_SCENARIO


def test_demo_subcommand_writes_file(tmp_path):
    target = tmp_path / "o.scn"
    assert main(["demo", "--out", str(target)]) == EX_OK
    assert target.read_text() == DEMO_SCENARIO


def test_run_headless_prints_log_and_exits_clean(tmp_path, capsys):
    code = main(["run", "--scenario", _demo_file(tmp_path)])
    assert code == EX_OK
    out = capsys.readouterr().out.splitlines()
    assert out  # the event log lands on stdout
    assert all(" | " in line for line in out)
    assert any("| dsm | GRANT |" in line for line in out)


def test_run_writes_artifacts_instead_of_stdout(tmp_path, capsys):
    log = tmp_path / "run.log"
    metrics = tmp_path / "run.csv"
    code = main(["run", "--scenario", _demo_file(tmp_path),
                 "--log-out", str(log), "--metrics-out", str(metrics)])
    assert code == EX_OK
    assert capsys.readouterr().out == ""
    assert "| dsm | PLAN |" in log.read_text()
    assert metrics.read_text().startswith("t,subnet,width_mhz,")


def test_seed_override_changes_log_duration_override_changes_length(tmp_path, capsys):
    path = _demo_file(tmp_path)
    main(["run", "--scenario", path, "--seed", "1"])
    first = capsys.readouterr().out
    main(["run", "--scenario", path, "--seed", "1"])
    second = capsys.readouterr().out
    main(["run", "--scenario", path, "--seed", "2"])
    third = capsys.readouterr().out
    assert first == second          # same seed: byte-identical replay
    assert first != third           # different seed: different ids at least
    main(["run", "--scenario", path, "--duration-ms", "1000"])
    short = capsys.readouterr().out
    assert len(short) < len(first)


def test_missing_scenario_file_is_a_scenario_error(tmp_path, capsys):
    code = main(["run", "--scenario", str(tmp_path / "absent.scn")])
    assert code == EX_SCENARIO
    assert "cannot read scenario" in capsys.readouterr().err


def test_invalid_scenario_reports_line_and_exits_one(tmp_path, capsys):
    path = tmp_path / "bad.scn"
    path.write_text("sm_host = 0\n[nodes]\n0 0\n")
    assert main(["run", "--scenario", str(path)]) == EX_SCENARIO
    err = capsys.readouterr().err
    assert "line 3" in err and "duplicate node" in err


def test_untestable_attachment_is_a_scenario_error(tmp_path, capsys):
    path = tmp_path / "bad.scn"
    path.write_text(
        "sm_host = 0\n[nodes]\n0 1\n[links]\n0 1 1\n[attachments]\n1 0\n")
    assert main(["run", "--scenario", str(path)]) == EX_SCENARIO
    assert "sm host" in capsys.readouterr().err


def test_usage_errors_exit_64(tmp_path, capsys):
    assert main([]) == EX_USAGE
    assert main(["run"]) == EX_USAGE
    assert main(["run", "--scenario", "x", "--no-such-flag"]) == EX_USAGE
    assert main(["run", "--scenario", _demo_file(tmp_path),
                 "--realtime"]) == EX_USAGE
    assert "--realtime requires --serve" in capsys.readouterr().err
    assert main(["run", "--scenario", _demo_file(tmp_path),
                 "--serve", "localhost:notaport"]) == EX_USAGE


def test_exit_code_constants():
    assert (EX_OK, EX_SCENARIO, EX_INVARIANT, EX_USAGE) == (0, 1, 2, 64)


def test_serve_mode_runs_and_stops(tmp_path, capsys):
    # non-realtime serve: runs the scenario flat out, lingers until shutdown;
    # preload a shutdown into the command queue so the run returns
    import threading
    from dsmlab.cli import main as cli_main

    path = _demo_file(tmp_path, replacement="duration_ms = 1500")
    codes = []

    def run():
        codes.append(cli_main(["run", "--scenario", path,
                               "--serve", "127.0.0.1:0",
                               "--metrics-out", str(tmp_path / "m.csv")]))

    thread = threading.Thread(target=run)
    thread.start()
    import http.client
    import re
    import time
    deadline = time.monotonic() + 10
    port = None
    while time.monotonic() < deadline and port is None:
        err = capsys.readouterr().err
        match = re.search(r"http://127\.0\.0\.1:(\d+)/", err)
        if match:
            port = int(match.group(1))
        else:
            time.sleep(0.05)
    assert port is not None
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5)
    body = b'{"kind": "shutdown"}'
    conn.request("POST", "/api/command", body=body,
                 headers={"Content-Length": str(len(body))})
    assert json.loads(conn.getresponse().read())["accepted"] is True
    conn.close()
    thread.join(timeout=15)
    assert not thread.is_alive()
    assert codes == [EX_OK]
    assert (tmp_path / "m.csv").exists()
