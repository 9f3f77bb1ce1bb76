"""Walk through a subnet failure: detection, reallocation, and push/ack.

The bundled fixture runs two subnets.  At t=9000 ms the telemetry subnet's
master is scripted off.  The manager stops seeing its heartbeats, declares
the session failed after the timeout, recomputes the plan, and pushes the
freed spectrum to the survivor.  This script extracts that timeline from
the run log and prints each step with its delay after the trigger.

Usage: python3 demos/failover.py
"""

from dsmlab.scenario import EventKind, NetEvent, demo_scenario
from dsmlab.testbed import Testbed

TRIGGER_MS = 9000
RUN_MS = 20_000


def main() -> None:
    scenario = demo_scenario(duration_ms=RUN_MS)
    scenario.events.append(NetEvent(TRIGGER_MS, EventKind.SUBNET_POWER_OFF, 2))

    testbed = Testbed(scenario)
    testbed.run()

    steps = []
    for record in testbed.kernel.log_records:
        t_str, rest = record.split(" | ", 1)
        t = int(t_str)
        if t < TRIGGER_MS:
            continue
        if any(mark in rest for mark in
               ("SUBNET_POWER_OFF", "| FAILED |", "| PLAN |", "| PUSH |",
                "| ACK |", "| RECONFIGURED |")):
            steps.append((t, rest))

    print(f"trigger: subnet 2 powered off at t={TRIGGER_MS} ms\n")
    print("timeline (delay after trigger):")
    for t, rest in steps:
        print(f"  +{t - TRIGGER_MS:>5} ms  {rest}")

    survivor = testbed.sncs[1]
    print()
    print(f"survivor band after failover: "
          f"{survivor.band.low_mhz}-{survivor.band.high_mhz} MHz "
          f"({survivor.band.width_mhz} MHz wide)")
    assert survivor.band.width_mhz == 100, "survivor should hold the full band"


if __name__ == "__main__":
    main()
