"""Kill a backbone node and watch the control plane heal around it.

Builds a random connected backbone, converges the routing plane, publishes
the manager's name record into the DHT, then removes a non-cut node.  The
interesting part is what happens next: gossip quiets down again within a
few rounds of the surviving graph's diameter, and after a single republish
cycle every remaining node can still resolve the name.

Usage: python3 demos/churn_recovery.py [n] [seed]
"""

import random
import sys
from collections import deque

from dsmlab.dht import DhtService
from dsmlab.kernel import SimKernel
from dsmlab.routing import GOSSIP_PERIOD_MS, ControlPlane, format_id
from dsmlab.topology import articulation_points, random_connected_topology

KEY = b"dynamic-spectrum-manager"


def diameter(graph, refs):
    best = 0
    for start in refs:
        dist = {start: 0}
        q = deque([start])
        while q:
            cur = q.popleft()
            for nxt in graph.neighbors(cur):
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    q.append(nxt)
        best = max(best, max(dist.values()))
    return best


def main() -> None:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 40
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 42

    kernel = SimKernel(seed=seed)
    graph = random_connected_topology(n, random.Random(seed))
    plane = ControlPlane(kernel, graph)
    plane.boot_all()

    rounds = 0
    while not plane.converged:
        kernel.run_until(kernel.now + GOSSIP_PERIOD_MS)
        plane.gossip_round()
        rounds += 1
    print(f"backbone: {n} nodes, converged after {rounds} gossip rounds")

    dht = DhtService(kernel, plane)
    owner = min(plane.live_refs())
    record = (owner, KEY, (plane.nodes[owner].node_id, "sm"), 1)
    dht.put(*record)
    dht.own(*record)
    print(f"name record published by node {owner} "
          f"(id {format_id(plane.nodes[owner].node_id)[:12]}...)")

    cut = articulation_points(graph)
    rng = random.Random(seed + 1)
    victim = rng.choice(sorted(r for r in plane.live_refs()
                               if r not in cut and r != owner))
    graph.set_node(victim, False)
    plane.shutdown_node(victim)
    live = list(plane.live_refs())
    bound = diameter(graph, live) + 2
    print(f"\nnode {victim} removed (not a cut vertex); "
          f"re-convergence bound is diameter+2 = {bound} rounds")

    changing = 0
    while True:
        kernel.run_until(kernel.now + GOSSIP_PERIOD_MS)
        plane.gossip_round()
        if plane.round_changes == 0:
            break
        changing += 1
    verdict = "within" if changing <= bound else "OVER"
    print(f"tables quiet again after {changing} changing rounds ({verdict} bound)")

    dht.republish_tick()
    resolved = 0
    for ref in live:
        record = dht.get(ref, KEY)
        assert record is not None and record.value[0] == plane.nodes[owner].node_id
        resolved += 1
    print(f"name still resolvable from all {resolved} surviving nodes "
          "after one republish cycle")


if __name__ == "__main__":
    main()
