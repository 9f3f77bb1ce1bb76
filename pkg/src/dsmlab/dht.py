"""Integrated DHT for well-known-name discovery.

Keys hash into the routing ID space; records replicate at the two live nodes
closest to the key, found by an iterative greedy lookup that only queries
nodes the origin can actually route to. Lookups and stores are modeled as
instantaneous relative to the virtual clock (their RTT is negligible against
the tick periods that drive the protocol state machines)."""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import RANK_DHT_MAINT, SimKernel
from .routing import ControlPlane, format_id, key_to_id, xor_distance
from .topology import NodeRef

REPLICAS = 2
RECORD_TTL_S = 30
REPUBLISH_PERIOD_MS = RECORD_TTL_S * 1000 // 2
LOOKUP_WIDTH = 3  # closest candidates returned per queried node


@dataclass
class DhtRecord:
    key: bytes
    value: tuple[int, str]  # (node id, application port tag)
    version: int
    published_at: int
    ttl_s: int = RECORD_TTL_S

    def expired(self, now: int) -> bool:
        return now - self.published_at > self.ttl_s * 1000


class PutFailed(Exception):
    pass


class DhtService:
    """Publish/fetch named records through the control plane's node tables."""

    def __init__(self, kernel: SimKernel, plane: ControlPlane):
        self.kernel = kernel
        self.plane = plane
        # records owned (periodically re-published) per node: ref -> key -> (value, version)
        self.owned: dict[NodeRef, dict[bytes, tuple[tuple[int, str], int]]] = {}

    def start(self) -> None:
        self.kernel.every(REPUBLISH_PERIOD_MS, RANK_DHT_MAINT, (0,),
                          self.republish_tick)

    # -- lookup -------------------------------------------------------------

    def _closest_known(self, ref: NodeRef, key_id: int, width: int) -> list[int]:
        node = self.plane.nodes[ref]
        ids = {node.node_id}
        ids.update(c.target for c in node.table.contacts.values())
        ids.update(node.vicinity)
        ranked = sorted(ids, key=lambda i: (xor_distance(i, key_id), i))
        return ranked[:width]

    def lookup(self, origin: NodeRef, key_id: int) -> list[NodeRef]:
        """Iterative greedy lookup: repeatedly query the closest reachable
        not-yet-queried candidate for its closest contacts, until the
        candidate set stops improving. Returns live reachable refs in
        closeness order."""
        if origin not in self.plane.nodes:
            return []
        shortlist: set[int] = set(self._closest_known(origin, key_id, LOOKUP_WIDTH))
        shortlist.add(self.plane.nodes[origin].node_id)
        queried: set[int] = set()
        dead: set[int] = set()
        budget = 3 * len(self.plane.nodes) + 8
        while budget > 0:
            candidates = sorted(
                (i for i in shortlist if i not in queried and i not in dead),
                key=lambda i: (xor_distance(i, key_id), i))
            if not candidates:
                break
            target = candidates[0]
            budget -= 1
            queried.add(target)
            ref = self.plane.by_id.get(target)
            if ref is None or not self.plane.graph.is_up(ref):
                dead.add(target)
                continue
            if ref != origin and not self.plane.trace_route(origin, target).delivered:
                dead.add(target)
                continue
            shortlist.update(self._closest_known(ref, key_id, LOOKUP_WIDTH))
        alive = sorted(
            (i for i in queried if i not in dead),
            key=lambda i: (xor_distance(i, key_id), i))
        return [self.plane.by_id[i] for i in alive]

    # -- operations ---------------------------------------------------------

    def put(self, origin: NodeRef, key: bytes, value: tuple[int, str],
            version: int, ttl_s: int = RECORD_TTL_S) -> list[NodeRef]:
        """Replicate at the closest live nodes. A publish only counts when at
        least one replica other than the origin stores it; a node cut off
        from the backbone cannot meaningfully register a name."""
        key_id = key_to_id(key)
        now = self.kernel.now
        replicas = self.lookup(origin, key_id)[:REPLICAS]
        stored: list[NodeRef] = []
        for ref in replicas:
            self._store_local(ref, DhtRecord(key, value, version, now, ttl_s))
            stored.append(ref)
        self.kernel.log("dht", "DHT_PUT",
                        f"key={key.decode()} replicas={','.join(str(r) for r in stored) or '-'} "
                        f"version={version}")
        if not any(ref != origin for ref in stored):
            raise PutFailed(f"no remote replica reachable for {key.decode()!r}")
        return stored

    def get(self, origin: NodeRef, key: bytes) -> DhtRecord | None:
        """Fetch from the first replica that answers, in closeness order;
        expired records are never returned."""
        if not key:
            raise ValueError("empty key")
        key_id = key_to_id(key)
        now = self.kernel.now
        found: DhtRecord | None = None
        for ref in self.lookup(origin, key_id):
            record = self.plane.nodes[ref].dht_store.get(key)
            if record is None:
                continue
            if record.expired(now):
                del self.plane.nodes[ref].dht_store[key]
                continue
            found = record
            break
        state = f"version={found.version} value={format_id(found.value[0])}" \
            if found else "NotFound"
        self.kernel.log("dht", "DHT_GET", f"key={key.decode()} result={state}")
        return found

    def _store_local(self, ref: NodeRef, record: DhtRecord) -> None:
        store = self.plane.nodes[ref].dht_store
        existing = store.get(record.key)
        if existing is None or record.version >= existing.version:
            store[record.key] = record

    # -- maintenance --------------------------------------------------------

    def own(self, ref: NodeRef, key: bytes, value: tuple[int, str], version: int) -> None:
        self.owned.setdefault(ref, {})[key] = (value, version)

    def disown(self, ref: NodeRef) -> None:
        self.owned.pop(ref, None)

    def republish_tick(self) -> None:
        """Owners re-put with a version bump every half TTL; storing nodes
        sweep expired records."""
        now = self.kernel.now
        for ref in sorted(self.owned):
            if ref not in self.plane.nodes or not self.plane.graph.is_up(ref):
                continue
            for key in sorted(self.owned[ref]):
                value, version = self.owned[ref][key]
                try:
                    self.put(ref, key, value, version + 1)
                    self.owned[ref][key] = (value, version + 1)
                except PutFailed:
                    pass
        for ref in sorted(self.plane.nodes):
            store = self.plane.nodes[ref].dht_store
            for key in list(store):
                if store[key].expired(now):
                    del store[key]
