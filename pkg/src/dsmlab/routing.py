"""Self-organizing ID-routed control plane over the emulated backbone.

Every node draws a random 160-bit identity at boot and learns its
surroundings through periodic neighbor gossip, which feeds two tiers of
state:

* a Kademlia-style contact table — prefix-length buckets with a small cap —
  holding long-range contacts with next-hop pointers, and
* a vicinity map: sequence-numbered announcements of every reachable
  identity, re-flooded each round, recording the freshest wave's hop count
  and predecessor. Stale entries (no sequence advance for two rounds) are
  expired and briefly tombstoned, so a dead node's identity drains from the
  network in a bounded number of rounds instead of echoing forever.

At the emulated scale the vicinity spans the whole backbone, which is what
gives greedy forwarding its delivery guarantee: a packet for a live identity
always finds that identity among the candidates and descends along strictly
shrinking hop counts. Greedy XOR-descent over both tiers still decides the
step for identities nobody owns (name-hash lookups aim at such points), and
the bucket discipline is exercised by the table tier.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .kernel import RANK_DELIVERY, RANK_GOSSIP, SimKernel
from .topology import NodeRef, TopologyGraph

ID_BITS = 160
ID_SPACE = 1 << ID_BITS

BUCKET_K = 8
GOSSIP_PERIOD_MS = 500
STALE_AFTER_ROUNDS = 3
HOP_TTL = 64

# vicinity announcements expire after this many rounds without a sequence
# advance, and the expired identity is tombstoned briefly so late echoes of
# the final wave cannot resurrect it
VICINITY_STALE_ROUNDS = 2
VICINITY_TOMBSTONE_ROUNDS = 4
# contacts must agree with the vicinity hop estimate within this band.
# Entries drifting above it are support-cycle poison (mutual refresh grows
# hop counts every round); entries far below it are stale optimism from
# before a topology change, which is what seeds such cycles.
CONTACT_HOPS_SLACK = 2


def xor_distance(a: int, b: int) -> int:
    return a ^ b


def shared_prefix_len(a: int, b: int) -> int:
    if a == b:
        return ID_BITS
    return ID_BITS - (a ^ b).bit_length()


def format_id(node_id: int) -> str:
    return f"{node_id:040x}"


def key_to_id(key: bytes | str) -> int:
    """Name-to-ID mapping: SHA-256 truncated to the 160-bit ID space."""
    if isinstance(key, str):
        key = key.encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:ID_BITS // 8], "big")


class MessageKind(Enum):
    HELLO = 0
    CONTACT_GOSSIP = 1
    DHT_PUT = 2
    DHT_GET = 3
    DHT_VALUE = 4
    APP = 5


@dataclass
class ControlMessage:
    src: int
    dst: int
    kind: MessageKind
    payload: bytes = b""
    ttl: int = HOP_TTL


class DropReason(Enum):
    TTL_EXCEEDED = "TtlExceeded"
    NO_ROUTE = "NoRoute"
    NODE_DOWN_MID_PATH = "NodeDownMidPath"


@dataclass
class RouteResult:
    delivered: bool
    path: list[NodeRef]
    reason: DropReason | None = None
    # XOR distance from the pursued contact to the destination at each step;
    # never increases along a delivered path
    progress: list[int] = field(default_factory=list)

    @property
    def hops(self) -> int:
        return len(self.path)


@dataclass
class Contact:
    target: int
    next_hop: NodeRef
    hops: int
    freshness: int


@dataclass
class VicinityEntry:
    """Freshest announcement wave seen for one identity: its sequence number,
    the hop count it arrived with, and the neighbor that carried it."""
    seq: int
    hops: int
    via: NodeRef


class RoutingTable:
    """Prefix-bucketed contact table; bucket i holds contacts sharing exactly
    i leading bits with the owner, at most BUCKET_K each."""

    def __init__(self, owner_id: int, k: int = BUCKET_K):
        self.owner_id = owner_id
        self.k = k
        self.contacts: dict[int, Contact] = {}
        self._bucket_fill: dict[int, int] = {}

    def bucket_index(self, target: int) -> int:
        return shared_prefix_len(self.owner_id, target)

    def get(self, target: int) -> Contact | None:
        return self.contacts.get(target)

    def evict(self, target: int) -> None:
        contact = self.contacts.pop(target, None)
        if contact is not None:
            idx = self.bucket_index(target)
            self._bucket_fill[idx] -= 1

    def install(self, target: int, next_hop: NodeRef, hops: int, now: int) -> bool:
        """Insert or improve a contact; returns True when the table changed
        (refreshes alone do not count). A full bucket evicts its stalest
        entry, refusing the newcomer if every incumbent is current."""
        if target == self.owner_id:
            return False
        existing = self.contacts.get(target)
        if existing is not None:
            if hops < existing.hops:
                existing.next_hop = next_hop
                existing.hops = hops
                existing.freshness = now
                return True
            if hops == existing.hops:
                if existing.next_hop == next_hop:
                    existing.freshness = now
                    return False
                if existing.freshness < now:
                    # equal hops but fresher evidence via a different neighbor
                    existing.next_hop = next_hop
                    existing.freshness = now
                    return True
            return False
        idx = self.bucket_index(target)
        fill = self._bucket_fill.get(idx, 0)
        if fill >= self.k:
            stalest = min(
                (c for c in self.contacts.values() if self.bucket_index(c.target) == idx),
                key=lambda c: (c.freshness, c.target))
            # refuse the newcomer unless an incumbent missed a full round
            if stalest.freshness >= now - GOSSIP_PERIOD_MS:
                return False
            self.evict(stalest.target)
        self.contacts[target] = Contact(target, next_hop, hops, now)
        self._bucket_fill[idx] = self._bucket_fill.get(idx, 0) + 1
        return True

    def entries(self) -> list[Contact]:
        return [self.contacts[t] for t in sorted(self.contacts)]


@dataclass
class RouterNode:
    ref: NodeRef
    node_id: int
    table: RoutingTable
    vicinity: dict[int, VicinityEntry] = field(default_factory=dict)
    # round at which each vicinity entry last advanced its sequence
    vic_advance: dict[int, int] = field(default_factory=dict)
    # expired identity -> (last seq seen, round the tombstone lapses)
    vic_tombstone: dict[int, tuple[int, int]] = field(default_factory=dict)
    dht_store: dict = field(default_factory=dict)
    malformed_gossip: int = 0


class ControlPlane:
    """All per-node routing state plus the gossip round driver and the two
    message paths: an instantaneous trace used for analysis and an event-
    scheduled hop-by-hop transport that consumes link latency."""

    def __init__(self, kernel: SimKernel, graph: TopologyGraph):
        self.kernel = kernel
        self.graph = graph
        self.nodes: dict[NodeRef, RouterNode] = {}
        self.by_id: dict[int, NodeRef] = {}
        self._issued_ids: set[int] = set()
        self._rng = kernel.rng("node-ids")
        self.round_changes = 0
        self.rounds_run = 0
        self.round_no = 0
        self._app_handler: Callable[[NodeRef, ControlMessage], None] | None = None
        self._msg_seq = 0

    # -- lifecycle ----------------------------------------------------------

    def boot_node(self, ref: NodeRef) -> RouterNode:
        """Assign a fresh random identity (regenerated on every reboot) and an
        empty table. Identity collisions are regenerated away."""
        node_id = self._rng.getrandbits(ID_BITS)
        while node_id in self._issued_ids:
            node_id = self._rng.getrandbits(ID_BITS)
        self._issued_ids.add(node_id)
        node = RouterNode(ref=ref, node_id=node_id, table=RoutingTable(node_id))
        self.nodes[ref] = node
        self.by_id[node_id] = ref
        return node

    def shutdown_node(self, ref: NodeRef) -> None:
        node = self.nodes.pop(ref, None)
        if node is not None:
            self.by_id.pop(node.node_id, None)

    def boot_all(self) -> None:
        for ref in self.graph.nodes():
            if self.graph.is_up(ref):
                self.boot_node(ref)

    def start(self) -> None:
        self.kernel.every(GOSSIP_PERIOD_MS, RANK_GOSSIP, (0,), self.gossip_round)

    def node(self, ref: NodeRef) -> RouterNode:
        return self.nodes[ref]

    def live_refs(self) -> list[NodeRef]:
        return sorted(ref for ref in self.nodes if self.graph.is_up(ref))

    # -- gossip -------------------------------------------------------------

    def maintain(self, node: RouterNode, now: int) -> None:
        """Drop contacts whose next hop is no longer a usable neighbor,
        contacts left unrefreshed for the staleness window, and contacts the
        vicinity tier no longer vouches for (unknown identity, or a hop count
        drifting past the slack — the signature of a gossip support cycle)."""
        horizon = now - STALE_AFTER_ROUNDS * GOSSIP_PERIOD_MS
        for contact in list(node.table.contacts.values()):
            vic = node.vicinity.get(contact.target)
            if not self.graph.link_usable(node.ref, contact.next_hop):
                node.table.evict(contact.target)
            elif contact.freshness < horizon:
                node.table.evict(contact.target)
            elif vic is None or abs(contact.hops - vic.hops) > CONTACT_HOPS_SLACK:
                node.table.evict(contact.target)

    def build_advert(self, node: RouterNode, round_no: int,
                     ) -> tuple[list[tuple[int, int]], list[tuple[int, int, int]]]:
        """Snapshot of both gossip tiers: best-known contacts per bucket plus
        the node itself at hop 0, and the vicinity map led by this round's
        fresh self-announcement."""
        contacts = [(node.node_id, 0)]
        contacts.extend((c.target, c.hops) for c in node.table.entries())
        vicinity = [(node.node_id, round_no, 0)]
        vicinity.extend((t, e.seq, e.hops)
                        for t, e in sorted(node.vicinity.items()))
        return contacts, vicinity

    def on_advert(self, node: RouterNode, sender: RouterNode,
                  advert: list[tuple[int, int]], now: int) -> int:
        """Install advertised contacts reached via the sender when strictly
        better; evict contacts the sender no longer vouches for. Malformed
        entries are skipped and counted. Returns the number of table changes."""
        changed = 0
        advertised: set[int] = set()
        entries: list[tuple[int, int]] = []
        for entry in advert:
            if (not isinstance(entry, tuple) or len(entry) != 2
                    or not isinstance(entry[0], int) or not isinstance(entry[1], int)
                    or not (0 <= entry[0] < ID_SPACE) or entry[1] < 0):
                node.malformed_gossip += 1
                continue
            advertised.add(entry[0])
            entries.append(entry)
        for contact in list(node.table.contacts.values()):
            if contact.next_hop == sender.ref and contact.target not in advertised:
                node.table.evict(contact.target)
                changed += 1
        for target, hops in entries:
            if target == node.node_id:
                continue
            vic = node.vicinity.get(target)
            if vic is None or abs(hops + 1 - vic.hops) > CONTACT_HOPS_SLACK:
                continue
            if node.table.install(target, sender.ref, hops + 1, now):
                changed += 1
        return changed

    def on_vicinity(self, node: RouterNode, sender: RouterNode,
                    announcements: list[tuple[int, int, int]], round_no: int) -> int:
        """Fold a neighbor's announcement snapshot into the vicinity map.
        Accept strictly newer sequences, or a shorter arrival at the same
        sequence; tombstoned identities are ignored until a genuinely newer
        wave proves them alive. Returns structural changes (membership, hop
        count, or carrier — sequence advances alone do not count)."""
        changed = 0
        for ann in announcements:
            if (not isinstance(ann, tuple) or len(ann) != 3
                    or not all(isinstance(x, int) for x in ann)
                    or not (0 <= ann[0] < ID_SPACE) or ann[1] < 0 or ann[2] < 0):
                node.malformed_gossip += 1
                continue
            target, seq, hops = ann
            if target == node.node_id:
                continue
            tomb = node.vic_tombstone.get(target)
            if tomb is not None:
                if seq <= tomb[0]:
                    continue
                del node.vic_tombstone[target]
            cur = node.vicinity.get(target)
            if cur is None:
                node.vicinity[target] = VicinityEntry(seq, hops + 1, sender.ref)
                node.vic_advance[target] = round_no
                changed += 1
            elif seq > cur.seq:
                if cur.hops != hops + 1 or cur.via != sender.ref:
                    changed += 1
                cur.seq = seq
                cur.hops = hops + 1
                cur.via = sender.ref
                node.vic_advance[target] = round_no
            elif seq == cur.seq and (hops + 1, sender.ref) < (cur.hops, cur.via):
                cur.hops = hops + 1
                cur.via = sender.ref
                changed += 1
        return changed

    def vicinity_sweep(self, node: RouterNode, round_no: int) -> int:
        """Expire announcements whose sequence stopped advancing and retire
        lapsed tombstones. Expired identities also leave the contact table so
        both tiers settle in the same round."""
        changed = 0
        for target in list(node.vicinity):
            if round_no - node.vic_advance[target] >= VICINITY_STALE_ROUNDS:
                entry = node.vicinity.pop(target)
                del node.vic_advance[target]
                node.vic_tombstone[target] = (
                    entry.seq, round_no + VICINITY_TOMBSTONE_ROUNDS)
                if node.table.get(target) is not None:
                    node.table.evict(target)
                changed += 1
        for target in list(node.vic_tombstone):
            if node.vic_tombstone[target][1] <= round_no:
                del node.vic_tombstone[target]
        return changed

    def gossip_round(self) -> None:
        """One synchronous round: every Up node snapshots both tiers, then all
        adverts are delivered in ref order and stale announcements are swept.
        Deterministic by construction."""
        now = self.kernel.now
        live = self.live_refs()
        for ref in live:
            self.maintain(self.nodes[ref], now)
        self.round_no += 1
        adverts = {ref: self.build_advert(self.nodes[ref], self.round_no)
                   for ref in live}
        changed = 0
        for ref in live:
            sender = self.nodes[ref]
            contacts, vicinity = adverts[ref]
            for neigh in self.graph.neighbors(ref):
                if neigh in self.nodes:
                    # vicinity first: contact installs are gated on it
                    receiver = self.nodes[neigh]
                    changed += self.on_vicinity(receiver, sender, vicinity,
                                                self.round_no)
                    changed += self.on_advert(receiver, sender, contacts, now)
        for ref in live:
            changed += self.vicinity_sweep(self.nodes[ref], self.round_no)
        self.rounds_run += 1
        self.round_changes = changed

    @property
    def converged(self) -> bool:
        return self.rounds_run > 0 and self.round_changes == 0

    # -- forwarding ---------------------------------------------------------

    def _best_step(self, ref: NodeRef, dst_id: int) -> tuple[NodeRef, int] | None:
        """Greedy XOR-descent step over both tiers: the usable candidate whose
        identity is closest to dst among those strictly closer than this node;
        ties to the smaller target id, then smaller next-hop ref. Returns
        (next hop, pursued identity), or None when no progress exists."""
        node = self.nodes[ref]
        exact = node.vicinity.get(dst_id)
        if exact is not None and self.graph.link_usable(ref, exact.via):
            return exact.via, dst_id
        own = xor_distance(node.node_id, dst_id)
        best: tuple[int, int, int] | None = None
        for contact in node.table.contacts.values():
            d = xor_distance(contact.target, dst_id)
            if d >= own:
                continue
            if not self.graph.link_usable(ref, contact.next_hop):
                continue
            rank = (d, contact.target, contact.next_hop)
            if best is None or rank < best:
                best = rank
        for target, entry in node.vicinity.items():
            d = xor_distance(target, dst_id)
            if d >= own:
                continue
            if not self.graph.link_usable(ref, entry.via):
                continue
            rank = (d, target, entry.via)
            if best is None or rank < best:
                best = rank
        if best is None:
            return None
        return best[2], best[1]

    def next_hop(self, ref: NodeRef, dst_id: int) -> NodeRef | None:
        step = self._best_step(ref, dst_id)
        return None if step is None else step[0]

    def trace_route(self, src: NodeRef, dst_id: int, ttl: int = HOP_TTL) -> RouteResult:
        """Walk the greedy path over current state without consuming virtual
        time; returns the hop path and per-step progress for observability."""
        if src not in self.nodes or not self.graph.is_up(src):
            return RouteResult(False, [], DropReason.NODE_DOWN_MID_PATH)
        cur = src
        path: list[NodeRef] = []
        progress: list[int] = []
        while True:
            node = self.nodes.get(cur)
            if node is None or not self.graph.is_up(cur):
                return RouteResult(False, path, DropReason.NODE_DOWN_MID_PATH,
                                   progress)
            if node.node_id == dst_id:
                return RouteResult(True, path, None, progress)
            if ttl <= 0:
                return RouteResult(False, path, DropReason.TTL_EXCEEDED, progress)
            step = self._best_step(cur, dst_id)
            if step is None:
                return RouteResult(False, path, DropReason.NO_ROUTE, progress)
            ttl -= 1
            path.append(step[0])
            progress.append(xor_distance(step[1], dst_id))
            cur = step[0]

    # -- scheduled transport -------------------------------------------------

    def set_app_handler(self, fn: Callable[[NodeRef, ControlMessage], None]) -> None:
        self._app_handler = fn

    def send(self, src: NodeRef, msg: ControlMessage) -> bool:
        """Inject a message at src for hop-by-hop delivery with link latency.
        Returns False when the first step already has no route."""
        if src not in self.nodes or not self.graph.is_up(src):
            return False
        return self._forward(src, msg, [])

    def _forward(self, cur: NodeRef, msg: ControlMessage, path: list[NodeRef]) -> bool:
        node = self.nodes.get(cur)
        if node is None or not self.graph.is_up(cur):
            self._drop(msg, path, DropReason.NODE_DOWN_MID_PATH)
            return False
        if node.node_id == msg.dst:
            self._deliver(cur, msg, path)
            return True
        if msg.ttl <= 0:
            self._drop(msg, path, DropReason.TTL_EXCEEDED)
            return False
        nxt = self.next_hop(cur, msg.dst)
        if nxt is None:
            self._drop(msg, path, DropReason.NO_ROUTE)
            return False
        msg.ttl -= 1
        self._msg_seq += 1
        arrival = self.kernel.now + self.graph.latency_ms(cur, nxt)
        self.kernel.call_at(arrival, RANK_DELIVERY, (nxt, self._msg_seq),
                            lambda: self._forward(nxt, msg, path + [nxt]))
        return True

    def _deliver(self, ref: NodeRef, msg: ControlMessage, path: list[NodeRef]) -> None:
        self.kernel.log(
            "routing", "ROUTE",
            f"src={format_id(msg.src)} dst={format_id(msg.dst)} "
            f"hops={len(path)} path={'>'.join(str(p) for p in path) or '-'}")
        if msg.kind is MessageKind.APP and self._app_handler is not None:
            self._app_handler(ref, msg)

    def _drop(self, msg: ControlMessage, path: list[NodeRef], reason: DropReason) -> None:
        self.kernel.log(
            "routing", "DROP",
            f"reason={reason.value} dst={format_id(msg.dst)} "
            f"at={'>'.join(str(p) for p in path) or '-'}")
