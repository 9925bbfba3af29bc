"""Road network representation, DIMACS I/O, oracles, and workload generation.

Distances are integral travel-time units.  Unreachable pairs are reported as
``UNREACHABLE`` (``math.inf``), which compares greater than every finite
distance and absorbs addition, so query code can take minima without special
cases.  Python integers never overflow, so no width bookkeeping is needed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

UNREACHABLE = math.inf


class DimacsError(ValueError):
    """Malformed DIMACS input; carries the offending line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SplitMix64:
    """Seedable counter-based 64-bit generator (splitmix64).

    Used for all workload generation so that batches and query sets are
    reproducible from the seed alone, independent of interpreter version.
    """

    MASK = (1 << 64) - 1

    def __init__(self, seed):
        self._state = seed & self.MASK

    def next_u64(self):
        self._state = (self._state + 0x9E3779B97F4A7C15) & self.MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def randrange(self, n):
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self):
        return self.next_u64() / (1 << 64)

    def sample_indices(self, n, count):
        """`count` distinct indices from [0, n), order of first selection."""
        if count > n:
            raise ValueError("sample larger than population")
        chosen = []
        seen = set()
        while len(chosen) < count:
            i = self.randrange(n)
            if i not in seen:
                seen.add(i)
                chosen.append(i)
        return chosen

    def shuffle(self, items):
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]


class RoadNetwork:
    """Undirected weighted graph with mutable positive integer edge weights.

    Adjacency is a list of dicts mapping neighbor -> weight; symmetry is
    maintained by the mutators.  No self-loops, no parallel edges.
    """

    def __init__(self, n):
        self.n = n
        self.adj: list[dict[int, int]] = [dict() for _ in range(n)]
        self.m = 0
        # Original DIMACS vertex ids after dense remap (identity by default).
        self.original_ids = list(range(1, n + 1))

    def add_edge(self, u, v, w):
        """Insert edge or collapse onto the existing one with minimum weight."""
        if u == v:
            return
        if w < 1:
            raise ValueError(f"non-positive weight {w} on edge ({u},{v})")
        cur = self.adj[u].get(v)
        if cur is None:
            self.adj[u][v] = w
            self.adj[v][u] = w
            self.m += 1
        elif w < cur:
            self.adj[u][v] = w
            self.adj[v][u] = w

    def has_edge(self, u, v):
        return v in self.adj[u]

    def weight(self, u, v):
        return self.adj[u][v]

    def set_weight(self, u, v, w):
        if v not in self.adj[u]:
            raise KeyError(f"edge ({u},{v}) does not exist")
        if w < 1:
            raise ValueError(f"non-positive weight {w}")
        self.adj[u][v] = w
        self.adj[v][u] = w

    def edges(self):
        """Yield (u, v, w) with u < v in deterministic order."""
        for u in range(self.n):
            for v, w in self.adj[u].items():
                if u < v:
                    yield u, v, w

    def degree(self, u):
        return len(self.adj[u])

    def copy(self):
        g = RoadNetwork(self.n)
        g.adj = [dict(d) for d in self.adj]
        g.m = self.m
        g.original_ids = list(self.original_ids)
        return g


@dataclass(frozen=True)
class EdgeUpdate:
    u: int
    v: int
    new_weight: int

    def kind(self, old_weight):
        return "decrease" if self.new_weight < old_weight else "increase"


@dataclass
class UpdateBatch:
    updates: list[EdgeUpdate] = field(default_factory=list)
    batch_id: int = 0

    def __post_init__(self):
        seen = set()
        for upd in self.updates:
            key = (min(upd.u, upd.v), max(upd.u, upd.v))
            if key in seen:
                raise ValueError(f"duplicate edge {key} in batch")
            seen.add(key)

    def __len__(self):
        return len(self.updates)

    def __iter__(self):
        return iter(self.updates)


def load_dimacs(path) -> RoadNetwork:
    """Read a DIMACS `.gr` file into a RoadNetwork.

    Directed arc pairs collapse to one undirected edge with minimum weight.
    Vertex ids are remapped to dense 0-based indices in order of first
    appearance in the header range; the original ids are retained on the
    returned network for reporting.
    """
    net = None
    declared_n = 0
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            parts = line.split()
            if parts[0] == "p":
                if net is not None:
                    raise DimacsError("duplicate problem line", line_no)
                if len(parts) != 4 or parts[1] != "sp":
                    raise DimacsError(f"malformed header {line!r}", line_no)
                try:
                    declared_n = int(parts[2])
                    int(parts[3])
                except ValueError:
                    raise DimacsError(f"malformed header {line!r}", line_no) from None
                net = RoadNetwork(declared_n)
            elif parts[0] == "a":
                if net is None:
                    raise DimacsError("arc before problem line", line_no)
                if len(parts) != 4:
                    raise DimacsError(f"malformed arc {line!r}", line_no)
                try:
                    u, v, w = int(parts[1]), int(parts[2]), int(parts[3])
                except ValueError:
                    raise DimacsError(f"malformed arc {line!r}", line_no) from None
                if not (1 <= u <= declared_n and 1 <= v <= declared_n):
                    raise DimacsError(f"vertex out of range in {line!r}", line_no)
                if w <= 0:
                    raise DimacsError(f"non-positive weight in {line!r}", line_no)
                if u != v:
                    net.add_edge(u - 1, v - 1, w)
            else:
                raise DimacsError(f"unknown record {line!r}", line_no)
    if net is None:
        raise DimacsError("missing problem line", 0)
    return net


def save_dimacs(net, path):
    """Write the network back out as a DIMACS `.gr` file (both arc directions)."""
    with open(path, "w") as fh:
        fh.write(f"p sp {net.n} {2 * net.m}\n")
        for u, v, w in net.edges():
            fh.write(f"a {u + 1} {v + 1} {w}\n")
            fh.write(f"a {v + 1} {u + 1} {w}\n")


def dijkstra_sssp(net, s):
    """Exact single-source distances; UNREACHABLE for other components."""
    dist = [UNREACHABLE] * net.n
    dist[s] = 0
    heap = [(0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in net.adj[u].items():
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def bidijkstra(net, s, t):
    """Bidirectional Dijkstra; equals dijkstra_sssp(net, s)[t]."""
    if s == t:
        return 0
    adj = net.adj
    dist_f = {s: 0}
    dist_b = {t: 0}
    heap_f = [(0, s)]
    heap_b = [(0, t)]
    done_f = set()
    done_b = set()
    best = UNREACHABLE
    while heap_f and heap_b:
        if heap_f[0][0] + heap_b[0][0] >= best:
            break
        # Expand the side with the smaller frontier distance.
        if heap_f[0][0] <= heap_b[0][0]:
            heap, dist, done, other = heap_f, dist_f, done_f, dist_b
        else:
            heap, dist, done, other = heap_b, dist_b, done_b, dist_f
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        du_other = other.get(u)
        if du_other is not None and d + du_other < best:
            best = d + du_other
        for v, w in adj[u].items():
            nd = d + w
            if nd < dist.get(v, UNREACHABLE):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
                dv_other = other.get(v)
                if dv_other is not None and nd + dv_other < best:
                    best = nd + dv_other
    return best


def apply_updates(net, batch):
    """Apply a batch of weight updates in place, all-or-nothing.

    Returns one (u, v, old_weight, new_weight) tuple per update.  A missing
    edge rejects the whole batch before any weight is touched.
    """
    for upd in batch:
        if not net.has_edge(upd.u, upd.v):
            raise KeyError(f"edge ({upd.u},{upd.v}) does not exist")
    applied = []
    for upd in batch:
        old = net.weight(upd.u, upd.v)
        net.set_weight(upd.u, upd.v, upd.new_weight)
        applied.append((upd.u, upd.v, old, upd.new_weight))
    return applied


def generate_update_batch(net, volume, seed, batch_id=0):
    """Pick `volume` distinct edges and halve (rounded up) or double each.

    The coin flip is independent per edge; halving floors at weight 1.
    Deterministic for a fixed (net, volume, seed).
    """
    edge_list = list(net.edges())
    if volume > len(edge_list):
        raise ValueError(f"volume {volume} exceeds edge count {len(edge_list)}")
    rng = SplitMix64(seed)
    updates = []
    for idx in rng.sample_indices(len(edge_list), volume):
        u, v, w = edge_list[idx]
        if rng.randrange(2) == 0:
            new_w = max(1, (w + 1) // 2)
        else:
            new_w = 2 * w
        updates.append(EdgeUpdate(u, v, new_w))
    return UpdateBatch(updates, batch_id=batch_id)


def generate_query_workload(net, count, seed):
    """`count` uniformly random ordered (s, t) pairs, seeded."""
    rng = SplitMix64(seed)
    return [(rng.randrange(net.n), rng.randrange(net.n)) for _ in range(count)]


def random_network(n, extra_edges, seed, wmax=100):
    """Connected random network: a random spanning tree plus extra edges.

    Weights are uniform in [1, wmax].  Deterministic for fixed arguments.
    """
    rng = SplitMix64(seed)
    net = RoadNetwork(n)
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        u = order[i]
        v = order[rng.randrange(i)]
        net.add_edge(u, v, 1 + rng.randrange(wmax))
    added = 0
    attempts = 0
    while added < extra_edges and attempts < 20 * extra_edges + 100:
        attempts += 1
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u != v and not net.has_edge(u, v):
            net.add_edge(u, v, 1 + rng.randrange(wmax))
            added += 1
    return net


def grid_network(rows, cols, seed, wmax=100):
    """rows x cols grid with random weights (vertex r*cols+c)."""
    rng = SplitMix64(seed)
    net = RoadNetwork(rows * cols)
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                net.add_edge(v, v + 1, 1 + rng.randrange(wmax))
            if r + 1 < rows:
                net.add_edge(v, v + cols, 1 + rng.randrange(wmax))
    return net


def read_update_batch(path, batch_id=0):
    """Update-batch file: `<u> <v> <new_weight>` per line, `#` comments."""
    updates = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            u, v, w = (int(x) for x in line.split())
            updates.append(EdgeUpdate(u, v, w))
    return UpdateBatch(updates, batch_id=batch_id)


def read_query_workload(path):
    """Query file: `<s> <t>` per line, `#` comments."""
    pairs = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            s, t = (int(x) for x in line.split())
            pairs.append((s, t))
    return pairs
