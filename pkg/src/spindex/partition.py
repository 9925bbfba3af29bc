"""Graph partitioning, boundary bookkeeping, and boundary-first ordering.

Two partitioners live here: a seeded region-growing heuristic for the
planar partitioned indexes, and the tree-decomposition partitioner that
derives partitions from elimination subtrees (used by the amalgamated
index).  Both emit explicit boundary sets so that orders and overlays can
be built deterministically.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

from .graphs import RoadNetwork, SplitMix64
from .treedec import VertexOrder


@dataclass
class Partitioning:
    k: int
    part: list[int]                      # vertex -> partition id
    parts: list[list[int]] = field(default_factory=list)
    boundary: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.parts:
            self.parts = [[] for _ in range(self.k)]
            for v, p in enumerate(self.part):
                self.parts[p].append(v)

    @property
    def all_boundary(self):
        out = set()
        for b in self.boundary:
            out.update(b)
        return out

    def is_boundary(self, v):
        return v in self._bset

    def finalize(self, net):
        """Compute boundary sets from the assignment."""
        self.boundary = [[] for _ in range(self.k)]
        self._bset = set()
        for v in range(net.n):
            pv = self.part[v]
            if any(self.part[u] != pv for u in net.adj[v]):
                self.boundary[pv].append(v)
                self._bset.add(v)
        return self

    def inter_edges(self, net):
        return [(u, v, w) for u, v, w in net.edges() if self.part[u] != self.part[v]]

    def intra_edges(self, net, i):
        return [(u, v, w) for u, v, w in net.edges()
                if self.part[u] == i and self.part[v] == i]

    def cut_size(self, net):
        return sum(1 for u, v, _ in net.edges() if self.part[u] != self.part[v])

    def subgraph(self, net, i):
        """Partition subgraph over the full vertex id space (intra edges only)."""
        g = RoadNetwork(net.n)
        for u, v, w in self.intra_edges(net, i):
            g.add_edge(u, v, w)
        return g


def partition_graph(net, k, seed):
    """Seeded region growing into k balanced parts with a smoothing pass.

    Seeds come from a farthest-point heuristic; regions accrete by BFS, the
    currently smallest region expanding first.  A final pass moves boundary
    vertices to a neighboring region when that strictly reduces the cut and
    keeps sizes within +/-25% of n/k.
    """
    n = net.n
    if not (1 <= k <= n):
        raise ValueError(f"partition count {k} out of range [1, {n}]")
    rng = SplitMix64(seed)
    if k == n:
        return Partitioning(k, list(range(n))).finalize(net)

    seeds = [rng.randrange(n)]
    hop = _multi_bfs_hops(net, seeds)
    while len(seeds) < k:
        far = max(range(n), key=lambda v: (hop[v] if hop[v] >= 0 else n + 1, -v))
        seeds.append(far)
        _multi_bfs_hops(net, [far], hop)

    part = [-1] * n
    frontiers = [deque([s]) for s in seeds]
    sizes = [0] * k
    heap = [(0, i) for i in range(k)]
    heapq.heapify(heap)
    assigned = 0
    next_unassigned = 0
    while assigned < n:
        while heap:
            size, i = heapq.heappop(heap)
            if size == sizes[i] and frontiers[i]:
                break
        else:
            # Remaining vertices are unreachable from every frontier (other
            # components); restart the smallest region there.
            while part[next_unassigned] != -1:
                next_unassigned += 1
            i = min(range(k), key=lambda j: (sizes[j], j))
            frontiers[i].append(next_unassigned)
            heap = [(sizes[j], j) for j in range(k)]
            heapq.heapify(heap)
            continue
        grew = False
        while frontiers[i]:
            v = frontiers[i].popleft()
            if part[v] == -1:
                part[v] = i
                sizes[i] += 1
                assigned += 1
                for u in net.adj[v]:
                    if part[u] == -1:
                        frontiers[i].append(u)
                grew = True
                break
        if frontiers[i] or not grew:
            heapq.heappush(heap, (sizes[i], i))
        else:
            heapq.heappush(heap, (sizes[i], i))

    _rebalance(net, part, sizes, k)
    _smooth(net, part, sizes, k)
    return Partitioning(k, part).finalize(net)


def _rebalance(net, part, sizes, k):
    """Feed undersized regions from larger adjacent ones.

    BFS growth can wall a region in before it reaches the balance floor; this
    pass moves cut vertices from the larger side until every region holds at
    least 75% of n/k (or no admissible move remains).
    """
    n = net.n
    lo = max(1, int(0.75 * n / k))
    for _ in range(n):
        small = [i for i in range(k) if sizes[i] < lo]
        if not small:
            break
        moved = False
        for i in small:
            best = None
            for v in range(n):
                if part[v] != i:
                    continue
                for u in net.adj[v]:
                    j = part[u]
                    if j != i and sizes[j] - 1 > max(lo, sizes[i]):
                        if best is None or sizes[j] > sizes[part[best]]:
                            best = u
            if best is not None:
                sizes[part[best]] -= 1
                part[best] = i
                sizes[i] += 1
                moved = True
        if not moved:
            break


def _multi_bfs_hops(net, sources, hop=None):
    if hop is None:
        hop = [-1] * net.n
    dq = deque()
    for s in sources:
        hop[s] = 0
        dq.append(s)
    while dq:
        v = dq.popleft()
        for u in net.adj[v]:
            if hop[u] == -1 or hop[u] > hop[v] + 1:
                hop[u] = hop[v] + 1
                dq.append(u)
    return hop


def _smooth(net, part, sizes, k):
    n = net.n
    lo = max(1, int(0.75 * n / k))
    hi = max(1, int(1.25 * n / k) + 1)
    for v in range(n):
        pv = part[v]
        neigh_parts = {}
        for u in net.adj[v]:
            neigh_parts[part[u]] = neigh_parts.get(part[u], 0) + 1
        if len(neigh_parts) <= 1:
            continue
        own = neigh_parts.get(pv, 0)
        best = max(sorted(neigh_parts), key=lambda p: neigh_parts[p])
        if best != pv and neigh_parts[best] > own:
            if sizes[pv] - 1 >= lo and sizes[best] + 1 <= hi:
                part[v] = best
                sizes[pv] -= 1
                sizes[best] += 1


def contract_min_degree(work, targets):
    """Contract `targets` out of the working graph by minimum current degree.

    `work` is a dict-of-dicts adjacency mutated in place; pairwise shortcuts
    among each contracted vertex's remaining neighbors are inserted with
    minimum-weight collapse.  Ties break on smallest vertex id.  Returns the
    contraction sequence.
    """
    targets = set(targets)
    heap = [(len(work[v]), v) for v in targets]
    heapq.heapify(heap)
    seq = []
    while heap:
        d, v = heapq.heappop(heap)
        if v not in targets or d != len(work[v]):
            continue
        targets.discard(v)
        seq.append(v)
        items = list(work[v].items())
        for x, _ in items:
            del work[x][v]
        for a in range(len(items)):
            x, wx = items[a]
            for b in range(a + 1, len(items)):
                y, wy = items[b]
                w = wx + wy
                cur = work[x].get(y)
                if cur is None or w < cur:
                    work[x][y] = w
                    work[y][x] = w
        del work[v]
        for x, _ in items:
            if x in targets:
                heapq.heappush(heap, (len(work[x]), x))
    return seq


def boundary_first_order(net, partitioning, interleave="block"):
    """Vertex order placing every boundary vertex above every interior.

    Interiors of each partition are ordered by minimum-degree elimination
    within their partition subgraph; the boundary vertices are then ordered
    by elimination on the overlay graph left after contracting all interiors
    of the full network.  `interleave` picks one of the equivalent ways of
    merging the interior sequences ("block" or "roundrobin"); all choices
    yield the same canonical labels.
    """
    n = net.n
    bset = partitioning.all_boundary
    interior_seqs = []
    for i in range(partitioning.k):
        sub = {v: dict() for v in partitioning.parts[i]}
        for u, v, w in partitioning.intra_edges(net, i):
            sub[u][v] = w
            sub[v][u] = w
        interiors = [v for v in partitioning.parts[i] if v not in bset]
        interior_seqs.append(contract_min_degree(sub, interiors))

    work = {v: dict(net.adj[v]) for v in range(n)}
    all_interiors = [v for v in range(n) if v not in bset]
    # Contracting interiors of the whole network leaves the overlay graph.
    contract_min_degree(work, all_interiors)
    boundary_seq = contract_min_degree(work, list(bset))

    if interleave == "block":
        merged = [v for seq in interior_seqs for v in seq]
    elif interleave == "roundrobin":
        merged = []
        idx = 0
        while any(idx < len(seq) for seq in interior_seqs):
            for seq in interior_seqs:
                if idx < len(seq):
                    merged.append(seq[idx])
            idx += 1
    else:
        raise ValueError(f"unknown interleave {interleave!r}")
    merged.extend(boundary_seq)
    # Vertices skipped by restricted contraction (isolated leftovers) go first.
    seen = set(merged)
    leftovers = [v for v in range(n) if v not in seen]
    full = leftovers + merged
    rank = [0] * n
    for r, v in enumerate(full):
        rank[v] = r
    return VertexOrder(rank)


def classify_updates(partitioning, batch):
    """Split a batch into per-partition intra updates and inter updates."""
    intra = {}
    inter = []
    for upd in batch:
        pu, pv = partitioning.part[upd.u], partitioning.part[upd.v]
        if pu == pv:
            intra.setdefault(pu, []).append(upd)
        else:
            inter.append(upd)
    return intra, inter


OVERLAY = -1


@dataclass
class TDPartitionResult:
    roots: list[int]
    part: list[int]                       # vertex -> partition id, OVERLAY if none
    parts: list[list[int]]
    boundary: list[list[int]]             # per partition: root's bag, rank order
    overlay: list[int]
    tau: int
    k_e: int
    beta_l: float
    beta_u: float
    cN: list[int]

    @property
    def k(self):
        return len(self.roots)


def td_partition(tree, tau, k_e, beta_l, beta_u):
    """Derive partitions from elimination subtrees.

    Roots are chosen greedily in decreasing rank from the candidates whose
    bag is at most `tau` wide and whose descendant count lies in
    [beta_l*n/k_e, beta_u*n/k_e]; a candidate is skipped when an admitted
    root is its ancestor.  Each root's subtree becomes a partition with the
    root's bag as its boundary; every other vertex joins the overlay.
    """
    n = tree.n
    nodes = tree.nodes
    cN = [1] * n
    for v in reversed(list(tree.topdown())):
        p = nodes[v].parent
        if p is not None:
            cN[p] += cN[v]

    lo = beta_l * n / k_e
    hi = beta_u * n / k_e
    candidates = [v for v in reversed(tree.order.inverse)
                  if lo <= cN[v] <= hi and len(nodes[v].neigh) <= tau]
    if not candidates:
        raise ValueError(
            f"no partition root satisfies bag width <= {tau} and size in "
            f"[{lo:.1f}, {hi:.1f}]; loosen tau or the size bounds")

    roots = []
    for v in candidates:
        if not any(tree.is_ancestor(u, v) for u in roots):
            roots.append(v)

    part = [OVERLAY] * n
    parts = []
    boundary = []
    for i, u in enumerate(roots):
        members = list(tree.topdown(u))
        for v in members:
            part[v] = i
        parts.append(members)
        boundary.append(list(nodes[u].neigh))
    overlay = [v for v in range(n) if part[v] == OVERLAY]
    return TDPartitionResult(roots, part, parts, boundary, overlay,
                             tau, k_e, beta_l, beta_u, cN)


def write_partition_file(partitioning, net, path):
    """Partition file: metadata header then `<vertex> <partition_id>` lines."""
    with open(path, "w") as fh:
        fh.write(f"# k={partitioning.k} cut={partitioning.cut_size(net)} "
                 f"boundary={len(partitioning.all_boundary)}\n")
        for v, p in enumerate(partitioning.part):
            fh.write(f"{v} {p}\n")


def read_partition_file(path, net):
    part = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            v, p = (int(x) for x in line.split())
            part[v] = p
    assignment = [part[v] for v in range(net.n)]
    k = max(assignment) + 1
    return Partitioning(k, assignment).finalize(net)
