"""CH, H2H, and the multi-stage index built on one tree decomposition.

The stage marker tells queries which machinery is currently trustworthy:
EDGES (search the graph directly), SHORTCUTS (upward search over shortcut
arrays), LABELS (2-hop evaluation over distance arrays).  Maintenance moves
the marker forward; a batch of weight changes resets it to EDGES and the
shortcut / label update passes restore it step by step.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .graphs import UNREACHABLE, bidijkstra, dijkstra_sssp
from .treedec import mde_decompose

STAGE_EDGES = 0
STAGE_SHORTCUTS = 1
STAGE_LABELS = 2


class StageError(RuntimeError):
    pass


@dataclass
class AffectedSet:
    """Vertices whose shortcut or label entries changed during maintenance."""

    changed: set = field(default_factory=set)
    roots: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.changed)


class MHLIndex:
    """Tree decomposition with shortcut and distance arrays plus a stage marker."""

    def __init__(self, net, pinned_order=None):
        self.graph = net
        self.tree, self.order = mde_decompose(net, pinned_order)
        self.stage = STAGE_SHORTCUTS
        # Supporter lists: sup[u] holds vertices x (all lower rank) whose bag
        # contains u; bag_index[x] maps bag member -> slot in x's arrays.
        self.sup = [[] for _ in range(net.n)]
        self.bag_index = [None] * net.n
        for x in range(net.n):
            node = self.tree.nodes[x]
            self.bag_index[x] = {u: k for k, u in enumerate(node.neigh)}
            for u in node.neigh:
                self.sup[u].append(x)

    # -- queries ---------------------------------------------------------

    def ch_query(self, s, t):
        """Bidirectional upward search over the shortcut arrays."""
        if self.stage < STAGE_SHORTCUTS:
            raise StageError("shortcut arrays not ready")
        if s == t:
            return 0
        nodes = self.tree.nodes
        dist_f = {s: 0}
        dist_b = {t: 0}
        heap_f = [(0, s)]
        heap_b = [(0, t)]
        best = UNREACHABLE
        while heap_f or heap_b:
            if heap_f and (not heap_b or heap_f[0][0] <= heap_b[0][0]):
                heap, dist, other = heap_f, dist_f, dist_b
            else:
                heap, dist, other = heap_b, dist_b, dist_f
            d, u = heapq.heappop(heap)
            if d > dist.get(u, UNREACHABLE) or d >= best:
                continue
            du_other = other.get(u)
            if du_other is not None and d + du_other < best:
                best = d + du_other
            node = nodes[u]
            for v, w in zip(node.neigh, node.sc):
                nd = d + w
                if nd < dist.get(v, UNREACHABLE):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return best

    def h2h_query(self, s, t):
        """2-hop evaluation pivoting on the LCA's position array."""
        if self.stage < STAGE_LABELS:
            raise StageError("distance arrays not ready")
        if s == t:
            return 0
        tree = self.tree
        x = tree.lca(s, t)
        if x is None:
            return UNREACHABLE
        xn = tree.nodes[x]
        ds = tree.nodes[s].dis
        dt = tree.nodes[t].dis
        # The separator is the LCA's bag plus the LCA vertex itself.
        best = ds[xn.depth] + dt[xn.depth]
        for i in xn.pos:
            d = ds[i] + dt[i]
            if d < best:
                best = d
        return best

    def query(self, s, t):
        """Dispatch on the published stage; always exact for the current graph."""
        if self.stage >= STAGE_LABELS:
            return self.h2h_query(s, t)
        if self.stage >= STAGE_SHORTCUTS:
            return self.ch_query(s, t)
        return bidijkstra(self.graph, s, t)

    # -- construction ----------------------------------------------------

    def build_labels(self):
        """Top-down dynamic program filling the distance arrays."""
        if self.stage < STAGE_SHORTCUTS:
            raise StageError("shortcut arrays not ready")
        nodes = self.tree.nodes
        for v in self.tree.topdown():
            nodes[v].dis = self._compute_dis(v)
        self.stage = STAGE_LABELS

    def _compute_dis(self, v):
        node = self.tree.nodes[v]
        nodes = self.tree.nodes
        depth = node.depth
        dis = [UNREACHABLE] * (depth + 1)
        dis[depth] = 0
        anc = node.anc
        for j in range(depth):
            c = anc[j]
            best = UNREACHABLE
            cdis = nodes[c].dis
            for k, u in enumerate(node.neigh):
                p = node.pos[k]
                if p == j:
                    cand = node.sc[k]
                elif p > j:
                    cand = node.sc[k] + nodes[u].dis[j]
                else:
                    cand = node.sc[k] + cdis[p]
                if cand < best:
                    best = cand
            dis[j] = best
        return dis

    # -- maintenance -----------------------------------------------------

    def invalidate(self):
        """Mark the whole index stale after raw edge changes (stage EDGES)."""
        self.stage = STAGE_EDGES

    def update_shortcuts(self, changes):
        """Bottom-up shortcut repair after the graph edges were rewritten.

        `changes` is the (u, v, old, new) list from apply_updates.  Each dirty
        bag is recomputed from its surviving edge plus all two-leg supporter
        paths; changed entries propagate to the bags that consume them.
        Returns the affected set with its highest tree nodes.
        """
        rank = self.order.rank
        nodes = self.tree.nodes
        net = self.graph
        dirty = []
        queued = set()

        def mark(v):
            if v not in queued:
                queued.add(v)
                heapq.heappush(dirty, (rank[v], v))

        for u, v, old, new in changes:
            if old != new:
                mark(u if rank[u] < rank[v] else v)

        changed = set()
        while dirty:
            _, v = heapq.heappop(dirty)
            queued.discard(v)
            node = nodes[v]
            any_change = False
            changed_slots = []
            for k, u in enumerate(node.neigh):
                base = net.adj[v].get(u, UNREACHABLE)
                for x in self.sup[v]:
                    xi = self.bag_index[x]
                    ku = xi.get(u)
                    if ku is None:
                        continue
                    xnode = nodes[x]
                    cand = xnode.sc[xi[v]] + xnode.sc[ku]
                    if cand < base:
                        base = cand
                if base != node.sc[k]:
                    node.sc[k] = base
                    any_change = True
                    changed_slots.append(u)
            if any_change:
                changed.add(v)
                for u in changed_slots:
                    for y in node.neigh:
                        if y != u:
                            mark(u if rank[u] < rank[y] else y)

        self.stage = max(self.stage, STAGE_SHORTCUTS)
        return AffectedSet(changed=changed, roots=self._branch_roots(changed))

    def _branch_roots(self, changed):
        """Members of `changed` with no proper ancestor in `changed`."""
        roots = []
        nodes = self.tree.nodes
        for v in changed:
            if not any(a in changed for a in nodes[v].anc):
                roots.append(v)
        roots.sort(key=lambda v: nodes[v].depth)
        return roots

    def update_labels(self, affected):
        """Top-down label repair restricted to the affected subtrees.

        Descends only where an ancestor's distance array changed or the
        subtree still contains a vertex with changed shortcuts.  Returns the
        set of vertices whose distance arrays changed (V_A).
        """
        if self.stage < STAGE_SHORTCUTS:
            raise StageError("run update_shortcuts first")
        nodes = self.tree.nodes
        # Vertices whose subtree (incl. self) holds a shortcut change.
        sc_below = set()
        for v in affected.changed:
            while v is not None and v not in sc_below:
                sc_below.add(v)
                v = nodes[v].parent
        touched = set()
        for root in affected.roots:
            stack = [(root, False)]
            while stack:
                v, anc_changed = stack.pop()
                node = nodes[v]
                recompute = anc_changed or v in sc_below
                dis_changed = False
                if recompute:
                    new_dis = self._compute_dis(v)
                    if new_dis != node.dis:
                        node.dis = new_dis
                        dis_changed = True
                        touched.add(v)
                for c in node.children:
                    if anc_changed or dis_changed or c in sc_below:
                        stack.append((c, anc_changed or dis_changed))
        self.stage = STAGE_LABELS
        return AffectedSet(changed=touched, roots=self._branch_roots(touched))


def build_mhl(net, pinned_order=None, with_labels=True):
    idx = MHLIndex(net, pinned_order)
    if with_labels:
        idx.build_labels()
    return idx


def canonicalize(idx):
    """Minimal hub sets for the index's order, by brute force over distances.

    A hub u is kept for v only if no higher-rank vertex sits on a shortest
    path between them.  Intended for verification on small graphs (one
    Dijkstra per vertex).
    """
    if idx.stage < STAGE_LABELS:
        raise StageError("labels not ready")
    net = idx.graph
    rank = idx.order.rank
    n = net.n
    dist = [dijkstra_sssp(net, v) for v in range(n)]
    by_rank = idx.order.inverse  # ascending rank
    labels = {}
    for v in range(n):
        hubs = {}
        dv = dist[v]
        for u in range(n):
            if rank[u] < rank[v] or dv[u] is UNREACHABLE or dv[u] == UNREACHABLE:
                continue
            d = dv[u]
            pruned = False
            for c in by_rank[rank[u] + 1:]:
                if dv[c] + dist[c][u] == d:
                    pruned = True
                    break
            if not pruned:
                hubs[u] = d
        labels[v] = hubs
    return labels
