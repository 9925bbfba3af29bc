"""Minimum-degree-elimination tree decomposition with shortcut arrays and LCA.

One decomposition underlies the CH, H2H, and multi-stage indexes: each vertex
owns a tree node whose bag is the vertex plus its neighbors at contraction
time, and whose shortcut array preserves pairwise shortest distances among
those neighbors.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass, field

from .graphs import UNREACHABLE, dijkstra_sssp


@dataclass
class VertexOrder:
    """Bijective contraction order: rank[v] in [0, n), low rank contracts first."""

    rank: list[int]

    def __post_init__(self):
        n = len(self.rank)
        inv = [-1] * n
        for v, r in enumerate(self.rank):
            if not (0 <= r < n) or inv[r] != -1:
                raise ValueError("rank is not a bijection over the vertex set")
            inv[r] = v
        self.inverse = inv

    @property
    def n(self):
        return len(self.rank)


class TreeNode:
    """Per-vertex node of the decomposition.

    neigh is the bag minus the vertex itself, sorted by ascending rank, so
    neigh[0] is the parent.  sc aligns with neigh.  anc is the root-to-parent
    ancestor vertex list; pos maps each neigh entry to its depth in anc.
    dis / disB are filled by the index layers, not here.
    """

    __slots__ = ("v", "neigh", "sc", "parent", "children", "anc", "pos",
                 "dis", "disB", "depth", "comp")

    def __init__(self, v):
        self.v = v
        self.neigh: list[int] = []
        self.sc: list[int] = []
        self.parent: int | None = None
        self.children: list[int] = []
        self.anc: list[int] = []
        self.pos: list[int] = []
        self.dis: list = []
        self.disB: list = []
        self.depth = 0
        self.comp = 0


class TreeDecomposition:
    """Rooted decomposition (one root per connected component) with O(1) LCA."""

    def __init__(self, n):
        self.n = n
        self.nodes = [TreeNode(v) for v in range(n)]
        self.roots: list[int] = []
        self.order: VertexOrder | None = None
        self.height = 0
        self.width = 0
        self._euler = []
        self._first = []
        self._sparse = []

    def topdown(self, start=None):
        """Yield vertices in top-down (parent before child) order.

        With `start`, yields only the subtree rooted at that vertex.
        """
        stack = list(reversed(self.roots)) if start is None else [start]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(self.nodes[v].children))

    def build_lca(self):
        """Euler tour + sparse table; components get disjoint tours."""
        euler = []
        first = [-1] * self.n
        for root in self.roots:
            stack = [(root, iter(self.nodes[root].children))]
            first[root] = len(euler)
            euler.append(root)
            while stack:
                v, it = stack[-1]
                child = next(it, None)
                if child is None:
                    stack.pop()
                    if stack:
                        euler.append(stack[-1][0])
                    continue
                first[child] = len(euler)
                euler.append(child)
                stack.append((child, iter(self.nodes[child].children)))
        self._euler = euler
        self._first = first
        depth = [self.nodes[v].depth for v in euler]
        size = len(euler)
        levels = [list(range(size))]
        arr = [depth]
        j = 1
        while (1 << j) <= size:
            prev_idx, prev_d = levels[-1], arr[-1]
            half = 1 << (j - 1)
            idx_row = []
            d_row = []
            for i in range(size - (1 << j) + 1):
                if prev_d[i] <= prev_d[i + half]:
                    idx_row.append(prev_idx[i])
                    d_row.append(prev_d[i])
                else:
                    idx_row.append(prev_idx[i + half])
                    d_row.append(prev_d[i + half])
            levels.append(idx_row)
            arr.append(d_row)
            j += 1
        self._sparse = (levels, arr, depth)

    def lca(self, u, v):
        """Lowest common ancestor vertex, or None across components."""
        if self.nodes[u].comp != self.nodes[v].comp:
            return None
        if u == v:
            return u
        levels, _, depth = self._sparse
        i, j = self._first[u], self._first[v]
        if i > j:
            i, j = j, i
        k = (j - i + 1).bit_length() - 1
        a = levels[k][i]
        b = levels[k][j - (1 << k) + 1]
        best = a if depth[a] <= depth[b] else b
        return self._euler[best]

    def is_ancestor(self, a, v):
        """True if a is v or a proper ancestor of v (same component)."""
        if a == v:
            return True
        na, nv = self.nodes[a], self.nodes[v]
        return na.comp == nv.comp and na.depth < nv.depth and nv.anc[na.depth] == a


def mde_decompose(net, pinned_order=None):
    """Contract all vertices, producing the decomposition and its order.

    Without a pinned order, the minimum-degree heuristic picks the next vertex
    (degree on the current contracted graph, ties broken by smallest id).
    Each contraction inserts/relaxes all-pair shortcuts among the remaining
    neighbors so shortest distances are preserved.
    """
    n = net.n
    work = [dict(d) for d in net.adj]
    removed = [False] * n
    if pinned_order is not None:
        if pinned_order.n != n:
            raise ValueError("pinned order size mismatch")
        contract_seq = pinned_order.inverse
        heap = None
    else:
        contract_seq = None
        heap = [(len(work[v]), v) for v in range(n)]
        heapq.heapify(heap)

    bags: list[dict[int, int]] = [dict() for _ in range(n)]
    rank = [-1] * n
    for i in range(n):
        if contract_seq is not None:
            v = contract_seq[i]
        else:
            while True:
                d, v = heapq.heappop(heap)
                if not removed[v] and d == len(work[v]):
                    break
        rank[v] = i
        removed[v] = True
        nbrs = work[v]
        bags[v] = dict(nbrs)
        items = list(nbrs.items())
        for a in range(len(items)):
            x, wx = items[a]
            del work[x][v]
            for b in range(a + 1, len(items)):
                y, wy = items[b]
                w = wx + wy
                cur = work[x].get(y)
                if cur is None or w < cur:
                    work[x][y] = w
                    work[y][x] = w
                    if heap is not None and cur is None:
                        heapq.heappush(heap, (len(work[x]), x))
                        heapq.heappush(heap, (len(work[y]), y))
        if heap is not None:
            for x, _ in items:
                heapq.heappush(heap, (len(work[x]), x))
        work[v] = {}

    order = VertexOrder(rank)
    tree = TreeDecomposition(n)
    tree.order = order
    for v in range(n):
        node = tree.nodes[v]
        pairs = sorted(bags[v].items(), key=lambda kv: rank[kv[0]])
        node.neigh = [x for x, _ in pairs]
        node.sc = [w for _, w in pairs]
        if node.neigh:
            node.parent = node.neigh[0]
        else:
            tree.roots.append(v)
    for v in range(n):
        p = tree.nodes[v].parent
        if p is not None:
            tree.nodes[p].children.append(v)
    for v in range(n):
        tree.nodes[v].children.sort(key=lambda c: rank[c])

    # Ancestor lists, depths, positions, per-component ids, top-down.
    depth_of = [0] * n
    for comp_id, root in enumerate(tree.roots):
        for v in tree.topdown(root):
            node = tree.nodes[v]
            node.comp = comp_id
            if node.parent is None:
                node.anc = []
            else:
                pnode = tree.nodes[node.parent]
                node.anc = pnode.anc + [node.parent]
            node.depth = len(node.anc)
            depth_of[v] = node.depth
            node.pos = [depth_of[x] for x in node.neigh]
    tree.height = max((tree.nodes[v].depth + 1 for v in range(n)), default=0)
    tree.width = max((len(tree.nodes[v].neigh) for v in range(n)), default=0)
    tree.build_lca()
    return tree, order


def validate_decomposition(net, tree):
    """Check the decomposition properties; returns a list of violations.

    Checks bag cover, edge cover, connected occurrence subtrees, and shortcut
    soundness (sc(v,u) >= d(v,u), equality when the contraction preserves the
    pair's shortest path).  Intended for small graphs; distance soundness runs
    one Dijkstra per vertex.
    """
    violations = []
    n = net.n
    if tree.n != n:
        return [f"vertex count mismatch: tree has {tree.n}, graph has {n}"]
    # (2) every edge lies in some bag: elimination puts (u,v) in the bag of
    # whichever endpoint was contracted first.
    rank = tree.order.rank
    for u, v, _ in net.edges():
        low, high = (u, v) if rank[u] < rank[v] else (v, u)
        if high not in tree.nodes[low].neigh:
            violations.append(f"edge ({u},{v}) not covered by any bag")
    # (3) occurrences of each vertex induce a subtree: if u sits in v's bag,
    # it must sit in v's parent's bag unless the parent is u itself.
    for v in range(n):
        node = tree.nodes[v]
        for u in node.neigh:
            p = node.parent
            if p is None:
                violations.append(f"vertex {u} occurs in root bag of {v}")
            elif p != u and u not in tree.nodes[p].neigh:
                violations.append(
                    f"occurrences of {u} disconnected at node {v} (parent {p})")
    # Shortcut soundness against the graph distances.
    for v in range(n):
        node = tree.nodes[v]
        if not node.neigh:
            continue
        dist = dijkstra_sssp(net, v)
        for u, w in zip(node.neigh, node.sc):
            if dist[u] is UNREACHABLE or w < dist[u]:
                violations.append(
                    f"shortcut sc({v},{u})={w} undercuts distance {dist[u]}")
    return violations


_SNAP_MAGIC = b"TDSNAP01"


def save_snapshot(tree, path):
    """Binary snapshot of (order, parent, bags, shortcut arrays).

    Fixed-width little-endian records: magic, u32 n, n*u32 rank, then per
    vertex a u32 bag size followed by (u32 neighbor, u64 weight) pairs.
    """
    with open(path, "wb") as fh:
        fh.write(_SNAP_MAGIC)
        fh.write(struct.pack("<I", tree.n))
        fh.write(struct.pack(f"<{tree.n}I", *tree.order.rank))
        for v in range(tree.n):
            node = tree.nodes[v]
            fh.write(struct.pack("<I", len(node.neigh)))
            for u, w in zip(node.neigh, node.sc):
                fh.write(struct.pack("<IQ", u, w))


def load_snapshot(path):
    """Rebuild a TreeDecomposition from a snapshot written by save_snapshot."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_SNAP_MAGIC))
        if magic != _SNAP_MAGIC:
            raise ValueError("bad snapshot header")
        (n,) = struct.unpack("<I", fh.read(4))
        rank = list(struct.unpack(f"<{n}I", fh.read(4 * n)))
        tree = TreeDecomposition(n)
        tree.order = VertexOrder(rank)
        for v in range(n):
            (k,) = struct.unpack("<I", fh.read(4))
            node = tree.nodes[v]
            for _ in range(k):
                u, w = struct.unpack("<IQ", fh.read(12))
                node.neigh.append(u)
                node.sc.append(w)
            if node.neigh:
                node.parent = node.neigh[0]
            else:
                tree.roots.append(v)
    for v in range(n):
        p = tree.nodes[v].parent
        if p is not None:
            tree.nodes[p].children.append(v)
    for v in range(n):
        tree.nodes[v].children.sort(key=lambda c: rank[c])
    depth_of = [0] * n
    for comp_id, root in enumerate(tree.roots):
        for v in tree.topdown(root):
            node = tree.nodes[v]
            node.comp = comp_id
            if node.parent is not None:
                pnode = tree.nodes[node.parent]
                node.anc = pnode.anc + [node.parent]
            node.depth = len(node.anc)
            depth_of[v] = node.depth
            node.pos = [depth_of[x] for x in node.neigh]
    tree.height = max((tree.nodes[v].depth + 1 for v in range(n)), default=0)
    tree.width = max((len(tree.nodes[v].neigh) for v in range(n)), default=0)
    tree.build_lca()
    return tree
