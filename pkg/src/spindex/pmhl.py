"""Partitioned multi-stage index: per-partition labels, overlay, corrected
partitions, and an aggregated global tree, maintained in five staged passes.

Query capability advances through five published stages while a batch is
being absorbed:

  Q1  graph search only (edges just rewritten)
  Q2  upward search over the union of partition and overlay shortcut arrays
  Q3  partition + overlay label concatenation
  Q4  corrected partition labels for same-partition pairs
  Q5  aggregated-tree 2-hop evaluation for cross-partition pairs

The overlay graph is derived from the shortcuts formed while contracting
partition interiors (not from quadratically many label probes), so its edge
weights are a pure function of the partition shortcut arrays plus the
original inter-partition edges.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

from .graphs import RoadNetwork, UNREACHABLE, apply_updates, bidijkstra
from .hierarchy import MHLIndex, AffectedSet
from .partition import Partitioning, boundary_first_order, classify_updates, partition_graph
from .parallel import run_tasks


@dataclass
class StageRecord:
    """Per-batch maintenance telemetry: durations and touched-entry counts."""

    batch_id: int
    durations: dict = field(default_factory=dict)
    touched: dict = field(default_factory=dict)
    publish_offsets: dict = field(default_factory=dict)

    def as_dict(self):
        return {"batch_id": self.batch_id, "durations": self.durations,
                "touched": self.touched, "publish_offsets": self.publish_offsets}


class CrossTree:
    """Aggregated tree over the overlay and partition trees.

    Boundary vertices keep live views onto the overlay index's distance and
    position arrays; interior vertices own their arrays.  The LCA of any
    cross-partition pair is a boundary vertex, so queries always pivot on an
    inherited position array.
    """

    def __init__(self, n):
        self.n = n
        self.parent = [None] * n
        self.children = [[] for _ in range(n)]
        self.anc = [[] for _ in range(n)]
        self.depth = [0] * n
        self.comp = [0] * n
        self.roots = []
        self.own_dis = [None] * n      # interiors only
        self.pos = [None] * n
        self.is_overlay = [False] * n
        self._overlay_nodes = None     # set to Lt.tree.nodes
        self._euler = []
        self._first = []
        self._sparse = None

    def dis_of(self, v):
        if self.is_overlay[v]:
            return self._overlay_nodes[v].dis
        return self.own_dis[v]

    def topdown(self, start=None):
        stack = list(reversed(self.roots)) if start is None else [start]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(self.children[v]))

    def build_lca(self):
        euler = []
        first = [-1] * self.n
        for root in self.roots:
            stack = [(root, iter(self.children[root]))]
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
                stack.append((child, iter(self.children[child])))
        self._euler = euler
        self._first = first
        depth = [self.depth[v] for v in euler]
        size = len(euler)
        levels = [list(range(size))]
        prev_d = depth
        rows = [depth]
        j = 1
        while (1 << j) <= size:
            half = 1 << (j - 1)
            prev_idx = levels[-1]
            idx_row, d_row = [], []
            for i in range(size - (1 << j) + 1):
                if prev_d[i] <= prev_d[i + half]:
                    idx_row.append(prev_idx[i])
                    d_row.append(prev_d[i])
                else:
                    idx_row.append(prev_idx[i + half])
                    d_row.append(prev_d[i + half])
            levels.append(idx_row)
            rows.append(d_row)
            prev_d = d_row
            j += 1
        self._sparse = (levels, rows[0])

    def lca(self, u, v):
        if self.comp[u] != self.comp[v]:
            return None
        if u == v:
            return u
        levels, depth = self._sparse
        i, j = self._first[u], self._first[v]
        if i > j:
            i, j = j, i
        k = (j - i + 1).bit_length() - 1
        a = levels[k][i]
        b = levels[k][j - (1 << k) + 1]
        return self._euler[a if depth[a] <= depth[b] else b]


class PMHLIndex:
    """Holder for all component indexes plus the published query stage."""

    def __init__(self, net, partitioning, order):
        self.graph = net
        self.P = partitioning
        self.order = order
        self.bset = partitioning.all_boundary
        self.L: list[MHLIndex] = []
        self.part_graphs: list[RoadNetwork] = []
        self.overlay_graph: RoadNetwork | None = None
        self.Lt: MHLIndex | None = None
        self.post_graphs: list[RoadNetwork] = []
        self.Lp: list[MHLIndex] = []
        self.cross: CrossTree | None = None
        self.stage = 0
        self._overlay_contrib = {}     # (a,b) a<b -> (slots, has_inter)
        self._branch_roots = []        # per partition: interior branch roots in T*
        self._relevant_overlay = []    # per partition: overlay chain vertex set
        self._cross_outside = []       # per partition: interiors reading overlay


def pmhl_build(net, k, seed, interleave="block", workers=1,
               partitioning=None, order=None):
    """Build all components; returns the index with per-step timestamps.

    `partitioning` / `order` may be supplied to pin a rebuild to an earlier
    build's structure (update-equals-rebuild checks rely on this).
    """
    t0 = time.perf_counter()
    steps = {}
    if partitioning is None:
        partitioning = partition_graph(net, k, seed)
    if order is None:
        order = boundary_first_order(net, partitioning, interleave)
    idx = PMHLIndex(net, partitioning, order)
    steps["partition"] = time.perf_counter() - t0

    # Step 1: per-partition no-boundary indexes (parallelizable).
    def build_part(i):
        g = partitioning.subgraph(net, i)
        return g, MHLIndex(g, order)

    results = run_tasks(build_part, list(range(partitioning.k)), workers)
    for g, li in results:
        idx.part_graphs.append(g)
        li.build_labels()
        idx.L.append(li)
    steps["step1"] = time.perf_counter() - t0

    # Step 2: overlay graph from the contraction-formed boundary shortcuts.
    idx.overlay_graph = _build_overlay_graph(idx)
    steps["step2"] = time.perf_counter() - t0

    # Step 3: overlay index.
    idx.Lt = MHLIndex(idx.overlay_graph, order)
    idx.Lt.build_labels()
    steps["step3"] = time.perf_counter() - t0

    # Steps 4-5: extended partitions and corrected indexes.
    def build_post(i):
        g = _build_post_graph(idx, i)
        return g, MHLIndex(g, order)

    results = run_tasks(build_post, list(range(partitioning.k)), workers)
    for g, lp in results:
        idx.post_graphs.append(g)
        lp.build_labels()
        idx.Lp.append(lp)
    steps["step5"] = time.perf_counter() - t0

    # Step 6: aggregated cross tree.
    idx.cross = tree_aggregation(idx)
    _index_cross_structure(idx)
    steps["step6"] = time.perf_counter() - t0

    idx.stage = 5
    idx.build_steps = steps
    return idx


def _build_overlay_graph(idx):
    net = idx.graph
    g = RoadNetwork(net.n)
    contrib = {}
    for i, li in enumerate(idx.L):
        for b in idx.P.boundary[i]:
            node = li.tree.nodes[b]
            for slot, u in enumerate(node.neigh):
                a, c = (b, u) if b < u else (u, b)
                contrib.setdefault((a, c), ([], False))[0].append((i, b, slot))
    for u, v, _ in idx.P.inter_edges(net):
        a, c = (u, v) if u < v else (v, u)
        slots, _ = contrib.setdefault((a, c), ([], False))
        contrib[(a, c)] = (slots, True)
    for (a, c), (slots, has_inter) in contrib.items():
        w = _overlay_weight(idx, slots, has_inter, a, c)
        g.add_edge(a, c, w)
    idx._overlay_contrib = contrib
    return g


def _overlay_weight(idx, slots, has_inter, a, c):
    w = UNREACHABLE
    for i, b, slot in slots:
        sc = idx.L[i].tree.nodes[b].sc[slot]
        if sc < w:
            w = sc
    if has_inter:
        base = idx.graph.adj[a].get(c)
        if base is not None and base < w:
            w = base
    return w


def _build_post_graph(idx, i):
    net = idx.graph
    g = idx.part_graphs[i].copy()
    B = idx.P.boundary[i]
    for p in range(len(B)):
        for q in range(p + 1, len(B)):
            d = idx.Lt.h2h_query(B[p], B[q])
            if d is not UNREACHABLE and d != UNREACHABLE:
                g.add_edge(B[p], B[q], d)
    return g


def tree_aggregation(idx):
    """Aggregate the overlay tree and partition trees into one cross tree."""
    net = idx.graph
    P = idx.P
    bset = idx.bset
    ct = CrossTree(net.n)
    ct._overlay_nodes = idx.Lt.tree.nodes
    for v in range(net.n):
        i = P.part[v]
        pnode = idx.L[i].tree.nodes[v]
        if v in bset:
            ct.is_overlay[v] = True
            onode = idx.Lt.tree.nodes[v]
            ct.parent[v] = onode.parent
            ct.children[v] = list(onode.children) + \
                [c for c in pnode.children if c not in bset]
        else:
            ct.parent[v] = pnode.parent
            ct.children[v] = [c for c in pnode.children if c not in bset]
    ct.roots = [v for v in range(net.n) if ct.parent[v] is None]
    for comp_id, root in enumerate(ct.roots):
        for v in ct.topdown(root):
            ct.comp[v] = comp_id
            p = ct.parent[v]
            if p is not None:
                ct.anc[v] = ct.anc[p] + [p]
            ct.depth[v] = len(ct.anc[v])
    for v in range(net.n):
        if ct.is_overlay[v]:
            ct.pos[v] = idx.Lt.tree.nodes[v].pos
        else:
            pnode = idx.L[P.part[v]].tree.nodes[v]
            ct.pos[v] = [ct.depth[u] for u in pnode.neigh]
    for v in ct.topdown():
        if not ct.is_overlay[v]:
            ct.own_dis[v] = _cross_dis(idx, ct, v)
    ct.build_lca()
    return ct


def _cross_dis(idx, ct, v):
    """Distance array of an interior cross-tree node via its partition bag."""
    pnode = idx.L[idx.P.part[v]].tree.nodes[v]
    depth = ct.depth[v]
    anc = ct.anc[v]
    dis = [UNREACHABLE] * (depth + 1)
    dis[depth] = 0
    for j in range(depth):
        c = anc[j]
        best = UNREACHABLE
        for u, w in zip(pnode.neigh, pnode.sc):
            if u == c:
                cand = w
            else:
                du = ct.depth[u]
                if du > j:
                    cand = w + ct.dis_of(u)[j]
                else:
                    cand = w + ct.dis_of(c)[du]
            if cand < best:
                best = cand
        dis[j] = best
    return dis


def _index_cross_structure(idx):
    """Per-partition interior branch roots and relevant overlay chains."""
    ct = idx.cross
    bset = idx.bset
    idx._branch_roots = [[] for _ in range(idx.P.k)]
    idx._relevant_overlay = [set() for _ in range(idx.P.k)]
    idx._cross_outside = [set() for _ in range(idx.P.k)]
    for v in range(idx.graph.n):
        if v in bset:
            continue
        i = idx.P.part[v]
        p = ct.parent[v]
        if p is None or ct.is_overlay[p]:
            idx._branch_roots[i].append(v)
            idx._relevant_overlay[i].update(ct.anc[v])
        if any(u in bset for u in idx.L[i].tree.nodes[v].neigh):
            idx._cross_outside[i].add(v)


# -- queries -------------------------------------------------------------


def pch_query(idx, s, t):
    """Upward search over the union of partition and overlay shortcut arrays."""
    if s == t:
        return 0
    part = idx.P.part
    bset = idx.bset
    L = idx.L
    Lt = idx.Lt

    def arcs(v):
        node = L[part[v]].tree.nodes[v]
        yield from zip(node.neigh, node.sc)
        if v in bset:
            onode = Lt.tree.nodes[v]
            yield from zip(onode.neigh, onode.sc)

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
        for v, w in arcs(u):
            nd = d + w
            if nd < dist.get(v, UNREACHABLE):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return best


def _no_boundary_same(idx, i, s, t):
    best = idx.L[i].h2h_query(s, t)
    B = idx.P.boundary[i]
    ds = [idx.L[i].h2h_query(s, b) for b in B]
    dt = [idx.L[i].h2h_query(t, b) for b in B]
    for p, bp in enumerate(B):
        if ds[p] == UNREACHABLE:
            continue
        for q, bq in enumerate(B):
            if dt[q] == UNREACHABLE:
                continue
            cand = ds[p] + idx.Lt.h2h_query(bp, bq) + dt[q]
            if cand < best:
                best = cand
    return best


def _concat_cross(idx, i, j, s, t, Ls, Lt_leg):
    """min over border pairs of leg(s,bp) + overlay(bp,bq) + leg(bq,t)."""
    bset = idx.bset
    ov = idx.Lt
    if s in bset and t in bset:
        return ov.h2h_query(s, t)
    if s in bset:
        best = UNREACHABLE
        for bq in idx.P.boundary[j]:
            dq = Lt_leg.h2h_query(bq, t)
            if dq == UNREACHABLE:
                continue
            cand = ov.h2h_query(s, bq) + dq
            if cand < best:
                best = cand
        return best
    if t in bset:
        best = UNREACHABLE
        for bp in idx.P.boundary[i]:
            dp = Ls.h2h_query(s, bp)
            if dp == UNREACHABLE:
                continue
            cand = dp + ov.h2h_query(bp, t)
            if cand < best:
                best = cand
        return best
    best = UNREACHABLE
    ds = [(bp, Ls.h2h_query(s, bp)) for bp in idx.P.boundary[i]]
    dt = [(bq, Lt_leg.h2h_query(bq, t)) for bq in idx.P.boundary[j]]
    for bp, dp in ds:
        if dp == UNREACHABLE:
            continue
        for bq, dq in dt:
            if dq == UNREACHABLE:
                continue
            cand = dp + ov.h2h_query(bp, bq) + dq
            if cand < best:
                best = cand
    return best


def cross_query(idx, s, t):
    """2-hop evaluation over the aggregated cross tree."""
    if s == t:
        return 0
    ct = idx.cross
    x = ct.lca(s, t)
    if x is None:
        return UNREACHABLE
    ds = ct.dis_of(s)
    dt = ct.dis_of(t)
    best = ds[ct.depth[x]] + dt[ct.depth[x]]
    for i in ct.pos[x]:
        d = ds[i] + dt[i]
        if d < best:
            best = d
    return best


def pmhl_query(idx, s, t, stage=None):
    """Answer a distance query with the machinery of the published stage."""
    if stage is None:
        stage = idx.stage
    if s == t:
        return 0
    if stage <= 1:
        return bidijkstra(idx.graph, s, t)
    if stage == 2:
        return pch_query(idx, s, t)
    i, j = idx.P.part[s], idx.P.part[t]
    if stage == 3:
        if i == j:
            return _no_boundary_same(idx, i, s, t)
        return _concat_cross(idx, i, j, s, t, idx.L[i], idx.L[j])
    if stage == 4:
        if i == j:
            return idx.Lp[i].h2h_query(s, t)
        return _concat_cross(idx, i, j, s, t, idx.Lp[i], idx.Lp[j])
    if i == j:
        return idx.Lp[i].h2h_query(s, t)
    return cross_query(idx, s, t)


# -- maintenance ---------------------------------------------------------


def cross_update_frontier(affected, ct):
    """Minimal members of `affected`: drop anyone with an affected ancestor."""
    aff = set(affected)
    roots = [v for v in aff if not any(a in aff for a in ct.anc[v])]
    roots.sort(key=lambda v: ct.depth[v])
    return roots


def pmhl_update(idx, batch, workers=1):
    """Absorb one batch through the five staged passes; returns telemetry."""
    rec = StageRecord(batch_id=batch.batch_id)
    t0 = time.perf_counter()

    # U1: rewrite edge weights; only graph search is trustworthy.
    changes = apply_updates(idx.graph, batch)
    idx.stage = 1
    rec.publish_offsets["Q1"] = time.perf_counter() - t0
    rec.durations["U1"] = rec.publish_offsets["Q1"]
    rec.touched["U1"] = len(changes)

    # U2: partition shortcut repair, induced overlay edge changes, overlay
    # shortcut repair.
    intra, inter = classify_updates(idx.P, batch)
    part_sc_aff = {}

    # Rewrite partition subgraph weights in this process before forking so
    # worker children and the parent agree on the graphs.
    part_changes = {}
    for i in sorted(intra):
        g = idx.part_graphs[i]
        ch = []
        for upd in intra[i]:
            old = g.weight(upd.u, upd.v)
            g.set_weight(upd.u, upd.v, upd.new_weight)
            ch.append((upd.u, upd.v, old, upd.new_weight))
        part_changes[i] = ch

    def repair_partition_sc(i):
        return i, idx.L[i].update_shortcuts(part_changes[i]), \
            _sc_snapshot(idx.L[i])

    for i, aff, snap in run_tasks(repair_partition_sc, sorted(intra), workers):
        _apply_sc_snapshot(idx.L[i], snap)
        idx.L[i].stage = max(idx.L[i].stage, 1)
        part_sc_aff[i] = aff

    ov_changes = _refresh_overlay_edges(idx, part_sc_aff, inter)
    ov_sc_aff = idx.Lt.update_shortcuts(ov_changes)
    idx.stage = 2
    rec.publish_offsets["Q2"] = time.perf_counter() - t0
    rec.durations["U2"] = rec.publish_offsets["Q2"] - rec.publish_offsets["Q1"]
    rec.touched["U2"] = sum(len(a.changed) for a in part_sc_aff.values()) \
        + len(ov_sc_aff.changed)

    # U3: label repair for partition and overlay indexes; collect V_A.
    part_va = {}

    def repair_partition_labels(i):
        return i, idx.L[i].update_labels(part_sc_aff[i]), _dis_snapshot(idx.L[i])

    for i, va, snap in run_tasks(repair_partition_labels, sorted(part_sc_aff), workers):
        _apply_dis_snapshot(idx.L[i], snap)
        idx.L[i].stage = 2
        part_va[i] = va
    ov_va = idx.Lt.update_labels(ov_sc_aff)
    idx.stage = 3
    rec.publish_offsets["Q3"] = time.perf_counter() - t0
    rec.durations["U3"] = rec.publish_offsets["Q3"] - rec.publish_offsets["Q2"]
    rec.touched["U3"] = sum(len(v.changed) for v in part_va.values()) \
        + len(ov_va.changed)

    # U4: refresh corrected partitions whose boundary distances may have moved.
    post_parts = set(intra)
    for i in range(idx.P.k):
        if any(b in ov_va.changed for b in idx.P.boundary[i]):
            post_parts.add(i)

    # Same forking concern as U2: rewrite post-graph weights here, hand the
    # workers a ready-made change list.
    post_changes = {}
    for i in sorted(post_parts):
        g = idx.post_graphs[i]
        ch = []
        B = set(idx.P.boundary[i])
        hot_pairs = set()
        for upd in intra.get(i, []):
            if upd.u in B and upd.v in B:
                # boundary pairs fold into the overlay-distance edges below
                hot_pairs.add((upd.u, upd.v) if upd.u < upd.v
                              else (upd.v, upd.u))
                continue
            old = g.weight(upd.u, upd.v)
            if old != upd.new_weight:
                g.set_weight(upd.u, upd.v, upd.new_weight)
                ch.append((upd.u, upd.v, old, upd.new_weight))
        B = idx.P.boundary[i]
        base = idx.part_graphs[i]
        for p in range(len(B)):
            for q in range(p + 1, len(B)):
                b1, b2 = B[p], B[q]
                # d(b1,b2) over the overlay depends only on the labels of
                # its endpoints; skip pairs nothing touched
                if b1 not in ov_va.changed and b2 not in ov_va.changed \
                        and (b1, b2) not in hot_pairs \
                        and (b2, b1) not in hot_pairs:
                    continue
                w = idx.Lt.h2h_query(b1, b2)
                bw = base.adj[b1].get(b2)
                if bw is not None and bw < w:
                    w = bw
                if w == UNREACHABLE:
                    continue
                old = g.adj[b1].get(b2)
                if old is None:
                    g.add_edge(b1, b2, w)
                    ch.append((b1, b2, UNREACHABLE, w))
                elif old != w:
                    g.set_weight(b1, b2, w)
                    ch.append((b1, b2, old, w))
        post_changes[i] = ch

    def repair_post(i):
        aff = idx.Lp[i].update_shortcuts(post_changes[i])
        va = idx.Lp[i].update_labels(aff)
        return i, len(aff.changed) + len(va.changed), \
            _sc_snapshot(idx.Lp[i]), _dis_snapshot(idx.Lp[i])

    touched4 = 0
    for i, cnt, scs, diss in run_tasks(repair_post, sorted(post_parts), workers):
        _apply_sc_snapshot(idx.Lp[i], scs)
        _apply_dis_snapshot(idx.Lp[i], diss)
        touched4 += cnt
    idx.stage = 4
    rec.publish_offsets["Q4"] = time.perf_counter() - t0
    rec.durations["U4"] = rec.publish_offsets["Q4"] - rec.publish_offsets["Q3"]
    rec.touched["U4"] = touched4

    # U5: repair interior entries of the cross tree for affected partitions.
    # A vertex's array depends on its own partition shortcuts, its interior
    # ancestors' arrays, and (only when its bag touches the boundary) the
    # overlay arrays, so the descent can skip untouched subtrees.
    ov_parts = set()
    if ov_va.changed:
        for i in range(idx.P.k):
            if idx._relevant_overlay[i] & ov_va.changed \
                    or any(b in ov_va.changed for b in idx.P.boundary[i]):
                ov_parts.add(i)
    cross_parts = set(part_va) | set(intra) | ov_parts
    ct = idx.cross
    cross_sc = {}
    cross_below = {}
    for i in cross_parts:
        seeds = set(part_sc_aff[i].changed) if i in part_sc_aff else set()
        cross_sc[i] = frozenset(seeds)
        if i in ov_parts:
            seeds |= idx._cross_outside[i]
        below = set()
        for w in seeds:
            if w in below:
                continue
            below.add(w)
            for a in ct.anc[w]:
                if not ct.is_overlay[a]:
                    below.add(a)
        cross_below[i] = below
    repair_roots = [r for i in sorted(cross_parts) for r in idx._branch_roots[i]]
    repair_roots = cross_update_frontier(repair_roots, idx.cross)

    def repair_cross(root):
        i = idx.P.part[root]
        sc_i = cross_sc[i]
        ov_moved = i in ov_parts
        outside = idx._cross_outside[i]
        below = cross_below[i]
        out = []
        stack = [(root, False)]
        while stack:
            v, anc_ch = stack.pop()
            flag = anc_ch
            if anc_ch or v in sc_i or (ov_moved and v in outside):
                new = _cross_dis(idx, ct, v)
                if new != ct.own_dis[v]:
                    out.append((v, new))
                    ct.own_dis[v] = new
                    flag = True
            for c in ct.children[v]:
                if flag or c in below:
                    stack.append((c, flag))
        return out

    touched5 = 0
    for out in run_tasks(repair_cross, repair_roots, workers):
        for v, new in out:
            idx.cross.own_dis[v] = new
            touched5 += 1
    idx.stage = 5
    rec.publish_offsets["Q5"] = time.perf_counter() - t0
    rec.durations["U5"] = rec.publish_offsets["Q5"] - rec.publish_offsets["Q4"]
    rec.touched["U5"] = touched5
    return rec


def _refresh_overlay_edges(idx, part_sc_aff, inter):
    """Recompute overlay edge weights whose contributions may have moved."""
    candidates = set()
    for i, aff in part_sc_aff.items():
        bset_i = set(idx.P.boundary[i])
        for v in aff.changed:
            if v in bset_i:
                for u in idx.L[i].tree.nodes[v].neigh:
                    candidates.add((v, u) if v < u else (u, v))
    for upd in inter:
        candidates.add((upd.u, upd.v) if upd.u < upd.v else (upd.v, upd.u))
    g = idx.overlay_graph
    changes = []
    for key in sorted(candidates):
        entry = idx._overlay_contrib.get(key)
        if entry is None:
            continue
        slots, has_inter = entry
        a, c = key
        w = _overlay_weight(idx, slots, has_inter, a, c)
        old = g.adj[a].get(c)
        if old is not None and old != w:
            g.set_weight(a, c, w)
            changes.append((a, c, old, w))
    return changes


def flat_labels(net, order):
    """Pruned 2-hop labeling in decreasing rank order (verification only).

    The naive flat cross-boundary construction: each vertex keeps a hub for
    every rank-superior vertex not bypassed by a higher-rank one.  Quadratic;
    used as an oracle to check the cover property of aggregated labels on
    small graphs, never as a live index.
    """
    import heapq as _hq
    from .graphs import UNREACHABLE as INF
    n = net.n
    labels = [dict() for _ in range(n)]

    def lookup(a, b):
        la, lb = labels[a], labels[b]
        if len(la) > len(lb):
            la, lb = lb, la
        best = INF
        for h, d in la.items():
            db = lb.get(h)
            if db is not None and d + db < best:
                best = d + db
        return best

    for h in reversed(order.inverse):        # decreasing rank
        dist = {h: 0}
        heap = [(0, h)]
        while heap:
            d, u = _hq.heappop(heap)
            if d > dist.get(u, INF):
                continue
            if lookup(h, u) <= d:
                continue                     # covered by an earlier hub
            labels[u][h] = d
            for v, w in net.adj[u].items():
                nd = d + w
                if nd < dist.get(v, INF):
                    dist[v] = nd
                    _hq.heappush(heap, (nd, v))
    return labels


# -- snapshot helpers for process-based parallelism ----------------------

def _sc_snapshot(li):
    return {v: list(li.tree.nodes[v].sc) for v in range(li.tree.n)
            if li.tree.nodes[v].sc}


def _apply_sc_snapshot(li, snap):
    for v, sc in snap.items():
        li.tree.nodes[v].sc = sc


def _dis_snapshot(li):
    return {v: li.tree.nodes[v].dis for v in range(li.tree.n)
            if li.tree.nodes[v].dis}


def _apply_dis_snapshot(li, snap):
    for v, dis in snap.items():
        li.tree.nodes[v].dis = dis
