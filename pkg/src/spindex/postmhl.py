"""Single-tree amalgamated index: one global elimination tree whose
partitions are elimination subtrees, with boundary distance tables and
per-vertex boundary arrays layered on top.

Query capability advances through four published stages per batch:

  Q1  graph search (edges just rewritten)
  Q2  upward search over the global shortcut arrays
  Q3  boundary tables + in-partition label entries
  Q4  full 2-hop evaluation, including cross-partition pairs

The boundary of partition i is the bag of its subtree root, which separates
the subtree from the rest of the graph; every structure here leans on that.
Distance arrays are stored full-length per vertex: entries at in-partition
ancestor depths are refreshed in the post pass, entries at overlay ancestor
depths in the cross pass.
"""

from __future__ import annotations

import time

from .graphs import UNREACHABLE, apply_updates, bidijkstra
from .hierarchy import MHLIndex, AffectedSet
from .parallel import run_tasks
from .partition import td_partition, OVERLAY
from .pmhl import StageRecord


class PostMHLIndex:
    def __init__(self, net, mhl, tdp):
        self.graph = net
        self.mhl = mhl
        self.tree = mhl.tree
        self.tdp = tdp
        self.stage = 0
        # Per partition: boundary vertices in bag (rank) order, their index
        # map, and the pairwise boundary distance table.
        self.B = [list(b) for b in tdp.boundary]
        self.bindex = [{b: j for j, b in enumerate(bs)} for bs in self.B]
        self.D = [None] * tdp.k
        self.overlay_set = set(tdp.overlay)

    def partition_of(self, v):
        return self.tdp.part[v]

    def _index_outside(self):
        """Per partition: vertices with an out-of-partition bag neighbor,
        plus their ancestor closure inside the partition (for pruned
        descents when the boundary table moves)."""
        part = self.tdp.part
        self._outside = []
        self._outside_below = []
        for i in range(self.tdp.k):
            outside = set()
            for v in self.tdp.parts[i]:
                if any(part[u] != i for u in self.tree.nodes[v].neigh):
                    outside.add(v)
            below = set()
            for v in outside:
                while v is not None and part[v] == i and v not in below:
                    below.add(v)
                    v = self.tree.nodes[v].parent
            self._outside.append(outside)
            self._outside_below.append(below)


def postmhl_build(net, tau, k_e, beta_l, beta_u):
    """Build tree, partitions, overlay labels, boundary tables, and labels."""
    t0 = time.perf_counter()
    steps = {}
    mhl = MHLIndex(net)
    steps["tree"] = time.perf_counter() - t0
    tdp = td_partition(mhl.tree, tau, k_e, beta_l, beta_u)
    idx = PostMHLIndex(net, mhl, tdp)
    steps["partition"] = time.perf_counter() - t0

    _build_overlay_labels(idx)
    steps["overlay"] = time.perf_counter() - t0
    for i in range(tdp.k):
        _refresh_D(idx, i)
        _rebuild_partition(idx, i)
    steps["partitions"] = time.perf_counter() - t0
    for i in range(tdp.k):
        _rebuild_cross(idx, i)
    steps["cross"] = time.perf_counter() - t0
    idx._index_outside()
    mhl.stage = 2
    idx.stage = 4
    idx.build_steps = steps
    return idx


def _build_overlay_labels(idx):
    """Distance arrays of overlay vertices (their ancestors are all overlay)."""
    nodes = idx.tree.nodes
    for v in idx.tree.topdown():
        if v in idx.overlay_set:
            nodes[v].dis = idx.mhl._compute_dis(v)


def _overlay_pair(idx, a, b):
    """Distance between two overlay vertices on a common ancestor chain."""
    if a == b:
        return 0
    na, nb = idx.tree.nodes[a], idx.tree.nodes[b]
    if na.depth > nb.depth:
        return na.dis[nb.depth]
    return nb.dis[na.depth]


def _refresh_D(idx, i):
    """Boundary pair table from the overlay labels; returns True on change."""
    B = idx.B[i]
    new = [[_overlay_pair(idx, a, b) for b in B] for a in B]
    changed = new != idx.D[i]
    idx.D[i] = new
    return changed


def _update_D(idx, i, va):
    """Refresh only the boundary-table entries that can have moved.

    An entry depends on the distance array of its deeper endpoint alone, so
    rows and columns of boundary vertices outside `va` are already correct.
    """
    B = idx.B[i]
    hot = [j for j, b in enumerate(B) if b in va]
    if not hot:
        return False
    D = idx.D[i]
    changed = False
    for j in hot:
        for a in range(len(B)):
            w = _overlay_pair(idx, B[a], B[j])
            if D[a][j] != w:
                D[a][j] = w
                D[j][a] = w
                changed = True
    return changed


def _compute_disB(idx, v, i):
    """Distances from v to each boundary vertex of its partition."""
    node = idx.tree.nodes[v]
    bidx = idx.bindex[i]
    D = idx.D[i]
    part = idx.tdp.part
    nodes = idx.tree.nodes
    nb = len(idx.B[i])
    out = [UNREACHABLE] * nb
    for j in range(nb):
        best = UNREACHABLE
        for u, w in zip(node.neigh, node.sc):
            if part[u] == i:
                cand = w + nodes[u].disB[j]
            else:
                cand = w + D[bidx[u]][j]
            if cand < best:
                best = cand
        out[j] = best
    return out


def _compute_dis_post(idx, v, i, root_depth):
    """In-partition entries of v's distance array (depths >= root_depth).

    An ancestor c inside the partition is reached either through an
    in-partition bag neighbor (label lookup) or through a boundary neighbor,
    in which case c's boundary array carries the remaining distance.
    """
    node = idx.tree.nodes[v]
    nodes = idx.tree.nodes
    bidx = idx.bindex[i]
    part = idx.tdp.part
    out = [UNREACHABLE] * (node.depth + 1 - root_depth)
    out[-1] = 0
    for j in range(root_depth, node.depth):
        c = node.anc[j]
        best = UNREACHABLE
        for k, u in enumerate(node.neigh):
            w = node.sc[k]
            if u == c:
                cand = w
            elif part[u] == i:
                p = node.pos[k]
                if p > j:
                    cand = w + nodes[u].dis[j]
                else:
                    cand = w + nodes[c].dis[p]
            else:
                cand = w + nodes[c].disB[bidx[u]]
            if cand < best:
                best = cand
        out[j - root_depth] = best
    return out


def _rebuild_partition(idx, i):
    """Post pass for one partition: boundary arrays plus in-partition entries.

    Returns the set of vertices whose arrays changed.
    """
    nodes = idx.tree.nodes
    root = idx.tdp.roots[i]
    root_depth = nodes[root].depth
    changed = set()
    for v in idx.tree.topdown(root):
        node = nodes[v]
        new_b = _compute_disB(idx, v, i)
        if new_b != node.disB:
            node.disB = new_b
            changed.add(v)
        new_post = _compute_dis_post(idx, v, i, root_depth)
        cur = node.dis[root_depth:] if len(node.dis) == node.depth + 1 else None
        if new_post != cur:
            if cur is None:
                node.dis = [UNREACHABLE] * root_depth + new_post
            else:
                node.dis[root_depth:] = new_post
            changed.add(v)
    return changed


def _compute_dis_prefix(idx, v, root_depth):
    """Overlay-ancestor entries of v's distance array (depths < root_depth).

    Same recurrence as the full array, cut off at the partition root; bag
    neighbors deeper than the target depth contribute their own prefix
    entries, which a top-down sweep has already refreshed.
    """
    node = idx.tree.nodes[v]
    nodes = idx.tree.nodes
    anc = node.anc
    out = [UNREACHABLE] * root_depth
    for j in range(root_depth):
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
        out[j] = best
    return out


def _rebuild_cross(idx, i):
    """Cross pass for one partition: overlay ancestor entries of each array."""
    nodes = idx.tree.nodes
    root = idx.tdp.roots[i]
    root_depth = nodes[root].depth
    changed = set()
    for v in idx.tree.topdown(root):
        node = nodes[v]
        new = _compute_dis_prefix(idx, v, root_depth)
        if new != node.dis[:root_depth]:
            node.dis[:root_depth] = new
            changed.add(v)
    return changed


def _sc_below(idx, i, sc_changed):
    """Ancestor closure (within partition i) of the shortcut-changed set."""
    part = idx.tdp.part
    nodes = idx.tree.nodes
    below = set()
    for v in sc_changed:
        while v is not None and part[v] == i and v not in below:
            below.add(v)
            v = nodes[v].parent
    return below


def _update_partition(idx, i, sc_changed, d_changed):
    """Pruned post pass: descend only where inputs actually moved.

    A vertex needs recomputation when its own shortcuts changed, when an
    in-partition ancestor's arrays changed, or (after a boundary-table
    change) when its bag reaches outside the partition.
    """
    nodes = idx.tree.nodes
    root = idx.tdp.roots[i]
    root_depth = nodes[root].depth
    below = _sc_below(idx, i, sc_changed)
    outside = idx._outside[i]
    outside_below = idx._outside_below[i]
    changed = set()
    stack = [(root, False)]
    while stack:
        v, anc_ch = stack.pop()
        node = nodes[v]
        v_changed = False
        if anc_ch or v in sc_changed or (d_changed and v in outside):
            new_b = _compute_disB(idx, v, i)
            if new_b != node.disB:
                node.disB = new_b
                v_changed = True
            new_post = _compute_dis_post(idx, v, i, root_depth)
            if node.dis[root_depth:] != new_post:
                node.dis[root_depth:] = new_post
                v_changed = True
            if v_changed:
                changed.add(v)
        flag = anc_ch or v_changed
        for c in node.children:
            if flag or c in below or (d_changed and c in outside_below):
                stack.append((c, flag))
    return changed


def _update_cross(idx, i, sc_changed, ov_va):
    """Pruned cross pass: overlay entries, affected subtrees only."""
    nodes = idx.tree.nodes
    root = idx.tdp.roots[i]
    root_depth = nodes[root].depth
    below = _sc_below(idx, i, sc_changed)
    # Overlay arrays are read directly by any vertex whose bag reaches
    # outside the partition, not just through ancestors' prefixes.
    ov_moved = bool(ov_va) and bool(set(nodes[root].anc) & ov_va)
    outside = idx._outside[i]
    outside_below = idx._outside_below[i]
    changed = set()
    stack = [(root, False)]
    while stack:
        v, anc_ch = stack.pop()
        node = nodes[v]
        v_changed = False
        if anc_ch or v in sc_changed or (ov_moved and v in outside):
            new = _compute_dis_prefix(idx, v, root_depth)
            if new != node.dis[:root_depth]:
                node.dis[:root_depth] = new
                v_changed = True
                changed.add(v)
        flag = anc_ch or v_changed
        for c in node.children:
            if flag or c in below or (ov_moved and c in outside_below):
                stack.append((c, flag))
    return changed


# -- queries -------------------------------------------------------------


def _same_partition_query(idx, i, s, t):
    """In-partition 2-hop scan plus the boundary detour table."""
    tree = idx.tree
    x = tree.lca(s, t)
    ds = tree.nodes[s].dis
    dt = tree.nodes[t].dis
    xn = tree.nodes[x]
    part = idx.tdp.part
    best = ds[xn.depth] + dt[xn.depth]
    for k, u in enumerate(xn.neigh):
        if part[u] != i:
            continue
        j = xn.pos[k]
        d = ds[j] + dt[j]
        if d < best:
            best = d
    dsB = tree.nodes[s].disB
    dtB = tree.nodes[t].disB
    D = idx.D[i]
    for a in range(len(dsB)):
        if dsB[a] == UNREACHABLE:
            continue
        row = D[a]
        for b in range(len(dtB)):
            cand = dsB[a] + row[b] + dtB[b]
            if cand < best:
                best = cand
    return best


def _cross_partition_q3(idx, s, t):
    """Boundary-array concatenation through the overlay."""
    i, j = idx.tdp.part[s], idx.tdp.part[t]
    if i == OVERLAY and j == OVERLAY:
        return _overlay_query(idx, s, t)
    if i == OVERLAY:
        best = UNREACHABLE
        dtB = idx.tree.nodes[t].disB
        for b, bv in enumerate(idx.B[j]):
            if dtB[b] == UNREACHABLE:
                continue
            cand = _overlay_query(idx, s, bv) + dtB[b]
            if cand < best:
                best = cand
        return best
    if j == OVERLAY:
        return _cross_partition_q3(idx, t, s)
    dsB = idx.tree.nodes[s].disB
    dtB = idx.tree.nodes[t].disB
    best = UNREACHABLE
    for a, av in enumerate(idx.B[i]):
        if dsB[a] == UNREACHABLE:
            continue
        for b, bv in enumerate(idx.B[j]):
            if dtB[b] == UNREACHABLE:
                continue
            cand = dsB[a] + _overlay_query(idx, av, bv) + dtB[b]
            if cand < best:
                best = cand
    return best


def _overlay_query(idx, s, t):
    """2-hop evaluation between overlay vertices (labels live at U3)."""
    if s == t:
        return 0
    tree = idx.tree
    x = tree.lca(s, t)
    if x is None:
        return UNREACHABLE
    ds = tree.nodes[s].dis
    dt = tree.nodes[t].dis
    xn = tree.nodes[x]
    best = ds[xn.depth] + dt[xn.depth]
    for p in xn.pos:
        d = ds[p] + dt[p]
        if d < best:
            best = d
    return best


def postmhl_query(idx, s, t, stage=None):
    """Answer a distance query with the machinery of the published stage."""
    if stage is None:
        stage = idx.stage
    if s == t:
        return 0
    if stage <= 1:
        return bidijkstra(idx.graph, s, t)
    if stage == 2:
        return idx.mhl.ch_query(s, t)
    i, j = idx.tdp.part[s], idx.tdp.part[t]
    if i == j and i != OVERLAY:
        return _same_partition_query(idx, i, s, t)
    if stage == 3:
        return _cross_partition_q3(idx, s, t)
    return _overlay_query(idx, s, t)   # full arrays valid at stage 4


# -- maintenance ---------------------------------------------------------


def postmhl_update(idx, batch, workers=1):
    """Absorb one batch; publishes Q1..Q4 as the passes complete."""
    rec = StageRecord(batch_id=batch.batch_id)
    t0 = time.perf_counter()

    changes = apply_updates(idx.graph, batch)
    idx.stage = 1
    rec.publish_offsets["Q1"] = time.perf_counter() - t0
    rec.durations["U1"] = rec.publish_offsets["Q1"]
    rec.touched["U1"] = len(changes)

    aff_sc = idx.mhl.update_shortcuts(changes)
    idx.stage = 2
    rec.publish_offsets["Q2"] = time.perf_counter() - t0
    rec.durations["U2"] = rec.publish_offsets["Q2"] - rec.publish_offsets["Q1"]
    rec.touched["U2"] = len(aff_sc.changed)

    # Overlay label repair (pruned top-down limited to overlay vertices).
    va_ov = _update_overlay_labels(idx, aff_sc)
    t_u3 = time.perf_counter() - t0
    rec.durations["U3"] = t_u3 - rec.publish_offsets["Q2"]
    rec.touched["U3"] = len(va_ov)

    # Post pass: refresh boundary tables and partition arrays where needed.
    sc_parts = set()
    part_sc = {}
    for v in aff_sc.changed:
        p = idx.tdp.part[v]
        if p != OVERLAY:
            sc_parts.add(p)
            part_sc.setdefault(p, set()).add(v)
    post_parts = set(sc_parts)
    for i in range(idx.tdp.k):
        if i in post_parts:
            continue
        if any(b in va_ov for b in idx.B[i]):
            post_parts.add(i)

    def post_task(i):
        d_changed = _update_D(idx, i, va_ov)
        sc_i = part_sc.get(i, set())
        if not d_changed and not sc_i:
            return i, set(), None
        ch = _update_partition(idx, i, sc_i, d_changed)
        return i, ch, _changed_snapshot(idx, ch)

    touched4 = 0
    for i, ch, snap in run_tasks(post_task, sorted(post_parts), workers):
        _update_D(idx, i, va_ov)
        if snap is not None:
            _apply_partition_snapshot(idx, snap)
        touched4 += len(ch)
    idx.stage = 3
    rec.publish_offsets["Q3"] = time.perf_counter() - t0
    rec.durations["U4"] = rec.publish_offsets["Q3"] - t_u3
    rec.touched["U4"] = touched4

    # Cross pass: overlay ancestor entries for affected partitions.
    cross_parts = set(sc_parts)
    if va_ov:
        for i in range(idx.tdp.k):
            if i in cross_parts:
                continue
            ranc = set(idx.tree.nodes[idx.tdp.roots[i]].anc)
            if ranc & va_ov:
                cross_parts.add(i)

    def cross_task(i):
        ch = _update_cross(idx, i, part_sc.get(i, set()), va_ov)
        return i, ch, _changed_snapshot(idx, ch)

    touched5 = 0
    for i, ch, snap in run_tasks(cross_task, sorted(cross_parts), workers):
        _apply_partition_snapshot(idx, snap)
        touched5 += len(ch)
    idx.stage = 4
    rec.publish_offsets["Q4"] = time.perf_counter() - t0
    rec.durations["U5"] = rec.publish_offsets["Q4"] - rec.publish_offsets["Q3"]
    rec.touched["U5"] = touched5
    return rec


def _update_overlay_labels(idx, aff_sc):
    """Pruned top-down distance repair over the overlay vertices only."""
    nodes = idx.tree.nodes
    ov = idx.overlay_set
    sc_below = set()
    for v in aff_sc.changed:
        while v is not None and v not in sc_below:
            sc_below.add(v)
            v = nodes[v].parent
    touched = set()
    for root in aff_sc.roots:
        if root not in ov:
            continue
        stack = [(root, False)]
        while stack:
            v, anc_changed = stack.pop()
            node = nodes[v]
            dis_changed = False
            if anc_changed or v in sc_below:
                new = idx.mhl._compute_dis(v)
                if new != node.dis:
                    node.dis = new
                    dis_changed = True
                    touched.add(v)
            for c in node.children:
                if c in ov and (anc_changed or dis_changed or c in sc_below):
                    stack.append((c, anc_changed or dis_changed))
    return touched


def _partition_snapshot(idx, i):
    nodes = idx.tree.nodes
    return [(v, list(nodes[v].dis), list(nodes[v].disB))
            for v in idx.tree.topdown(idx.tdp.roots[i])]


def _changed_snapshot(idx, changed):
    nodes = idx.tree.nodes
    return [(v, list(nodes[v].dis), list(nodes[v].disB))
            for v in sorted(changed)]


def _apply_partition_snapshot(idx, snap):
    nodes = idx.tree.nodes
    for v, dis, disB in snap:
        nodes[v].dis = dis
        nodes[v].disB = disB


def verify_boundary_arrays(idx):
    """Rebuild everything below the overlay from the overlay index alone.

    Recomputes boundary tables, boundary arrays, in-partition entries, and
    cross entries from the current shortcut arrays and overlay labels, then
    compares element-wise against the maintained arrays.  Returns a list of
    mismatch descriptions (empty means the overlay index was sufficient).
    """
    nodes = idx.tree.nodes
    mismatches = []
    saved = {}
    for i in range(idx.tdp.k):
        for v in idx.tree.topdown(idx.tdp.roots[i]):
            saved[v] = (nodes[v].dis, nodes[v].disB)
            nodes[v].dis = []
            nodes[v].disB = []
    saved_D = [([row[:] for row in d] if d else d) for d in idx.D]
    for i in range(idx.tdp.k):
        _refresh_D(idx, i)
        _rebuild_partition(idx, i)
        _rebuild_cross(idx, i)
    for i in range(idx.tdp.k):
        if idx.D[i] != saved_D[i]:
            mismatches.append(f"boundary table of partition {i} differs")
        for v in idx.tree.topdown(idx.tdp.roots[i]):
            dis, disB = saved[v]
            if nodes[v].dis != dis:
                mismatches.append(f"distance array of {v} differs")
            if nodes[v].disB != disB:
                mismatches.append(f"boundary array of {v} differs")
    return mismatches
