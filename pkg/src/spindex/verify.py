"""Verification suites shared by the CLI and the test harness.

Every suite returns (ok, messages); messages name the violated property.
All oracles here are independent graph searches, not index lookups.
"""

from __future__ import annotations

import os
import tempfile

from .graphs import (RoadNetwork, UNREACHABLE, dijkstra_sssp,
                     generate_update_batch, random_network, grid_network)
from .hierarchy import MHLIndex, canonicalize
from .partition import partition_graph, boundary_first_order
from .pmhl import pmhl_build, pmhl_query, pmhl_update
from .postmhl import postmhl_build, postmhl_query, postmhl_update, verify_boundary_arrays
from .treedec import mde_decompose, validate_decomposition, save_snapshot, load_snapshot


def _oracle_rows(net, sources):
    return {s: dijkstra_sssp(net, s) for s in sources}


def suite_oracle(graphs=None, batches=3, pairs=60, seed=7):
    """Stage-by-stage oracle equality for every engine kind on small graphs."""
    if graphs is None:
        graphs = [random_network(40, 40, seed), grid_network(6, 7, seed + 1),
                  random_network(64, 90, seed + 2)]
    msgs = []
    from .graphs import SplitMix64, apply_updates
    rng = SplitMix64(seed)
    for gi, net in enumerate(graphs):
        mhl = MHLIndex(net.copy())
        mhl.build_labels()
        pm = pmhl_build(net.copy(), 3, seed)
        po = postmhl_build(net.copy(), max(8, mhl.tree.width + 1), 4, 0.05, 2.0)
        for b in range(batches + 1):
            if b > 0:
                batch = generate_update_batch(net, min(10, net.m), seed * 100 + b)
                ch = apply_updates(mhl.graph, batch)
                aff = mhl.update_shortcuts(ch)
                mhl.update_labels(aff)
                pmhl_update(pm, batch)
                postmhl_update(po, batch)
                apply_updates(net, batch)
            qs = [(rng.randrange(net.n), rng.randrange(net.n))
                  for _ in range(pairs)]
            rows = _oracle_rows(net, {s for s, _ in qs})
            for s, t in qs:
                want = rows[s][t]
                for label, got in (
                        ("mhl/ch", mhl.ch_query(s, t)),
                        ("mhl/h2h", mhl.h2h_query(s, t)),
                        *((f"pmhl/Q{st}", pmhl_query(pm, s, t, st))
                          for st in range(1, 6)),
                        *((f"postmhl/Q{st}", postmhl_query(po, s, t, st))
                          for st in range(1, 5))):
                    if got != want:
                        msgs.append(f"graph {gi} batch {b} {label}({s},{t}) "
                                    f"= {got}, oracle {want}")
    return not msgs, msgs


def suite_decomposition(seed=11):
    """Structural checks of the elimination tree on random graphs."""
    msgs = []
    for i in range(4):
        net = random_network(30 + 10 * i, 35 + 12 * i, seed + i)
        tree, _ = mde_decompose(net)
        msgs.extend(validate_decomposition(net, tree))
    return not msgs, msgs


def suite_interleaving(n=120, k=4, count=3, seed=23):
    """Order-interleaving equivalence: identical canonical labels, and the
    canonical hub map is contained in the aggregated tree's labels."""
    msgs = []
    for i in range(count):
        net = random_network(n, int(1.4 * n), seed + i)
        p = partition_graph(net, k, seed + i)
        o1 = boundary_first_order(net, p, "block")
        o2 = boundary_first_order(net, p, "roundrobin")
        m1 = MHLIndex(net, o1)
        m1.build_labels()
        m2 = MHLIndex(net, o2)
        m2.build_labels()
        c1 = canonicalize(m1)
        c2 = canonicalize(m2)
        if c1 != c2:
            diff = [v for v in range(net.n) if c1[v] != c2[v]]
            msgs.append(f"graph {i}: canonical labels differ at {diff[:5]}")
        pm = pmhl_build(net.copy(), k, seed + i,
                        partitioning=p, order=o1)
        ct = pm.cross
        for v in range(net.n):
            implied = {a: ct.dis_of(v)[j] for j, a in enumerate(ct.anc[v])}
            implied[v] = 0
            for hub, d in c1[v].items():
                if implied.get(hub) != d:
                    msgs.append(f"graph {i}: hub {hub} of {v} (d={d}) missing "
                                f"from aggregated labels")
                    break
    return not msgs, msgs


def suite_overlay(n=300, k=4, seed=31):
    """Overlay graph preserves boundary-pair distances; upward searches over
    the shortcut union equal the oracle."""
    from .pmhl import pch_query
    msgs = []
    net = random_network(n, int(1.5 * n), seed)
    pm = pmhl_build(net, k, seed)
    boundary = sorted(pm.bset)
    for b in boundary:
        oracle = dijkstra_sssp(net, b)
        over = dijkstra_sssp(pm.overlay_graph, b)
        for c in boundary:
            if over[c] != oracle[c]:
                msgs.append(f"overlay distance ({b},{c}) = {over[c]}, "
                            f"oracle {oracle[c]}")
            got = pch_query(pm, b, c)
            if got != oracle[c]:
                msgs.append(f"shortcut-union query ({b},{c}) = {got}, "
                            f"oracle {oracle[c]}")
    return not msgs, msgs


def suite_boundary(n=200, batches=5, seed=41):
    """Post/cross components rebuildable from the overlay index alone."""
    msgs = []
    net = random_network(n, int(1.4 * n), seed)
    po = postmhl_build(net, 64, 4, 0.05, 2.0)
    mism = verify_boundary_arrays(po)
    if mism:
        msgs.append(f"fresh build: {mism[:3]}")
    for b in range(batches):
        batch = generate_update_batch(net, min(20, net.m), seed + 100 + b)
        postmhl_update(po, batch)
        mism = verify_boundary_arrays(po)
        if mism:
            msgs.append(f"after batch {b}: {mism[:3]}")
    return not msgs, msgs


def suite_snapshot(seed=53):
    """Tree snapshot round-trips bit-exactly and rejects corruption."""
    msgs = []
    net = random_network(60, 70, seed)
    tree, order = mde_decompose(net)
    fd, path = tempfile.mkstemp(suffix=".tdsnap")
    os.close(fd)
    try:
        save_snapshot(tree, path)
        back = load_snapshot(path)
        if back.order.rank != order.rank:
            msgs.append("order not preserved by snapshot")
        for v in range(net.n):
            a, b = tree.nodes[v], back.nodes[v]
            if a.neigh != b.neigh or a.sc != b.sc or a.parent != b.parent \
                    or a.anc != b.anc or a.pos != b.pos:
                msgs.append(f"node {v} differs after round trip")
                break
        with open(path, "r+b") as fh:
            fh.seek(0)
            fh.write(b"XX")
        try:
            load_snapshot(path)
            msgs.append("corrupted snapshot accepted")
        except ValueError:
            pass
    finally:
        os.unlink(path)
    return not msgs, msgs


SUITES = {
    "oracle": suite_oracle,
    "decomposition": suite_decomposition,
    "interleaving": suite_interleaving,
    "overlay": suite_overlay,
    "boundary": suite_boundary,
    "snapshot": suite_snapshot,
}


def run_suites(names=None):
    """Run the named suites (all by default); returns (ok, {name: messages})."""
    names = list(SUITES) if not names else names
    results = {}
    ok = True
    for name in names:
        if name not in SUITES:
            raise KeyError(name)
        passed, msgs = SUITES[name]()
        results[name] = msgs
        ok = ok and passed
    return ok, results
