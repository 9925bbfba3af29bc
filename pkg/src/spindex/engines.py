"""Uniform staged-engine adapters over the index implementations.

Each adapter exposes the same surface to the simulator and the CLI:
ordered query stages, batch absorption returning per-stage publication
offsets, stage-dispatched queries, and entry counting for size reports.
Single-stage engines (plain CH or H2H maintenance) block queries for the
whole batch; multi-stage engines publish progressively.
"""

from __future__ import annotations

import time

from .graphs import apply_updates, bidijkstra
from .hierarchy import MHLIndex
from .pmhl import PMHLIndex, pmhl_build, pmhl_query, pmhl_update
from .postmhl import postmhl_build, postmhl_query, postmhl_update


class BaseEngine:
    name = "base"
    stages: list[str] = []

    def sample_service(self, stage, calibration, rng):
        return calibration.service[stage]

    def entry_count(self):
        return 0


class BiDijkstraEngine(BaseEngine):
    name = "bidijkstra"
    stages = ["Q1"]

    def __init__(self, net):
        self.net = net
        self.build_time = 0.0

    def apply_batch(self, batch):
        t0 = time.perf_counter()
        apply_updates(self.net, batch)
        return {"Q1": time.perf_counter() - t0}

    def query(self, s, t, stage="Q1"):
        return bidijkstra(self.net, s, t)


class DCHEngine(BaseEngine):
    """Shortcut-only maintenance; queries wait for the full repair."""

    name = "dch"
    stages = ["Q2"]

    def __init__(self, net):
        self.net = net
        t0 = time.perf_counter()
        self.mhl = MHLIndex(net)
        self.build_time = time.perf_counter() - t0

    def apply_batch(self, batch):
        t0 = time.perf_counter()
        changes = apply_updates(self.net, batch)
        self.mhl.update_shortcuts(changes)
        return {"Q2": time.perf_counter() - t0}

    def query(self, s, t, stage="Q2"):
        return self.mhl.ch_query(s, t)

    def entry_count(self):
        return sum(len(n.sc) for n in self.mhl.tree.nodes)


class DH2HEngine(BaseEngine):
    """Full label maintenance; queries wait for labels to be repaired."""

    name = "dh2h"
    stages = ["Q3"]

    def __init__(self, net):
        self.net = net
        t0 = time.perf_counter()
        self.mhl = MHLIndex(net)
        self.mhl.build_labels()
        self.build_time = time.perf_counter() - t0

    def apply_batch(self, batch):
        t0 = time.perf_counter()
        changes = apply_updates(self.net, batch)
        aff = self.mhl.update_shortcuts(changes)
        self.mhl.update_labels(aff)
        return {"Q3": time.perf_counter() - t0}

    def query(self, s, t, stage="Q3"):
        return self.mhl.h2h_query(s, t)

    def entry_count(self):
        return sum(len(n.sc) + len(n.dis) for n in self.mhl.tree.nodes)


class MHLEngine(BaseEngine):
    """Staged single-tree engine: graph search, shortcut search, labels."""

    name = "mhl"
    stages = ["Q1", "Q2", "Q3"]

    def __init__(self, net):
        self.net = net
        t0 = time.perf_counter()
        self.mhl = MHLIndex(net)
        self.mhl.build_labels()
        self.build_time = time.perf_counter() - t0

    def apply_batch(self, batch):
        t0 = time.perf_counter()
        changes = apply_updates(self.net, batch)
        self.mhl.invalidate()
        off = {"Q1": time.perf_counter() - t0}
        aff = self.mhl.update_shortcuts(changes)
        off["Q2"] = time.perf_counter() - t0
        self.mhl.update_labels(aff)
        off["Q3"] = time.perf_counter() - t0
        return off

    def query(self, s, t, stage="Q3"):
        if stage == "Q1":
            return bidijkstra(self.net, s, t)
        if stage == "Q2":
            return self.mhl.ch_query(s, t)
        return self.mhl.h2h_query(s, t)

    def entry_count(self):
        return sum(len(n.sc) + len(n.dis) for n in self.mhl.tree.nodes)


class PMHLEngine(BaseEngine):
    name = "pmhl"
    stages = ["Q1", "Q2", "Q3", "Q4", "Q5"]

    def __init__(self, net, k=8, seed=1, workers=1, interleave="block"):
        self.net = net
        self.workers = workers
        t0 = time.perf_counter()
        self.idx = pmhl_build(net, k, seed, interleave, workers)
        self.build_time = time.perf_counter() - t0

    def apply_batch(self, batch):
        rec = pmhl_update(self.idx, batch, self.workers)
        self.last_record = rec
        return dict(rec.publish_offsets)

    def query(self, s, t, stage="Q5"):
        return pmhl_query(self.idx, s, t, int(stage[1]))

    def entry_count(self):
        total = 0
        for li in self.idx.L + self.idx.Lp + [self.idx.Lt]:
            total += sum(len(n.sc) + len(n.dis) for n in li.tree.nodes)
        ct = self.idx.cross
        total += sum(len(d) for d in ct.own_dis if d)
        return total


class PostMHLEngine(BaseEngine):
    name = "postmhl"
    stages = ["Q1", "Q2", "Q3", "Q4"]

    def __init__(self, net, tau=100, ke=16, beta_l=0.2, beta_u=1.0, workers=1):
        self.net = net
        self.workers = workers
        t0 = time.perf_counter()
        self.idx = postmhl_build(net, tau, ke, beta_l, beta_u)
        self.build_time = time.perf_counter() - t0

    def apply_batch(self, batch):
        rec = postmhl_update(self.idx, batch, self.workers)
        self.last_record = rec
        return dict(rec.publish_offsets)

    def query(self, s, t, stage="Q4"):
        return postmhl_query(self.idx, s, t, int(stage[1]))

    def entry_count(self):
        total = 0
        for n in self.idx.tree.nodes:
            total += len(n.sc) + len(n.dis) + len(n.disB)
        for d in self.idx.D:
            if d:
                total += len(d) * len(d)
        return total


ENGINE_KINDS = {
    "bidijkstra": BiDijkstraEngine,
    "ch": DCHEngine,
    "dch": DCHEngine,
    "h2h": DH2HEngine,
    "dh2h": DH2HEngine,
    "mhl": MHLEngine,
    "pmhl": PMHLEngine,
    "postmhl": PostMHLEngine,
}


def make_engine(kind, net, **params):
    try:
        cls = ENGINE_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown engine kind {kind!r}") from None
    return cls(net, **params)
