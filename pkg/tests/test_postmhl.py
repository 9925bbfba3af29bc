import pytest
from hypothesis import given, settings, strategies as st

from spindex.graphs import (SplitMix64, UNREACHABLE, UpdateBatch,
                            dijkstra_sssp, generate_update_batch,
                            random_network)
from spindex.partition import OVERLAY
from spindex.postmhl import (postmhl_build, postmhl_query, postmhl_update,
                             verify_boundary_arrays, _rebuild_cross,
                             _rebuild_partition, _refresh_D)


def build_fixture(n=120, extra=170, seed=4, tau=40, k_e=4,
                  beta_l=0.1, beta_u=1.5):
    net = random_network(n, extra, seed)
    return net, postmhl_build(net, tau, k_e, beta_l, beta_u)


class TestBuild:
    def test_structures_cover_graph(self):
        net, idx = build_fixture()
        covered = sorted(idx.tdp.overlay +
                         [v for p in idx.tdp.parts for v in p])
        assert covered == list(range(net.n))
        assert idx.stage == 4

    def test_boundary_tables_match_oracle(self):
        net, idx = build_fixture()
        for i in range(idx.tdp.k):
            B = idx.B[i]
            for a, av in enumerate(B):
                rows = dijkstra_sssp(net, av)
                for b, bv in enumerate(B):
                    assert idx.D[i][a][b] == rows[bv]

    def test_disB_matches_oracle(self):
        net, idx = build_fixture(n=80, extra=115, seed=6)
        for i in range(idx.tdp.k):
            for v in idx.tdp.parts[i]:
                rows = dijkstra_sssp(net, v)
                for b, bv in enumerate(idx.B[i]):
                    assert idx.tree.nodes[v].disB[b] == rows[bv]

    def test_dis_matches_oracle(self):
        net, idx = build_fixture(n=80, extra=115, seed=6)
        for v in range(net.n):
            node = idx.tree.nodes[v]
            rows = dijkstra_sssp(net, v)
            for j, a in enumerate(node.anc):
                assert node.dis[j] == rows[a]

    def test_build_steps_recorded(self):
        net, idx = build_fixture(n=50, extra=70)
        keys = ("tree", "partition", "overlay", "partitions", "cross")
        offs = [idx.build_steps[k] for k in keys]
        assert offs == sorted(offs)


class TestQueries:
    def test_same_vertex_all_stages(self):
        net, idx = build_fixture(n=50, extra=70)
        for stage in range(1, 5):
            assert postmhl_query(idx, 7, 7, stage=stage) == 0

    @given(seed=st.integers(0, 100))
    @settings(max_examples=8, deadline=None)
    def test_all_stages_match_oracle(self, seed):
        net = random_network(60, 85, seed)
        idx = postmhl_build(net, 30, 4, 0.1, 1.5)
        rng = SplitMix64(seed + 3)
        for _ in range(12):
            s, t = rng.randrange(60), rng.randrange(60)
            want = dijkstra_sssp(net, s)[t]
            for stage in range(1, 5):
                assert postmhl_query(idx, s, t, stage=stage) == want, \
                    f"stage {stage} pair ({s},{t})"

    def test_partition_to_boundary_is_disB(self):
        net, idx = build_fixture()
        for i in range(idx.tdp.k):
            interior = [v for v in idx.tdp.parts[i]][:5]
            for v in interior:
                for b, bv in enumerate(idx.B[i]):
                    assert postmhl_query(idx, v, bv, stage=3) == \
                        idx.tree.nodes[v].disB[b]


class TestMaintenance:
    def test_empty_batch(self):
        net, idx = build_fixture(n=50, extra=70)
        rec = postmhl_update(idx, UpdateBatch([]))
        assert idx.stage == 4
        assert all(v == 0 for v in rec.touched.values())

    def test_publish_offsets_monotone(self):
        net, idx = build_fixture()
        rec = postmhl_update(idx, generate_update_batch(net, 10, 21))
        offs = [rec.publish_offsets[q] for q in ("Q1", "Q2", "Q3", "Q4")]
        assert offs == sorted(offs)

    def test_queries_exact_after_batches(self):
        net, idx = build_fixture()
        rng = SplitMix64(9)
        for b in range(6):
            postmhl_update(idx, generate_update_batch(net, 8, 500 + b))
            for _ in range(10):
                s, t = rng.randrange(net.n), rng.randrange(net.n)
                want = dijkstra_sssp(net, s)[t]
                for stage in range(1, 5):
                    assert postmhl_query(idx, s, t, stage=stage) == want

    def test_update_equals_rebuild(self):
        net, idx = build_fixture(n=90, extra=130, seed=7)
        for b in range(8):
            postmhl_update(idx, generate_update_batch(net, 6, 600 + b))
        fresh = postmhl_build(net, 40, 4, 0.1, 1.5)
        assert fresh.tdp.roots == idx.tdp.roots
        assert fresh.D == idx.D
        for v in range(net.n):
            assert idx.tree.nodes[v].sc == fresh.tree.nodes[v].sc
            assert idx.tree.nodes[v].dis == fresh.tree.nodes[v].dis
            assert idx.tree.nodes[v].disB == fresh.tree.nodes[v].disB

    def test_parallel_matches_serial(self):
        net1 = random_network(90, 130, 11)
        net2 = net1.copy()
        a = postmhl_build(net1, 40, 4, 0.1, 1.5)
        b = postmhl_build(net2, 40, 4, 0.1, 1.5)
        batch = generate_update_batch(net1, 12, 13)
        batch2 = UpdateBatch(list(batch.updates), batch_id=batch.batch_id)
        postmhl_update(a, batch)
        postmhl_update(b, batch2, workers=2)
        assert a.D == b.D
        for v in range(net1.n):
            assert a.tree.nodes[v].sc == b.tree.nodes[v].sc
            assert a.tree.nodes[v].dis == b.tree.nodes[v].dis
            assert a.tree.nodes[v].disB == b.tree.nodes[v].disB

    def test_pass_order_independence(self):
        # post and cross passes write disjoint regions, so running them in
        # either order on a stale partition converges to the same arrays
        net1 = random_network(80, 115, 15)
        net2 = net1.copy()
        a = postmhl_build(net1, 40, 4, 0.1, 1.5)
        b = postmhl_build(net2, 40, 4, 0.1, 1.5)
        for idx, order in ((a, ("post", "cross")), (b, ("cross", "post"))):
            batch = generate_update_batch(idx.graph, 10, 16)
            changes = []
            for upd in batch:
                old = idx.graph.weight(upd.u, upd.v)
                idx.graph.set_weight(upd.u, upd.v, upd.new_weight)
                changes.append((upd.u, upd.v, old, upd.new_weight))
            aff = idx.mhl.update_shortcuts(changes)
            from spindex.postmhl import _update_overlay_labels
            _update_overlay_labels(idx, aff)
            for i in range(idx.tdp.k):
                _refresh_D(idx, i)
                if order == ("post", "cross"):
                    _rebuild_partition(idx, i)
                    _rebuild_cross(idx, i)
                else:
                    _rebuild_cross(idx, i)
                    _rebuild_partition(idx, i)
        assert a.D == b.D
        for v in range(80):
            assert a.tree.nodes[v].dis == b.tree.nodes[v].dis
            assert a.tree.nodes[v].disB == b.tree.nodes[v].disB


class TestVerifyBoundaryArrays:
    def test_fresh_build_clean(self):
        net, idx = build_fixture(n=70, extra=100, seed=8)
        assert verify_boundary_arrays(idx) == []

    def test_after_batches_clean(self):
        net, idx = build_fixture(n=70, extra=100, seed=8)
        for b in range(5):
            postmhl_update(idx, generate_update_batch(net, 6, 700 + b))
        assert verify_boundary_arrays(idx) == []

    def test_detects_corruption(self):
        net, idx = build_fixture(n=70, extra=100, seed=8)
        victim = next(v for i in range(idx.tdp.k) for v in idx.tdp.parts[i]
                      if idx.tree.nodes[v].disB)
        idx.tree.nodes[victim].disB[0] += 1
        assert verify_boundary_arrays(idx) != []

    def test_leaves_arrays_repaired(self):
        net, idx = build_fixture(n=70, extra=100, seed=8)
        victim = next(v for i in range(idx.tdp.k) for v in idx.tdp.parts[i]
                      if idx.tree.nodes[v].disB)
        idx.tree.nodes[victim].disB[0] += 1
        verify_boundary_arrays(idx)
        rng = SplitMix64(18)
        for _ in range(20):
            s, t = rng.randrange(net.n), rng.randrange(net.n)
            assert postmhl_query(idx, s, t, stage=4) == \
                dijkstra_sssp(net, s)[t]
