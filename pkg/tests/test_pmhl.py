import pytest
from hypothesis import given, settings, strategies as st

from spindex.graphs import (SplitMix64, UNREACHABLE, apply_updates,
                            dijkstra_sssp, generate_update_batch,
                            random_network)
from spindex.pmhl import (CrossTree, cross_update_frontier, flat_labels,
                          pch_query, pmhl_build, pmhl_query, pmhl_update)


def build_fixture(n=90, extra=130, k=3, seed=4):
    net = random_network(n, extra, seed)
    return net, pmhl_build(net, k, seed)


class TestBuild:
    def test_k_one_degenerate(self):
        net = random_network(40, 60, 1)
        idx = pmhl_build(net, 1, 2)
        assert idx.overlay_graph.m == 0
        rng = SplitMix64(5)
        for _ in range(20):
            s, t = rng.randrange(40), rng.randrange(40)
            want = dijkstra_sssp(net, s)[t]
            for stage in range(1, 6):
                assert pmhl_query(idx, s, t, stage=stage) == want

    def test_build_steps_recorded(self):
        net, idx = build_fixture(n=30, extra=40, seed=7)
        for key in ("partition", "step1", "step2", "step3", "step5", "step6"):
            assert key in idx.build_steps
        offs = [idx.build_steps[k] for k in
                ("partition", "step1", "step2", "step3", "step5", "step6")]
        assert offs == sorted(offs)

    def test_overlay_edges_preserve_distances(self):
        net, idx = build_fixture()
        bset = sorted(idx.bset)
        for b in bset[:10]:
            ov_rows = dijkstra_sssp(idx.overlay_graph, b)
            rows = dijkstra_sssp(net, b)
            for c in bset:
                assert ov_rows[c] == rows[c]

    def test_overlay_edge_weights_dominate_distances(self):
        net, idx = build_fixture()
        cache = {}
        for a, c, w in idx.overlay_graph.edges():
            if a not in cache:
                cache[a] = dijkstra_sssp(net, a)
            assert w >= cache[a][c]


class TestQueries:
    def test_same_vertex_all_stages(self):
        net, idx = build_fixture(n=30, extra=40)
        for stage in range(1, 6):
            assert pmhl_query(idx, 11, 11, stage=stage) == 0

    def test_pch_matches_oracle(self):
        net, idx = build_fixture()
        rng = SplitMix64(8)
        for _ in range(40):
            s, t = rng.randrange(net.n), rng.randrange(net.n)
            assert pch_query(idx, s, t) == dijkstra_sssp(net, s)[t]

    @given(seed=st.integers(0, 100))
    @settings(max_examples=8, deadline=None)
    def test_all_stages_match_oracle(self, seed):
        net = random_network(50, 75, seed)
        idx = pmhl_build(net, 3, seed)
        rng = SplitMix64(seed + 5)
        for _ in range(12):
            s, t = rng.randrange(50), rng.randrange(50)
            want = dijkstra_sssp(net, s)[t]
            for stage in range(1, 6):
                assert pmhl_query(idx, s, t, stage=stage) == want, \
                    f"stage {stage} pair ({s},{t})"


class TestMaintenance:
    def test_empty_batch(self):
        from spindex.graphs import UpdateBatch
        net, idx = build_fixture(n=40, extra=55)
        rec = pmhl_update(idx, UpdateBatch([]))
        assert idx.stage == 5
        assert all(v == 0 for v in rec.touched.values())

    def test_publish_offsets_monotone(self):
        net, idx = build_fixture()
        rec = pmhl_update(idx, generate_update_batch(net, 10, 31))
        offs = [rec.publish_offsets[q] for q in ("Q1", "Q2", "Q3", "Q4", "Q5")]
        assert offs == sorted(offs)
        assert idx.stage == 5

    def test_queries_exact_after_batches(self):
        net, idx = build_fixture()
        rng = SplitMix64(9)
        for b in range(6):
            pmhl_update(idx, generate_update_batch(net, 8, 300 + b))
            for _ in range(10):
                s, t = rng.randrange(net.n), rng.randrange(net.n)
                want = dijkstra_sssp(net, s)[t]
                for stage in range(1, 6):
                    assert pmhl_query(idx, s, t, stage=stage) == want

    def test_update_equals_rebuild(self):
        net, idx = build_fixture(n=70, extra=100, seed=6)
        for b in range(8):
            pmhl_update(idx, generate_update_batch(net, 6, 400 + b))
        fresh = pmhl_build(net, 3, 6, partitioning=idx.P, order=idx.order)
        for i in range(idx.P.k):
            for v in range(net.n):
                assert idx.L[i].tree.nodes[v].sc == fresh.L[i].tree.nodes[v].sc
                assert idx.L[i].tree.nodes[v].dis == fresh.L[i].tree.nodes[v].dis
                assert idx.Lp[i].tree.nodes[v].sc == fresh.Lp[i].tree.nodes[v].sc
                assert idx.Lp[i].tree.nodes[v].dis == fresh.Lp[i].tree.nodes[v].dis
        for v in range(net.n):
            assert idx.Lt.tree.nodes[v].sc == fresh.Lt.tree.nodes[v].sc
            assert idx.Lt.tree.nodes[v].dis == fresh.Lt.tree.nodes[v].dis
            assert idx.cross.dis_of(v) == fresh.cross.dis_of(v)
        assert list(idx.overlay_graph.edges()) == \
            list(fresh.overlay_graph.edges())

    def test_parallel_matches_serial(self):
        net1 = random_network(60, 90, 11)
        net2 = net1.copy()
        a = pmhl_build(net1, 3, 11)
        b = pmhl_build(net2, 3, 11, workers=2)
        batch = generate_update_batch(net1, 10, 12)
        from spindex.graphs import UpdateBatch, EdgeUpdate
        batch2 = UpdateBatch(list(batch.updates), batch_id=batch.batch_id)
        pmhl_update(a, batch)
        pmhl_update(b, batch2, workers=2)
        for v in range(net1.n):
            assert a.Lt.tree.nodes[v].dis == b.Lt.tree.nodes[v].dis
            assert a.cross.dis_of(v) == b.cross.dis_of(v)
            for i in range(3):
                assert a.L[i].tree.nodes[v].dis == b.L[i].tree.nodes[v].dis
                assert a.Lp[i].tree.nodes[v].dis == b.Lp[i].tree.nodes[v].dis


class TestCrossTree:
    def test_lca_of_cross_pair_is_boundary(self):
        net, idx = build_fixture()
        ct = idx.cross
        rng = SplitMix64(14)
        for _ in range(40):
            s, t = rng.randrange(net.n), rng.randrange(net.n)
            if idx.P.part[s] == idx.P.part[t]:
                continue
            x = ct.lca(s, t)
            if x is not None:
                assert ct.is_overlay[x]

    def test_cross_dis_equals_tree_distances(self):
        net, idx = build_fixture(n=60, extra=85, seed=3)
        ct = idx.cross
        for v in range(net.n):
            if ct.is_overlay[v]:
                continue
            rows = dijkstra_sssp(net, v)
            dis = ct.dis_of(v)
            for j, a in enumerate(ct.anc[v]):
                assert dis[j] == rows[a]


class TestCrossUpdateFrontier:
    def test_singleton(self):
        ct = CrossTree(3)
        ct.parent = [None, 0, 1]
        ct.children = [[1], [2], []]
        ct.roots = [0]
        ct.anc = [[], [0], [0, 1]]
        ct.depth = [0, 1, 2]
        assert cross_update_frontier([2], ct) == [2]

    def test_ancestor_absorbs_descendant(self):
        ct = CrossTree(4)
        ct.parent = [None, 0, 1, 1]
        ct.children = [[1], [2, 3], [], []]
        ct.roots = [0]
        ct.anc = [[], [0], [0, 1], [0, 1]]
        ct.depth = [0, 1, 2, 2]
        assert cross_update_frontier([1, 2, 3], ct) == [1]
        assert sorted(cross_update_frontier([2, 3], ct)) == [2, 3]

    def test_result_is_antichain(self):
        net, idx = build_fixture()
        ct = idx.cross
        rng = SplitMix64(15)
        verts = [rng.randrange(net.n) for _ in range(20)]
        roots = cross_update_frontier(verts, ct)
        for a in roots:
            for b in roots:
                if a != b:
                    assert not (ct.comp[a] == ct.comp[b]
                                and a in ct.anc[b])


class TestFlatLabels:
    def test_cover_property(self):
        net = random_network(40, 60, 16)
        idx = pmhl_build(net, 3, 16)
        labels = flat_labels(net, idx.order)
        rng = SplitMix64(17)
        for _ in range(60):
            s, t = rng.randrange(40), rng.randrange(40)
            best = min((d + labels[t][h]
                        for h, d in labels[s].items() if h in labels[t]),
                       default=UNREACHABLE)
            assert best == dijkstra_sssp(net, s)[t]
