import pytest
from hypothesis import given, settings, strategies as st

from spindex.graphs import RoadNetwork, random_network
from spindex.treedec import (TreeDecomposition, VertexOrder, load_snapshot,
                             mde_decompose, save_snapshot,
                             validate_decomposition)


def path_graph(n, w=1):
    net = RoadNetwork(n)
    for i in range(n - 1):
        net.add_edge(i, i + 1, w)
    return net


class TestMDE:
    def test_star(self):
        # K_{1,3} with hub 3: leaves contract first, hub becomes the root.
        net = RoadNetwork(4)
        for leaf in range(3):
            net.add_edge(leaf, 3, leaf + 1)
        tree, order = mde_decompose(net)
        assert tree.roots == [3]
        for leaf in range(3):
            assert tree.nodes[leaf].neigh == [3]
            assert tree.nodes[leaf].sc == [leaf + 1]
            assert tree.nodes[leaf].depth == 1
        assert tree.height == 2

    def test_triangle_shortcut_undercut(self):
        # Weights 1,1,5: contracting a degree-2 vertex relaxes the long edge.
        net = RoadNetwork(3)
        net.add_edge(0, 1, 1)
        net.add_edge(0, 2, 1)
        net.add_edge(1, 2, 5)
        tree, order = mde_decompose(net)
        first = order.inverse[0]
        assert first == 0  # all degree 2, smallest id wins the tie
        node = tree.nodes[0]
        assert node.neigh == [2, 1] or node.neigh == [1, 2]
        others = [v for v in (1, 2) if v != 0]
        # the shortcut between 1 and 2 becomes 1+1=2
        second = order.inverse[1]
        assert tree.nodes[second].sc == [2]

    def test_path_graph_width_one(self):
        tree, order = mde_decompose(path_graph(9))
        assert tree.width == 1
        assert validate_decomposition(path_graph(9), tree) == []

    def test_parent_is_lowest_rank_bag_member(self):
        net = random_network(40, 55, 3)
        tree, order = mde_decompose(net)
        for v in range(net.n):
            node = tree.nodes[v]
            if node.neigh:
                ranks = [order.rank[u] for u in node.neigh]
                assert order.rank[node.parent] == min(ranks)
                assert ranks == sorted(ranks)

    def test_bag_members_are_ancestors(self):
        net = random_network(40, 55, 4)
        tree, _ = mde_decompose(net)
        for v in range(net.n):
            for u in tree.nodes[v].neigh:
                assert tree.is_ancestor(u, v)

    def test_deterministic(self):
        net = random_network(30, 40, 5)
        t1, o1 = mde_decompose(net)
        t2, o2 = mde_decompose(net)
        assert o1.rank == o2.rank
        for v in range(net.n):
            assert t1.nodes[v].neigh == t2.nodes[v].neigh
            assert t1.nodes[v].sc == t2.nodes[v].sc

    def test_pinned_order_respected(self):
        net = random_network(20, 25, 6)
        pinned = VertexOrder(list(reversed(range(20))))
        tree, order = mde_decompose(net, pinned_order=pinned)
        assert order.rank == pinned.rank
        assert validate_decomposition(net, tree) == []

    def test_non_bijective_order_rejected(self):
        with pytest.raises(ValueError):
            VertexOrder([0, 0, 1])


class TestLCA:
    def test_self_and_ancestor(self):
        net = random_network(25, 35, 7)
        tree, _ = mde_decompose(net)
        for v in range(net.n):
            assert tree.lca(v, v) == v
            node = tree.nodes[v]
            for a in node.anc:
                assert tree.lca(a, v) == a

    def test_cross_component_none(self):
        net = RoadNetwork(4)
        net.add_edge(0, 1, 1)
        net.add_edge(2, 3, 1)
        tree, _ = mde_decompose(net)
        assert tree.lca(0, 2) is None

    def test_matches_naive(self):
        net = random_network(40, 50, 8)
        tree, _ = mde_decompose(net)
        for u in range(0, 40, 3):
            for v in range(1, 40, 5):
                anc_u = set(tree.nodes[u].anc) | {u}
                cand = [x for x in tree.nodes[v].anc + [v] if x in anc_u]
                naive = max(cand, key=lambda x: tree.nodes[x].depth)
                assert tree.lca(u, v) == naive


class TestValidation:
    @given(seed=st.integers(0, 500))
    @settings(max_examples=20, deadline=None)
    def test_random_graphs_validate(self, seed):
        net = random_network(24, 30, seed)
        tree, _ = mde_decompose(net)
        assert validate_decomposition(net, tree) == []

    def test_detects_missing_edge_cover(self):
        net = path_graph(5)
        tree, _ = mde_decompose(net)
        net.add_edge(0, 4, 9)  # new edge the tree never saw
        msgs = validate_decomposition(net, tree)
        assert any("not covered" in m for m in msgs)

    def test_detects_undercutting_shortcut(self):
        net = path_graph(5)
        tree, _ = mde_decompose(net)
        v = next(v for v in range(5) if tree.nodes[v].sc)
        tree.nodes[v].sc[0] = 0
        msgs = validate_decomposition(net, tree)
        assert any("undercuts" in m for m in msgs)

    def test_detects_disconnected_occurrence(self):
        net = random_network(12, 16, 9)
        tree, _ = mde_decompose(net)
        victim = max(range(12), key=lambda v: tree.nodes[v].depth)
        node = tree.nodes[victim]
        root = tree.roots[0]
        if root not in node.neigh and node.parent != root:
            node.neigh.insert(0, root)
            node.sc.insert(0, 1)
        msgs = validate_decomposition(net, tree)
        assert msgs


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        net = random_network(30, 45, 10)
        tree, order = mde_decompose(net)
        p = tmp_path / "t.snap"
        save_snapshot(tree, p)
        back = load_snapshot(p)
        assert back.order.rank == order.rank
        assert back.roots == tree.roots
        for v in range(net.n):
            a, b = tree.nodes[v], back.nodes[v]
            assert a.neigh == b.neigh
            assert a.sc == b.sc
            assert a.anc == b.anc
            assert a.pos == b.pos
        assert back.lca(0, net.n - 1) == tree.lca(0, net.n - 1)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "t.snap"
        p.write_bytes(b"NOTASNAP" + b"\x00" * 16)
        with pytest.raises(ValueError, match="header"):
            load_snapshot(p)

    def test_truncated_rejected(self, tmp_path):
        net = random_network(20, 25, 11)
        tree, _ = mde_decompose(net)
        p = tmp_path / "t.snap"
        save_snapshot(tree, p)
        data = p.read_bytes()
        p.write_bytes(data[: len(data) // 2])
        with pytest.raises(Exception):
            load_snapshot(p)
