from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import complete_graph, cycle, path
from hopgame.graph import (
    UNREACHABLE,
    Demand,
    DemandError,
    Flow,
    FlowError,
    FormatError,
    GraphError,
    MultiGraph,
    ball,
    diam,
    dist,
    format_cut,
    format_graph,
    parse_cut,
    parse_demand,
    parse_graph,
)
from hopgame.graph.io import format_demand
from oracles import bfs_distances


@st.composite
def small_graphs(draw, max_n=9, max_m=14):
    n = draw(st.integers(1, max_n))
    if n == 1:
        return MultiGraph(1)
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])
    return MultiGraph(n, draw(st.lists(pairs, max_size=max_m)))


class TestMultiGraph:
    def test_rejects_self_loops_and_range(self):
        with pytest.raises(GraphError):
            MultiGraph(3, [(1, 1)])
        with pytest.raises(GraphError):
            MultiGraph(3, [(0, 3)])

    def test_parallel_edges_kept(self):
        G = MultiGraph(2, [(0, 1), (1, 0)])
        assert G.m == 2
        assert G.bundles == {(0, 1): 2}
        assert G.degree(0) == 2

    def test_without_keeps_other_copies(self):
        G = MultiGraph(2, [(0, 1), (0, 1)])
        assert G.without([0]).m == 1
        with pytest.raises(GraphError):
            G.without([5])

    def test_cut_edges_and_volume(self):
        G = path(4)
        assert G.cut_edges({0, 1}) == [1]
        assert G.volume({0, 1}) == 3


class TestDistances:
    def test_path(self):
        assert dist(path(3), 0, 2) == 2

    def test_self(self):
        assert dist(path(3), 1, 1) == 0

    def test_unreachable(self):
        G = MultiGraph(4, [(0, 1), (2, 3)])
        assert dist(G, 0, 3) is UNREACHABLE
        assert diam(G, [0, 3]) is UNREACHABLE

    def test_ball(self):
        assert ball(path(5), 2, 0) == {2}
        assert ball(path(5), 2, 1) == {1, 2, 3}
        with pytest.raises(GraphError):
            ball(path(5), 2, -1)

    def test_diameters(self):
        assert diam(complete_graph(4), range(4)) == 1
        assert diam(cycle(5), range(5)) == 2

    def test_weak_diameter_uses_whole_graph(self):
        # 0 and 2 are two apart through 1 even though 1 is not in the set.
        assert diam(path(3), [0, 2]) == 2

    @given(small_graphs())
    def test_distance_matrix_matches_bfs(self, G):
        D = G.distance_matrix
        for s in range(G.n):
            ref = bfs_distances(G.n, G.edges, s)
            assert [(-1 if x is None else x) for x in ref] == D[s].tolist()
        assert (D == D.T).all()


class TestDemandAndFlow:
    def test_demand_validation(self):
        with pytest.raises(DemandError):
            Demand({(0, 1): -1.0})
        D = Demand({(0, 1): 0.5, (1, 2): 0.0})
        assert D.pairs == [(0, 1)]
        assert D.size == 0.5
        with pytest.raises(DemandError):
            Demand({(0, 7): 1.0}).check_endpoints(path(3))

    def test_unit_and_hop_predicates(self):
        assert Demand({(0, 1): 0.5, (0, 2): 0.5}).is_unit()
        assert not Demand({(0, 1): 0.75, (0, 2): 0.5}).is_unit()
        assert Demand({(0, 2): 1.0}).is_h_hop(path(3), 2)
        assert not Demand({(0, 2): 1.0}).is_h_hop(path(3), 1)

    def test_flow_validation(self):
        with pytest.raises(FlowError):
            Flow({(0, 1, 0): 1.0})
        with pytest.raises(FlowError):
            Flow({(0, 1): 0.0})
        with pytest.raises(FlowError):
            Flow({(0, 2): 1.0}).congestion(path(3))

    def test_flow_statistics(self):
        F = Flow({(0, 1, 2): 0.5, (0, 2): 0.5})
        G = MultiGraph(3, [(0, 1), (1, 2), (0, 2), (0, 2)])
        assert F.hop() == 2
        assert F.routed_demand().entries == {(0, 2): 1.0}
        assert F.congestion(G) == pytest.approx(0.5)


class TestFormats:
    def test_graph_round_trip(self):
        G = MultiGraph(4, [(0, 1), (0, 1), (2, 3)])
        assert parse_graph(format_graph(G)) == G

    def test_comments_and_blank_lines(self):
        G = parse_graph("# header\n3 2\n\n0 1  # first\n1 2\n")
        assert G.edges == ((0, 1), (1, 2))

    @pytest.mark.parametrize("text", ["", "3\n", "3 2\n0 1\n", "2 1\n0 x\n", "2 1\n0 0\n", "2 1\n0 5\n"])
    def test_malformed_graphs(self, text):
        with pytest.raises(FormatError):
            parse_graph(text)

    def test_demand_round_trip(self):
        D = Demand({(0, 1): 0.125, (2, 0): 1.0})
        assert parse_demand(format_demand(D)) == D
        with pytest.raises(FormatError):
            parse_demand("0 1\n")
        with pytest.raises(FormatError):
            parse_demand("0 1 -2\n")

    def test_cut_multiplicity(self):
        G = MultiGraph(3, [(0, 1), (0, 1), (1, 2)])
        assert parse_cut("1 0\n0 1\n", G) == [0, 1]
        assert parse_cut(format_cut(G, [1, 2]), G) == [0, 2]
        with pytest.raises(FormatError):
            parse_cut("0 1\n0 1\n0 1\n", G)

    @given(small_graphs())
    def test_round_trip_property(self, G):
        assert parse_graph(format_graph(G)) == G
