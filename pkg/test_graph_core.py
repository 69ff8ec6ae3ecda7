"""
测试随机图加载、权重采样与期望权重 oracle
"""
import math

import numpy as np
import pytest

from graph_core import (
    GraphFormatError, GraphValidationError, UnionFind, UnknownEdgeError, UnreachableError,
    WeightDistribution, all_simple_paths, all_spanning_trees, expected_graph, expected_weight,
    is_spanning_tree, load_graph, load_graph_file, make_rng, oracle_min_spanning_tree,
    oracle_shortest_path, path_edge_ids, sample_edge, shortest_path_on_weights,
)

GRAPH2_OPTIMUM = (1, 4, 12, 14, 15)
ALEX1A_OPTIMUM = [(1, 3), (2, 3), (2, 5), (3, 4), (5, 6), (6, 7), (7, 8)]


@pytest.fixture(scope='module')
def graph2():
    return load_graph_file('graph2')


@pytest.fixture(scope='module')
def alex1a():
    return load_graph_file('alex1a')


def test_bundled_datasets_load(graph2, alex1a):
    assert graph2.directed and graph2.node_count == 15 and len(graph2.edges) == 42
    assert not alex1a.directed and alex1a.node_count == 8 and len(alex1a.edges) == 14


def test_expected_weight_of_edges(graph2, alex1a):
    assert expected_weight(graph2.edge(graph2.edge_id(1, 4)).dist) == pytest.approx(12.8)
    assert expected_weight(alex1a.edge(alex1a.edge_id(1, 2)).dist) == pytest.approx(71.2)
    # 无向图两个方向都能查到同一条边
    assert alex1a.edge_id(3, 1) == alex1a.edge_id(1, 3)


def test_expected_graph_follows_file_order():
    g = load_graph("graph t directed 3\nedge 1 2 4:1\nedge 2 3 1:0.5 3:0.5\n")
    assert expected_graph(g) == [4.0, 2.0]


def test_distribution_statistics():
    dist = WeightDistribution(((11, 0.4), (13, 0.4), (16, 0.2)))
    assert dist.expected() == pytest.approx(12.8)
    assert dist.std() == pytest.approx(math.sqrt(3.36))
    assert dist.mean_absolute_deviation() == pytest.approx(0.4 * 1.8 + 0.4 * 0.2 + 0.2 * 3.2)


def test_distribution_rejects_bad_probability_sum():
    with pytest.raises(GraphValidationError, match="probability sum"):
        WeightDistribution(((10, 0.5), (20, 0.4)))


def test_distribution_rejects_nonpositive_weight():
    with pytest.raises(GraphValidationError):
        WeightDistribution(((0, 1.0),))


def test_sampling_stays_in_support_and_matches_mean(graph2):
    rng = make_rng(42)
    edge_id = graph2.edge_id(1, 4)
    draws = [sample_edge(graph2, edge_id, rng) for _ in range(10000)]
    assert set(draws) <= {11.0, 13.0, 16.0}
    assert np.mean(draws) == pytest.approx(12.8, abs=0.1)


def test_same_seed_same_stream(graph2):
    a = [sample_edge(graph2, e.id, make_rng(7)) for e in graph2.edges]
    b = [sample_edge(graph2, e.id, make_rng(7)) for e in graph2.edges]
    assert a == b


def test_format_errors_carry_line_number():
    with pytest.raises(GraphFormatError) as exc:
        load_graph("graph t directed 3\nedge 1 2 x:y\n")
    assert exc.value.line_number == 2

    with pytest.raises(GraphFormatError):
        load_graph("edge 1 2 4:1\n")
    with pytest.raises(GraphFormatError):
        load_graph("graph t sideways 3\n")
    with pytest.raises(GraphFormatError):
        load_graph("graph t directed 3\nvertex 1\n")


@pytest.mark.parametrize('text', [
    "graph t directed 3\nedge 1 1 4:1\n",
    "graph t directed 3\nedge 1 4 4:1\n",
    "graph t directed 3\nedge 1 2 4:1\nedge 1 2 5:1\n",
    "graph t undirected 3\nedge 1 2 4:1\nedge 2 1 5:1\n",
    "graph t directed 3\nedge 1 2 4:0.5 5:0.4\n",
    "graph t directed 3\nedge 1 2 nan:1\n",
    "graph t directed 3\nedge 1 2 inf:1\n",
    "graph t directed 3\nedge 1 2 4:0.5 -inf:0.5\n",
])
def test_validation_errors(text):
    with pytest.raises(GraphValidationError):
        load_graph(text)


def test_comments_and_blank_lines_are_ignored():
    g = load_graph("# 注释\n\ngraph t undirected 2  # 行尾注释\nedge 1 2 3:1\n")
    assert g.name == 't' and len(g.edges) == 1


def test_unknown_edge_lookup(graph2):
    with pytest.raises(UnknownEdgeError):
        graph2.edge_id(15, 1)
    with pytest.raises(UnknownEdgeError):
        graph2.edge(99)


def test_incident_edges_are_out_edges_in_file_order(graph2):
    heads = [graph2.edges[e].head for e in graph2.incident_edges(4)]
    assert heads == [9, 12, 8]


def test_missing_dataset():
    with pytest.raises(FileNotFoundError):
        load_graph_file('no-such-dataset')


def test_union_find():
    uf = UnionFind(4)
    assert uf.union(1, 2)
    assert uf.union(3, 4)
    assert not uf.connected(1, 3)
    assert uf.union(2, 4)
    assert uf.connected(1, 3)
    assert not uf.union(1, 4)


def test_graph2_shortest_path_oracle(graph2):
    path, weight = oracle_shortest_path(graph2, 1, 15)
    assert path == GRAPH2_OPTIMUM
    assert weight == pytest.approx(66.0)


def test_graph2_oracle_matches_exhaustive_enumeration(graph2):
    expected = expected_graph(graph2)
    costs = {
        path: math.fsum(expected[e] for e in path_edge_ids(graph2, path))
        for path in all_simple_paths(graph2, 1, 15)
    }
    best = min(costs.values())
    assert best == pytest.approx(66.0)
    assert [p for p, c in costs.items() if abs(c - best) < 1e-9] == [GRAPH2_OPTIMUM]


def test_alex1a_spanning_tree_oracle(alex1a):
    edges, weight = oracle_min_spanning_tree(alex1a)
    assert edges == ALEX1A_OPTIMUM
    assert weight == pytest.approx(176.9)


def test_alex1a_oracle_matches_exhaustive_enumeration(alex1a):
    expected = expected_graph(alex1a)
    trees = list(all_spanning_trees(alex1a))
    costs = [math.fsum(expected[e] for e in tree) for tree in trees]
    best = min(costs)
    assert best == pytest.approx(176.9)
    winners = [tree for tree, c in zip(trees, costs) if abs(c - best) < 1e-9]
    assert len(winners) == 1
    assert sorted(alex1a.edges[e].key for e in winners[0]) == ALEX1A_OPTIMUM
    assert all(is_spanning_tree(alex1a, tree) for tree in trees)


def test_is_spanning_tree_rejects_cycles(alex1a):
    cycle = [alex1a.edge_id(1, 2), alex1a.edge_id(2, 3), alex1a.edge_id(1, 3)]
    others = [alex1a.edge_id(3, 4), alex1a.edge_id(5, 6), alex1a.edge_id(6, 7), alex1a.edge_id(7, 8)]
    assert not is_spanning_tree(alex1a, cycle + others)


def test_shortest_path_ties_break_lexicographically():
    g = load_graph("graph t directed 4\nedge 1 3 1:1\nedge 1 2 1:1\nedge 3 4 1:1\nedge 2 4 1:1\n")
    path, weight = oracle_shortest_path(g, 1, 4)
    assert path == (1, 2, 4) and weight == 2.0


def test_shortest_path_to_self_is_empty(graph2):
    assert shortest_path_on_weights(graph2, expected_graph(graph2), 3, 3) == ((), 0.0)


def test_unreachable_destination():
    g = load_graph("graph t directed 3\nedge 1 2 1:1\n")
    with pytest.raises(UnreachableError):
        oracle_shortest_path(g, 1, 3)


def test_spanning_tree_oracle_errors(graph2):
    with pytest.raises(GraphValidationError):
        oracle_min_spanning_tree(graph2)
    disconnected = load_graph("graph t undirected 4\nedge 1 2 1:1\nedge 3 4 1:1\n")
    with pytest.raises(UnreachableError):
        oracle_min_spanning_tree(disconnected)
