import json
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BOW, IV, graph
from scmid.graph import GraphError, GraphSyntaxError, MixedGraph, graph_from_json, missing_pairs, parents, parse_graph


def test_parse_iv():
    g, labels = parse_graph(IV)
    assert g.n == 3
    assert g.directed == {(1, 2), (2, 3)}
    assert g.bidirected == {(2, 3)}
    assert labels == [1, 2, 3]


def test_parse_without_spaces_and_newlines():
    g = graph("1->2\n2->3\n2<->3")
    assert g == graph(IV)


def test_parse_empty_graph_with_header():
    g = graph("nodes: 1")
    assert (g.n, g.directed, g.bidirected) == (1, frozenset(), frozenset())


def test_parse_directed_cycle_rejected():
    with pytest.raises(GraphError, match="cycle"):
        parse_graph("1 -> 2; 2 -> 1")


def test_cyclic_flag_accepts_cycle():
    g = graph("cyclic: true\n1 -> 2; 2 -> 1")
    assert g.cyclic and g.directed == {(1, 2), (2, 1)}
    assert graph("1 -> 2; 2 -> 1", cyclic=True).cyclic


def test_self_loops_rejected():
    with pytest.raises(GraphError):
        parse_graph("1 -> 1")
    with pytest.raises(GraphError):
        parse_graph("1 <-> 1")


def test_out_of_range_with_header():
    with pytest.raises(GraphError, match="out of range"):
        parse_graph("nodes: 2\n1 -> 3")


def test_syntax_error_reports_position():
    with pytest.raises(GraphSyntaxError) as exc:
        parse_graph("1 -> 2\n2 => 3")
    assert exc.value.line == 2 and exc.value.column == 1


def test_topological_relabeling_reports_permutation():
    g, labels = parse_graph("c -> b; b -> a; a <-> c")
    assert all(i < j for i, j in g.directed)
    assert labels == ["c", "b", "a"]
    assert g.bidirected == {(1, 3)}


def test_numeric_labels_relabeled_when_unsorted():
    g, labels = parse_graph("3 -> 1")
    assert g.directed == {(1, 2)}
    assert labels == [3, 1]


def test_json_format():
    g, _ = parse_graph(json.dumps({"n": 3, "directed": [[1, 2], [2, 3]], "bidirected": [[3, 2]], "cyclic": False}))
    assert g == graph(IV)


def test_missing_pairs_examples():
    assert missing_pairs(graph(IV)) == [(1, 2), (1, 3)]
    assert missing_pairs(graph(BOW)) == []
    assert missing_pairs(MixedGraph(3)) == [(1, 2), (1, 3), (2, 3)]


def test_parents_examples():
    g = graph(IV)
    assert parents(g, 3) == [2]
    assert parents(g, 1) == []
    with pytest.raises(GraphError):
        parents(g, 4)


@st.composite
def mixed_graphs(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    pairs = list(combinations(range(1, n + 1), 2))
    d = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs))) if pairs else set()
    b = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs))) if pairs else set()
    return MixedGraph(n, frozenset(d), frozenset(b))


@settings(max_examples=60, deadline=None)
@given(mixed_graphs())
def test_dsl_and_json_roundtrip(g):
    assert graph(g.to_dsl()) == g
    assert graph_from_json(json.loads(json.dumps(g.to_json())))[0] == g


@settings(max_examples=60, deadline=None)
@given(mixed_graphs())
def test_missing_pairs_complement(g):
    miss = missing_pairs(g)
    assert len(miss) + len(g.bidirected) == g.n * (g.n - 1) // 2
    assert miss == sorted(miss)
    assert not set(miss) & g.bidirected
