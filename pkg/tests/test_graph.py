"""Tests for graphs, snapshots and temporal networks."""

from __future__ import annotations

from hypothesis import given, strategies as st
import numpy as np
import pytest

from ttergm.exceptions import FrozenGraphError, GraphError, NodeRangeError, SelfLoopError, UniverseMismatchError
from ttergm.services.graph import (
    CovariateTable,
    DirectedGraph,
    NodeCovariates,
    NodeKind,
    Snapshot,
    TemporalNetwork,
    dyad_iter,
    snapshot_diff,
    toggle_edge,
)

pytestmark = pytest.mark.unit


def test_toggle_reports_prior_state() -> None:
    graph = DirectedGraph(3)
    assert toggle_edge(graph, 0, 1).was_present is False
    assert graph.has_edge(0, 1)
    assert graph.edge_count == 1
    assert toggle_edge(graph, 0, 1).was_present is True
    assert not graph.has_edge(0, 1)
    assert graph.edge_count == 0


def test_self_loop_is_rejected_and_graph_unchanged() -> None:
    graph = DirectedGraph.from_edges(3, [(0, 1)])
    with pytest.raises(SelfLoopError):
        graph.toggle_edge(2, 2)
    assert graph.edges() == [(0, 1)]


def test_node_outside_universe() -> None:
    graph = DirectedGraph(3)
    with pytest.raises(NodeRangeError):
        graph.toggle_edge(0, 3)
    with pytest.raises(NodeRangeError):
        graph.successors(-1)


def test_adjacency_is_validated() -> None:
    with pytest.raises(SelfLoopError):
        DirectedGraph(2, np.eye(2, dtype=np.uint8))
    with pytest.raises(GraphError):
        DirectedGraph(2, np.zeros((3, 3), dtype=np.uint8))


def test_neighbors_and_degrees(cycle3: DirectedGraph) -> None:
    assert cycle3.successors(0).tolist() == [1]
    assert cycle3.predecessors(0).tolist() == [2]
    assert cycle3.out_degrees().tolist() == [1, 1, 1]
    assert cycle3.in_degrees().tolist() == [1, 1, 1]
    assert cycle3.density == pytest.approx(0.5)


def test_dyad_iter_order() -> None:
    assert list(dyad_iter(3)) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert len(list(dyad_iter(DirectedGraph(5)))) == 20


def test_snapshot_graph_is_immutable(cycle3: DirectedGraph) -> None:
    snapshot = Snapshot(cycle3, "2017-01")
    with pytest.raises(FrozenGraphError):
        snapshot.graph.toggle_edge(0, 2)
    # the source graph stays mutable
    cycle3.toggle_edge(0, 2)
    assert not snapshot.graph.has_edge(0, 2)
    copy = snapshot.graph.copy()
    copy.toggle_edge(0, 2)
    assert copy.has_edge(0, 2)


def test_snapshot_diff(cycle3: DirectedGraph) -> None:
    other = DirectedGraph.from_edges(3, [(0, 1), (1, 0)])
    diff = snapshot_diff(cycle3, other)
    assert diff.added == {(1, 0)}
    assert diff.removed == {(1, 2), (2, 0)}
    with pytest.raises(UniverseMismatchError):
        snapshot_diff(cycle3, DirectedGraph(4))


def test_labels_must_increase() -> None:
    graphs = [DirectedGraph(2), DirectedGraph(2)]
    with pytest.raises(GraphError):
        TemporalNetwork.from_graphs(graphs, labels=["2017-02", "2017-01"])


def test_universe_mismatch_between_snapshots() -> None:
    with pytest.raises(UniverseMismatchError):
        TemporalNetwork.from_graphs([DirectedGraph(2), DirectedGraph(3)])


def test_transitions_and_slice(small_network: TemporalNetwork) -> None:
    transitions = small_network.transitions()
    assert len(transitions) == 3
    assert transitions[0][1] == small_network.graphs[1]
    head = small_network.slice(0, 2)
    assert head.labels == small_network.labels[:2]


def test_user_projection_drops_repositories() -> None:
    cov = CovariateTable(
        (NodeCovariates(is_influencer=True, follower_count=9), NodeCovariates(), NodeCovariates(kind=NodeKind.REPO))
    )
    graph = DirectedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    network = TemporalNetwork(cov, (Snapshot(graph, "2017-01"),), ("a", "b", "r"))
    users = network.user_projection()
    assert users.n == 2
    assert users.node_ids == ("a", "b")
    assert users.graphs[0].edges() == [(0, 1)]
    assert users.covariates.influencers == [0]


def test_repositories_cannot_be_influencers() -> None:
    with pytest.raises(GraphError):
        NodeCovariates(is_influencer=True, kind=NodeKind.REPO)
    with pytest.raises(GraphError):
        NodeCovariates(follower_count=-1)


@given(edges=st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda dyad: dyad[0] != dyad[1])))
def test_edge_count_tracks_toggles(edges: set[tuple[int, int]]) -> None:
    graph = DirectedGraph(5)
    for u, v in sorted(edges):
        graph.toggle_edge(u, v)
    assert graph.edge_count == len(edges) == int(graph.adjacency.sum())
    assert set(graph.edges()) == edges


@given(perm=st.permutations(range(4)))
def test_permutation_preserves_degrees(perm: list[int]) -> None:
    graph = DirectedGraph.from_edges(4, [(0, 1), (1, 2), (2, 0), (0, 3)])
    permuted = graph.permuted(perm)
    assert permuted.edge_count == graph.edge_count
    for node in range(4):
        assert permuted.out_degrees()[perm[node]] == graph.out_degrees()[node]
        assert permuted.in_degrees()[perm[node]] == graph.in_degrees()[node]
