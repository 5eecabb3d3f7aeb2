"""Directed graphs and temporal networks over a fixed node universe."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
import enum
from itertools import pairwise
import logging
from typing import Any, NamedTuple

import networkx as nx
import numpy as np

from ..exceptions import FrozenGraphError, GraphError, NodeRangeError, SelfLoopError, UniverseMismatchError

_LOGGER = logging.getLogger(__name__)

NodeId = int
Dyad = tuple[int, int]


class NodeKind(enum.Enum):
    """Kind of a node in the ingested network."""

    USER = "User"
    REPO = "Repo"


@dataclass(frozen=True)
class NodeCovariates:
    """Covariates attached to one node."""

    is_influencer: bool = False
    follower_count: int = 0
    kind: NodeKind = NodeKind.USER

    def __post_init__(self) -> None:
        """Validate the covariate invariants."""
        if self.follower_count < 0:
            raise GraphError(f"follower_count must be non-negative, got {self.follower_count}")
        if self.is_influencer and self.kind is not NodeKind.USER:
            raise GraphError("only User nodes can be influencers")
        if self.kind is NodeKind.REPO and self.follower_count != 0:
            raise GraphError("Repo nodes carry no followers")


@dataclass(frozen=True)
class CovariateTable:
    """Covariates for every node of a universe, indexed by NodeId."""

    nodes: tuple[NodeCovariates, ...]

    @classmethod
    def uniform(cls, n: int) -> CovariateTable:
        """Return a table of ``n`` plain users."""
        return cls(tuple(NodeCovariates() for _ in range(n)))

    @classmethod
    def from_influencers(cls, n: int, influencers: Iterable[int]) -> CovariateTable:
        """Return a table of ``n`` users where ``influencers`` are flagged."""
        flagged = set(influencers)
        for node in flagged:
            if not 0 <= node < n:
                raise NodeRangeError(f"influencer {node} outside universe of {n} nodes")
        return cls(tuple(NodeCovariates(is_influencer=index in flagged) for index in range(n)))

    @property
    def n(self) -> int:
        """Return the universe size."""
        return len(self.nodes)

    @property
    def influencer_mask(self) -> np.ndarray:
        """Return a uint8 vector, 1 for influencers."""
        return np.fromiter((node.is_influencer for node in self.nodes), dtype=np.uint8, count=len(self.nodes))

    @property
    def influencers(self) -> list[int]:
        """Return the influencer node ids in index order."""
        return [index for index, node in enumerate(self.nodes) if node.is_influencer]

    @property
    def user_indices(self) -> list[int]:
        """Return the User node ids in index order."""
        return [index for index, node in enumerate(self.nodes) if node.kind is NodeKind.USER]

    def subset(self, indices: Sequence[int]) -> CovariateTable:
        """Return the table restricted to ``indices`` (in that order)."""
        return CovariateTable(tuple(self.nodes[index] for index in indices))


class ToggleReport(NamedTuple):
    """Outcome of an edge toggle."""

    was_present: bool


class SnapshotDiff(NamedTuple):
    """Edges gained and lost between two snapshots."""

    added: frozenset[Dyad]
    removed: frozenset[Dyad]


class DirectedGraph:
    """Directed, unweighted graph on nodes ``0..n-1`` without self-loops.

    Adjacency is a dense uint8 matrix: row ``u`` is the out-neighbor set of
    ``u`` and column ``v`` the in-neighbor set of ``v``, so both directions are
    answered in constant time. The edge count is cached and kept in step with
    every toggle.
    """

    __slots__ = ("_adj", "_edge_count")

    def __init__(self, n: int, adjacency: np.ndarray | None = None) -> None:
        """Initialize an empty graph, or one backed by a validated adjacency matrix."""
        if n < 0:
            raise GraphError(f"node count must be non-negative, got {n}")
        if adjacency is None:
            self._adj = np.zeros((n, n), dtype=np.uint8)
        else:
            adj = np.array(adjacency, dtype=np.uint8, copy=True, order="C")
            if adj.shape != (n, n):
                raise GraphError(f"adjacency shape {adj.shape} does not match n={n}")
            if np.any(adj > 1):
                raise GraphError("adjacency entries must be 0 or 1")
            if n and np.any(np.diagonal(adj)):
                raise SelfLoopError("adjacency has self-loops")
            self._adj = adj
        self._edge_count = int(self._adj.sum(dtype=np.int64))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Dyad]) -> DirectedGraph:
        """Build a graph from an iterable of ``(u, v)`` pairs."""
        graph = cls(n)
        for u, v in edges:
            graph.check_dyad(u, v)
            if not graph._adj[u, v]:
                graph._adj[u, v] = 1
                graph._edge_count += 1
        return graph

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray) -> DirectedGraph:
        """Build a graph from a square 0/1 matrix."""
        return cls(int(np.shape(adjacency)[0]), adjacency)

    @classmethod
    def complete(cls, n: int) -> DirectedGraph:
        """Return the graph with all ``n(n-1)`` arcs."""
        adj = np.ones((n, n), dtype=np.uint8)
        np.fill_diagonal(adj, 0)
        return cls(n, adj)

    @property
    def n(self) -> int:
        """Return the number of nodes."""
        return self._adj.shape[0]

    @property
    def edge_count(self) -> int:
        """Return the cached number of arcs."""
        return self._edge_count

    @property
    def n_dyads(self) -> int:
        """Return the number of ordered dyads ``n(n-1)``."""
        return self.n * (self.n - 1)

    @property
    def adjacency(self) -> np.ndarray:
        """Return the adjacency matrix (read-only for frozen graphs)."""
        return self._adj

    @property
    def is_frozen(self) -> bool:
        """Return True if the graph is an immutable snapshot."""
        return not self._adj.flags.writeable

    @property
    def density(self) -> float:
        """Return ``edge_count / n(n-1)``, 0 for graphs with fewer than two nodes."""
        return self._edge_count / self.n_dyads if self.n_dyads else 0.0

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.n:
            raise NodeRangeError(f"node {node} outside universe of {self.n} nodes")

    def check_dyad(self, u: int, v: int) -> None:
        """Raise if ``(u, v)`` is a self-loop or leaves the universe."""
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise SelfLoopError(f"self-loop ({u}, {v}) is not allowed")

    def has_edge(self, u: int, v: int) -> bool:
        """Return True if the arc ``u -> v`` is present."""
        self.check_dyad(u, v)
        return bool(self._adj[u, v])

    def toggle_edge(self, u: int, v: int) -> ToggleReport:
        """Flip the state of dyad ``(u, v)`` and report its prior state."""
        self.check_dyad(u, v)
        if self.is_frozen:
            raise FrozenGraphError("snapshot graphs are immutable; toggle a copy")
        was_present = bool(self._adj[u, v])
        self._adj[u, v] = 0 if was_present else 1
        self._edge_count += -1 if was_present else 1
        return ToggleReport(was_present=was_present)

    def set_edge(self, u: int, v: int, present: bool) -> None:
        """Force dyad ``(u, v)`` to the given state."""
        if self.has_edge(u, v) != present:
            self.toggle_edge(u, v)

    def successors(self, u: int) -> np.ndarray:
        """Return the sorted out-neighbors of ``u``."""
        self._check_node(u)
        return np.flatnonzero(self._adj[u])

    def predecessors(self, v: int) -> np.ndarray:
        """Return the sorted in-neighbors of ``v``."""
        self._check_node(v)
        return np.flatnonzero(self._adj[:, v])

    def out_degrees(self) -> np.ndarray:
        """Return the out-degree of every node."""
        return self._adj.sum(axis=1, dtype=np.int64)

    def in_degrees(self) -> np.ndarray:
        """Return the in-degree of every node."""
        return self._adj.sum(axis=0, dtype=np.int64)

    def edges(self) -> list[Dyad]:
        """Return all arcs in lexicographic order."""
        rows, cols = np.nonzero(self._adj)
        return [(int(u), int(v)) for u, v in zip(rows, cols, strict=True)]

    def copy(self) -> DirectedGraph:
        """Return a private mutable copy."""
        return DirectedGraph(self.n, self._adj)

    def freeze(self) -> DirectedGraph:
        """Return an immutable version of this graph (``self`` if already frozen)."""
        if self.is_frozen:
            return self
        frozen = self.copy()
        frozen._adj.flags.writeable = False
        return frozen

    def permuted(self, permutation: Sequence[int]) -> DirectedGraph:
        """Return the graph relabeled so node ``i`` becomes ``permutation[i]``."""
        perm = np.asarray(permutation, dtype=np.int64)
        adj = np.zeros_like(self._adj)
        adj[np.ix_(perm, perm)] = self._adj
        return DirectedGraph(self.n, adj)

    def induced(self, nodes: Sequence[int]) -> DirectedGraph:
        """Return the subgraph induced by ``nodes``, relabeled ``0..len-1`` in the given order."""
        index = np.asarray(nodes, dtype=np.int64)
        return DirectedGraph(len(index), self._adj[np.ix_(index, index)])

    def to_networkx(self) -> nx.DiGraph:
        """Return the graph as a ``networkx.DiGraph`` on nodes ``0..n-1``."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges())
        return graph

    def __eq__(self, other: object) -> bool:
        """Compare graphs by exact adjacency."""
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._adj, other._adj))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        """Return a compact description."""
        return f"DirectedGraph(n={self.n}, edges={self._edge_count})"


def toggle_edge(g: DirectedGraph, u: NodeId, v: NodeId) -> ToggleReport:
    """Flip dyad ``(u, v)`` of ``g`` in place."""

    return g.toggle_edge(u, v)


def dyad_iter(g: DirectedGraph | int) -> Iterator[Dyad]:
    """Yield every ordered dyad ``(u, v)``, ``u != v``, in lexicographic order."""

    n = g if isinstance(g, int) else g.n
    for u in range(n):
        for v in range(n):
            if u != v:
                yield (u, v)


@dataclass(frozen=True)
class Snapshot:
    """One time slice of a temporal network."""

    graph: DirectedGraph
    label: str

    def __post_init__(self) -> None:
        """Freeze the graph so the snapshot can be shared."""
        if not self.graph.is_frozen:
            object.__setattr__(self, "graph", self.graph.freeze())


def _graph_of(item: Snapshot | DirectedGraph) -> DirectedGraph:
    return item.graph if isinstance(item, Snapshot) else item


def snapshot_diff(a: Snapshot | DirectedGraph, b: Snapshot | DirectedGraph) -> SnapshotDiff:
    """Return the arcs added and removed going from ``a`` to ``b``."""

    graph_a, graph_b = _graph_of(a), _graph_of(b)
    if graph_a.n != graph_b.n:
        raise UniverseMismatchError(f"cannot diff graphs with {graph_a.n} and {graph_b.n} nodes")
    adj_a = graph_a.adjacency.astype(bool)
    adj_b = graph_b.adjacency.astype(bool)
    added = np.argwhere(adj_b & ~adj_a)
    removed = np.argwhere(adj_a & ~adj_b)
    return SnapshotDiff(
        added=frozenset((int(u), int(v)) for u, v in added),
        removed=frozenset((int(u), int(v)) for u, v in removed),
    )


@dataclass(frozen=True)
class TemporalNetwork:
    """Ordered snapshots over a shared node universe."""

    covariates: CovariateTable
    snapshots: tuple[Snapshot, ...]
    node_ids: tuple[str, ...] | None = None
    degenerate_labels: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        """Validate universe sizes and label order."""
        n = self.covariates.n
        for snapshot in self.snapshots:
            if snapshot.graph.n != n:
                raise UniverseMismatchError(
                    f"snapshot {snapshot.label} has {snapshot.graph.n} nodes, universe has {n}"
                )
        for earlier, later in pairwise(self.snapshots):
            if not earlier.label < later.label:
                raise GraphError(f"snapshot labels must strictly increase: {earlier.label!r} >= {later.label!r}")
        if self.node_ids is not None and len(self.node_ids) != n:
            raise GraphError(f"{len(self.node_ids)} node ids for a universe of {n}")

    @classmethod
    def from_graphs(
        cls,
        graphs: Sequence[DirectedGraph],
        labels: Sequence[str] | None = None,
        covariates: CovariateTable | None = None,
    ) -> TemporalNetwork:
        """Build a network from graphs, defaulting labels to ``t0000, t0001, ...``."""
        if not graphs:
            raise GraphError("a temporal network needs at least one snapshot")
        labels = labels or [f"t{index:04d}" for index in range(len(graphs))]
        cov = covariates or CovariateTable.uniform(graphs[0].n)
        return cls(cov, tuple(Snapshot(graph, label) for graph, label in zip(graphs, labels, strict=True)))

    @property
    def n(self) -> int:
        """Return the universe size."""
        return self.covariates.n

    @property
    def labels(self) -> list[str]:
        """Return the snapshot labels in order."""
        return [snapshot.label for snapshot in self.snapshots]

    @property
    def graphs(self) -> list[DirectedGraph]:
        """Return the snapshot graphs in order."""
        return [snapshot.graph for snapshot in self.snapshots]

    def __len__(self) -> int:
        """Return the number of snapshots."""
        return len(self.snapshots)

    def transitions(self) -> list[tuple[DirectedGraph, DirectedGraph]]:
        """Return ``(N^{t-1}, N^t)`` pairs for every transition."""
        return [
            (earlier.graph, later.graph)
            for earlier, later in pairwise(self.snapshots)
        ]

    def slice(self, start: int, stop: int | None = None) -> TemporalNetwork:
        """Return the network restricted to ``snapshots[start:stop]``."""
        return TemporalNetwork(self.covariates, self.snapshots[start:stop], self.node_ids)

    def snapshot(self, label: str) -> Snapshot:
        """Return the snapshot carrying ``label``."""
        for snapshot in self.snapshots:
            if snapshot.label == label:
                return snapshot
        raise KeyError(label)

    def user_projection(self) -> TemporalNetwork:
        """Return the user-user network on which model statistics are defined."""
        users = self.covariates.user_indices
        if len(users) == self.n:
            return self
        node_ids = tuple(self.node_ids[index] for index in users) if self.node_ids else None
        return TemporalNetwork(
            self.covariates.subset(users),
            tuple(Snapshot(snapshot.graph.induced(users), snapshot.label) for snapshot in self.snapshots),
            node_ids,
        )

    def permuted(self, permutation: Sequence[int]) -> TemporalNetwork:
        """Return the network with node ``i`` relabeled ``permutation[i]``."""
        inverse = np.argsort(np.asarray(permutation))
        nodes = tuple(self.covariates.nodes[int(old)] for old in inverse)
        node_ids = tuple(self.node_ids[int(old)] for old in inverse) if self.node_ids else None
        return TemporalNetwork(
            CovariateTable(nodes),
            tuple(Snapshot(snapshot.graph.permuted(permutation), snapshot.label) for snapshot in self.snapshots),
            node_ids,
        )

    def summary(self) -> list[dict[str, Any]]:
        """Return per-snapshot node and edge counts."""
        return [
            {"label": snapshot.label, "nodes": snapshot.graph.n, "edges": snapshot.graph.edge_count}
            for snapshot in self.snapshots
        ]
