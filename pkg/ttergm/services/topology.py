"""Topology report of a single snapshot (average path length, assortativity, components, clustering)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
import logging
import math

import networkx as nx
import numpy as np

from .graph import DirectedGraph

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopologyReport:
    """Network topology of one graph; undefined values are NaN."""

    avg_shortest_path: float
    assortativity: float
    n_components: int
    avg_clustering: float
    n_nodes: int
    n_edges: int

    def as_dict(self) -> dict[str, float | int | None]:
        """Return the report with NaN mapped to None (JSON friendly)."""

        return {
            key: None if isinstance(value, float) and math.isnan(value) else value
            for key, value in asdict(self).items()
        }


def _avg_shortest_path(graph: nx.DiGraph) -> float:
    total = 0
    pairs = 0
    for _, lengths in nx.all_pairs_shortest_path_length(graph):
        for distance in lengths.values():
            if distance > 0:
                total += distance
                pairs += 1
    return total / pairs if pairs else math.nan


def _out_in_assortativity(g: DirectedGraph, graph: nx.DiGraph) -> float:
    # correlation of (outdeg(u), indeg(v)) over arcs u -> v is undefined when either side is constant
    if g.edge_count < 2:
        return math.nan
    rows, cols = np.nonzero(g.adjacency)
    if np.ptp(g.out_degrees()[rows]) == 0 or np.ptp(g.in_degrees()[cols]) == 0:
        return math.nan
    return float(nx.degree_pearson_correlation_coefficient(graph, x="out", y="in"))


def topology_report(g: DirectedGraph) -> TopologyReport:
    """Return the topology metrics of ``g``.

    Shortest paths are directed and averaged over reachable ordered pairs;
    clustering and components use the undirected (weak) projection.
    """

    graph = g.to_networkx()
    n_components = nx.number_weakly_connected_components(graph) if g.n else 0
    avg_clustering = nx.average_clustering(graph.to_undirected()) if g.n else math.nan
    report = TopologyReport(
        avg_shortest_path=_avg_shortest_path(graph),
        assortativity=_out_in_assortativity(g, graph),
        n_components=n_components,
        avg_clustering=float(avg_clustering),
        n_nodes=g.n,
        n_edges=g.edge_count,
    )
    _LOGGER.debug("Topology report: %s", report)
    return report
