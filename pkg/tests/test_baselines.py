"""Tests for model presets and the influencer block model."""

from __future__ import annotations

import numpy as np
import pytest

from ttergm.const import FLAG_EMPTY_BLOCK, PRESET_CLASSIC, PRESET_TTERGM
from ttergm.exceptions import GraphError, ModelConfigError, UniverseMismatchError
from ttergm.services.baselines import (
    BlockModel,
    classic_tergm_spec,
    fit_block_model,
    preset_spec,
    sample_block_model,
    ttergm_spec,
)
from ttergm.services.graph import CovariateTable, DirectedGraph, TemporalNetwork

pytestmark = pytest.mark.unit


def test_presets() -> None:
    classic = classic_tergm_spec()
    full = ttergm_spec()
    assert len(classic) == 5
    assert len(full) == 9
    assert full.term_names[:5] == classic.term_names
    assert full.term_names[5:] == ["TriadicDirectLinks", "TriadicPath2", "TriadicPath3", "InfluencerTriangle"]
    assert all(value == 0.0 for value in full.theta)
    assert preset_spec(PRESET_CLASSIC).term_names == classic.term_names
    assert preset_spec(PRESET_TTERGM).term_names == full.term_names
    with pytest.raises(ModelConfigError):
        preset_spec("ergm")


def test_block_rates_pool_transition_targets() -> None:
    cov = CovariateTable.from_influencers(4, [0])
    first = DirectedGraph.complete(4)
    second = DirectedGraph.from_edges(4, [(0, 1), (0, 2), (1, 2), (2, 0)])
    third = DirectedGraph.from_edges(4, [(0, 1), (1, 0)])
    model = fit_block_model(TemporalNetwork.from_graphs([first, second, third], covariates=cov), cov)
    # influencer -> follower: 2 + 1 arcs of 3 * 2 possible
    assert model.p[1, 0] == pytest.approx(3 / 6)
    # follower -> influencer: 1 + 1 of 3 * 2
    assert model.p[0, 1] == pytest.approx(2 / 6)
    # follower -> follower: 1 + 0 of 6 * 2
    assert model.p[0, 0] == pytest.approx(1 / 12)
    assert model.flags == {FLAG_EMPTY_BLOCK}
    assert model.p[1, 1] == 0.0


def test_single_snapshot_is_used_as_is(half_dense: DirectedGraph) -> None:
    cov = CovariateTable.uniform(6)
    model = fit_block_model(TemporalNetwork.from_graphs([half_dense]), cov)
    assert model.p[0, 0] == pytest.approx(0.5)
    assert FLAG_EMPTY_BLOCK in model.flags


def test_block_model_validation() -> None:
    with pytest.raises(UniverseMismatchError):
        fit_block_model(TemporalNetwork.from_graphs([DirectedGraph(3)]), CovariateTable.uniform(4))
    with pytest.raises(GraphError):
        BlockModel(np.array([0, 2]), np.zeros((2, 2)))
    with pytest.raises(GraphError):
        BlockModel(np.array([0, 1]), np.full((2, 2), 1.5))


def test_block_samples_are_seeded() -> None:
    model = BlockModel(np.array([1, 0, 0, 0, 0]), np.array([[0.2, 0.4], [0.9, 0.0]]))
    first = sample_block_model(model, 5, seed=3)
    again = sample_block_model(model, 5, seed=3)
    assert len(first) == 5
    assert all(a == b for a, b in zip(first, again, strict=True))
    assert all(not graph.adjacency[0, 0] for graph in first)
    assert all(not graph.has_edge(0, 0) for graph in first)
    assert sample_block_model(model, 0, seed=3) == []
    with pytest.raises(ModelConfigError):
        sample_block_model(model, -1, seed=3)


def test_block_sample_density_matches_rates() -> None:
    model = BlockModel(np.zeros(10, dtype=np.int64), np.array([[0.3, 0.0], [0.0, 0.0]]))
    graphs = sample_block_model(model, 200, seed=8)
    density = np.mean([graph.density for graph in graphs])
    assert density == pytest.approx(0.3, abs=0.02)
