"""Tests for MPLE, MCMLE and bootstrap standard errors."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.special import logit, logsumexp

from ttergm.const import FLAG_NO_IMPROVEMENT, FLAG_SEPARATION
from ttergm.exceptions import EstimationError, ModelConfigError
from ttergm.services.baselines import ttergm_spec
from ttergm.services.estimation import EstimationOptions, Method, bootstrap_std_errors, fit_units, mcmle, mple
from ttergm.services.graph import DirectedGraph, TemporalNetwork
from ttergm.services.sampler import McmcConfig
from ttergm.services.statistics import ModelSpec, compute_statistics

pytestmark = pytest.mark.unit


def test_edges_mple_is_logit_of_density(small_network: TemporalNetwork) -> None:
    result = mple(small_network, small_network.covariates, ModelSpec.from_names(["Edges"]))
    edges = sum(graph.edge_count for graph in small_network.graphs)
    dyads = sum(graph.n_dyads for graph in small_network.graphs)
    assert result.converged
    assert result.method is Method.MPLE
    assert result.theta_hat[0] == pytest.approx(logit(edges / dyads), abs=1e-8)
    assert result.std_errors[0] > 0


def test_half_density_gives_zero(half_dense: DirectedGraph) -> None:
    network = TemporalNetwork.from_graphs([half_dense])
    result = mple(network, network.covariates, ModelSpec.from_names(["Edges"]))
    assert result.converged
    assert result.iterations == 0
    assert result.theta_hat[0] == pytest.approx(0.0, abs=1e-12)


def test_scaled_term_halves_coefficient(small_network: TemporalNetwork) -> None:
    cov = small_network.covariates
    plain = mple(small_network, cov, ModelSpec.from_names(["Edges"]))
    scaled = mple(small_network, cov, ModelSpec.from_names(["Edges*2"]))
    assert scaled.theta_hat[0] == pytest.approx(plain.theta_hat[0] / 2, abs=1e-8)
    assert scaled.term_names == ("Edges*2",)


def test_stability_model_matches_transition_rates(small_network: TemporalNetwork) -> None:
    kept = stayed_present = created = stayed_absent = 0
    for prev, current in small_network.transitions():
        off_diagonal = ~np.eye(prev.n, dtype=bool)
        was, now = prev.adjacency[off_diagonal], current.adjacency[off_diagonal]
        kept += int(((was == 1) & (now == 1)).sum())
        stayed_present += int((was == 1).sum())
        created += int(((was == 0) & (now == 1)).sum())
        stayed_absent += int((was == 0).sum())
    logit_present, logit_absent = logit(kept / stayed_present), logit(created / stayed_absent)

    result = mple(small_network, small_network.covariates, ModelSpec.from_names(["Edges", "Stability"]))
    assert result.converged
    assert result.theta_hat[0] == pytest.approx((logit_present + logit_absent) / 2, abs=1e-7)
    assert result.theta_hat[1] == pytest.approx((logit_present - logit_absent) / 2, abs=1e-7)


def test_log_likelihood_path_never_decreases(small_network: TemporalNetwork) -> None:
    result = mple(small_network, small_network.covariates, ModelSpec.from_names(["Edges", "Mutual", "Stability"]))
    path = np.asarray(result.log_likelihood_path)
    assert np.all(np.diff(path) >= -1e-9 * (1 + np.abs(path[:-1])))


def test_empty_network_is_flagged_as_separated() -> None:
    network = TemporalNetwork.from_graphs([DirectedGraph(4), DirectedGraph(4)])
    result = mple(network, network.covariates, ModelSpec.from_names(["Edges"]))
    assert not result.converged
    assert FLAG_SEPARATION in result.flags
    assert result.theta_hat[0] < 0


def test_fit_units() -> None:
    network = TemporalNetwork.from_graphs([DirectedGraph(3), DirectedGraph(3), DirectedGraph(3)])
    assert len(fit_units(network, ModelSpec.from_names(["Edges"]))) == 3
    assert len(fit_units(network, ModelSpec.from_names(["Edges", "Stability"]))) == 2
    with pytest.raises(ModelConfigError):
        fit_units(network.slice(0, 1), ModelSpec.from_names(["Stability"]))


def test_mcmle_stays_near_exact_mle_for_dyad_independent_model(small_network: TemporalNetwork) -> None:
    spec = ModelSpec.from_names(["Edges", "Stability"])
    cov = small_network.covariates
    start = mple(small_network, cov, spec)
    mcmc = McmcConfig(burn_in_sweeps=20, sample_interval_sweeps=1, n_samples=400, seed=17)
    result = mcmle(small_network, cov, spec, mcmc, 3, start=start)
    assert result.method is Method.MCMLE
    assert result.seed == 17
    assert 1 <= result.iterations <= 3
    assert result.log_likelihood_path[0] == 0.0
    assert len(result.log_likelihood_path) == result.iterations + 1
    assert np.allclose(result.theta_hat, start.theta_hat, atol=0.15)
    again = mcmle(small_network, cov, spec, mcmc, 3, start=start, threads=2)
    assert np.array_equal(result.theta_hat, again.theta_hat)


def test_mcmle_needs_an_outer_iteration(small_network: TemporalNetwork) -> None:
    with pytest.raises(ModelConfigError):
        mcmle(small_network, small_network.covariates, ModelSpec.from_names(["Edges"]), McmcConfig(), 0)


def test_bootstrap_is_deterministic(small_network: TemporalNetwork) -> None:
    spec = ModelSpec.from_names(["Edges", "Stability"])
    cov = small_network.covariates
    first = bootstrap_std_errors(small_network, cov, spec, 8, seed=4)
    again = bootstrap_std_errors(small_network, cov, spec, 8, seed=4, threads=3)
    assert first.std_errors.shape == (2,)
    assert first.n_dropped == 0
    assert np.array_equal(first.replicates, again.replicates)
    assert np.all(first.std_errors >= 0)


def test_bootstrap_needs_two_units(small_network: TemporalNetwork) -> None:
    spec = ModelSpec.from_names(["Edges", "Stability"])
    with pytest.raises(EstimationError):
        bootstrap_std_errors(small_network.slice(0, 2), small_network.covariates, spec, 5, seed=1)
    with pytest.raises(ModelConfigError):
        bootstrap_std_errors(small_network, small_network.covariates, spec, 0, seed=1)


def exact_log_likelihood(network: TemporalNetwork, spec: ModelSpec, theta: np.ndarray) -> float:
    """Sum the exact static log-likelihood over all snapshots by enumerating every graph."""
    cov = network.covariates
    n = network.n
    dyads = [(u, v) for u in range(n) for v in range(n) if u != v]
    fitted = spec.with_theta(theta)
    every = [
        compute_statistics(DirectedGraph.from_edges(n, [d for d, on in zip(dyads, bits, strict=True) if on]), None, cov, fitted)
        for bits in itertools.product((0, 1), repeat=len(dyads))
    ]
    log_normalizer = logsumexp(np.asarray(every) @ theta)
    return float(sum(theta @ compute_statistics(graph, None, cov, fitted) - log_normalizer for graph in network.graphs))


def test_mcmle_does_not_lose_likelihood_against_mple() -> None:
    graphs = [
        DirectedGraph.from_edges(3, [(0, 1), (1, 0), (1, 2)]),
        DirectedGraph.from_edges(3, [(0, 2), (2, 1)]),
        DirectedGraph.from_edges(3, [(0, 1), (1, 0), (2, 0), (0, 2), (1, 2)]),
        DirectedGraph(3),
    ]
    network = TemporalNetwork.from_graphs(graphs)
    spec = ModelSpec.from_names(["Edges", "Mutual"])
    start = mple(network, network.covariates, spec)
    mcmc = McmcConfig(burn_in_sweeps=20, sample_interval_sweeps=2, n_samples=2000, seed=5)
    result = mcmle(network, network.covariates, spec, mcmc, 5, start=start)
    assert np.all(np.isfinite(result.theta_hat))
    assert np.all(np.diff(result.log_likelihood_path) >= -1e-9)
    assert exact_log_likelihood(network, spec, result.theta_hat) >= exact_log_likelihood(
        network, spec, start.theta_hat
    ) - 0.05


def test_mcmle_stops_when_likelihood_gain_is_below_tolerance(small_network: TemporalNetwork) -> None:
    spec = ModelSpec.from_names(["Edges", "Mutual"])
    cov = small_network.covariates
    options = EstimationOptions(step_tol=1e-12, ll_tol=1e6)
    mcmc = McmcConfig(burn_in_sweeps=10, n_samples=50, seed=2)
    result = mcmle(small_network, cov, spec, mcmc, 5, options=options)
    assert result.iterations == 1
    assert not result.converged
    assert FLAG_NO_IMPROVEMENT in result.flags


def test_relabeling_nodes_keeps_statistics_and_fit(small_network: TemporalNetwork) -> None:
    permutation = [3, 7, 0, 5, 1, 6, 2, 4]
    relabeled = small_network.permuted(permutation)
    spec = ttergm_spec()
    for (prev, current), (prev_r, current_r) in zip(
        small_network.transitions(), relabeled.transitions(), strict=True
    ):
        assert np.allclose(
            compute_statistics(current, prev, small_network.covariates, spec),
            compute_statistics(current_r, prev_r, relabeled.covariates, spec),
        )

    fit_spec = ModelSpec.from_names(["Edges", "Mutual", "Stability"])
    original = mple(small_network, small_network.covariates, fit_spec)
    moved = mple(relabeled, relabeled.covariates, fit_spec)
    assert np.allclose(original.theta_hat, moved.theta_hat, atol=1e-6)
    assert original.converged == moved.converged
