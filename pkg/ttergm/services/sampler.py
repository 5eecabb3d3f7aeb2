"""MCMC sampling of N^t given N^{t-1}, normalizer ratios and sequence generation."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import enum
from functools import cached_property
import logging
import math
from typing import NamedTuple

import numpy as np
from scipy.special import expit, logsumexp

from ..const import (
    DEFAULT_BURN_IN_SWEEPS,
    DEFAULT_N_CHAINS,
    DEFAULT_N_SAMPLES,
    DEFAULT_SAMPLE_INTERVAL_SWEEPS,
    DEGENERACY_FRACTION,
    ESS_WARNING_FRACTION,
    SWEEP_CHUNK,
    UINT64_MAX,
    UNIFORM_BUFFER_DRAWS,
)
from ..exceptions import DegeneracyError, ModelConfigError, UniverseMismatchError
from ..helpers import derive_seed, label_width, make_rng, next_label
from . import kernels
from .graph import CovariateTable, DirectedGraph, Dyad, Snapshot, TemporalNetwork
from .statistics import ModelSpec, change_statistics, check_inputs, compute_statistics, kernel_arrays

_LOGGER = logging.getLogger(__name__)


class Proposal(enum.Enum):
    """MCMC proposal scheme."""

    GIBBS_SWEEP = "GibbsSweep"
    RANDOM_TOGGLE = "RandomToggle"

    @property
    def code(self) -> int:
        """Return the kernel code of the proposal."""
        return kernels.PROPOSAL_GIBBS if self is Proposal.GIBBS_SWEEP else kernels.PROPOSAL_TOGGLE


@dataclass(frozen=True)
class McmcConfig:
    """Chain length, thinning, seed and proposal of a sampling run.

    One sweep is ``n(n-1)`` dyad updates: a full Gibbs pass in ``dyad_iter``
    order, or as many random single-dyad Metropolis toggles.
    """

    burn_in_sweeps: int = DEFAULT_BURN_IN_SWEEPS
    sample_interval_sweeps: int = DEFAULT_SAMPLE_INTERVAL_SWEEPS
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = 0
    proposal: Proposal = Proposal.GIBBS_SWEEP
    n_chains: int = DEFAULT_N_CHAINS

    def __post_init__(self) -> None:
        """Validate counts and seed."""
        for name in ("burn_in_sweeps", "sample_interval_sweeps", "n_samples", "n_chains"):
            if getattr(self, name) < 1:
                raise ModelConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if not 0 <= self.seed <= UINT64_MAX:
            raise ModelConfigError(f"seed {self.seed} is not an unsigned 64-bit integer")

    @property
    def total_sweeps(self) -> int:
        """Return the number of sweeps each chain runs."""
        return self.burn_in_sweeps + self.sample_interval_sweeps * self.n_samples

    def with_seed(self, seed: int) -> McmcConfig:
        """Return the same settings with another seed."""
        return replace(self, seed=seed)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Recorded chain states and their statistic vectors.

    ``states`` packs the sampled graphs as an ``(m, n, n)`` uint8 array; the
    ``graphs`` view is built on first access. With several chains the rows are
    concatenated in chain order.
    """

    term_names: tuple[str, ...]
    states: np.ndarray
    statistics: np.ndarray
    acceptance_rate: float
    degenerate: bool = False
    degenerate_fraction: float = 0.0

    @property
    def n_samples(self) -> int:
        """Return the number of recorded samples."""
        return int(self.statistics.shape[0])

    @cached_property
    def graphs(self) -> list[DirectedGraph]:
        """Return the sampled graphs as frozen DirectedGraphs."""
        return [DirectedGraph.from_adjacency(state).freeze() for state in self.states]

    def mean_statistics(self) -> np.ndarray:
        """Return the sample mean of the statistic vectors."""
        return self.statistics.mean(axis=0)


class _ChainResult(NamedTuple):
    states: np.ndarray
    statistics: np.ndarray
    moves: int
    extreme_sweeps: int


class LogRatioEstimate(NamedTuple):
    """Importance-sampling estimate of log(Z(theta_new) / Z(theta_ref))."""

    value: float
    effective_sample_size: float
    low_ess: bool

    def __float__(self) -> float:
        """Return the estimated log ratio."""
        return self.value


def conditional_edge_probability(
    current: DirectedGraph, prev: DirectedGraph | None, cov: CovariateTable, spec: ModelSpec, dyad: Dyad
) -> float:
    """Return P(dyad present | rest of the graph) = logistic(theta . delta)."""

    delta = change_statistics(current, prev, cov, spec, dyad)
    eta = float(spec.theta_vector @ delta)
    if not math.isfinite(eta):
        raise DegeneracyError(f"linear predictor of dyad {dyad} is not finite")
    return float(expit(eta))


def _chunk_size(n_dyads: int) -> int:
    return max(1, min(SWEEP_CHUNK, UNIFORM_BUFFER_DRAWS // n_dyads))


def _record_slots(sweeps: np.ndarray, config: McmcConfig) -> np.ndarray:
    offset = sweeps - config.burn_in_sweeps + 1
    recorded = (sweeps >= config.burn_in_sweeps) & (offset % config.sample_interval_sweeps == 0)
    return np.where(recorded, offset // config.sample_interval_sweeps - 1, -1).astype(np.int64)


def _run_chain(
    chain: int,
    start: DirectedGraph,
    prev: DirectedGraph | None,
    cov: CovariateTable,
    spec: ModelSpec,
    config: McmcConfig,
) -> _ChainResult:
    n = start.n
    n_dyads = start.n_dyads
    rng = make_rng(config.seed, chain)
    adj_view, prev_view, influencer = kernel_arrays(start, prev, cov)
    adj = np.array(adj_view, dtype=np.uint8, copy=True, order="C")
    prev_adj = np.array(prev_view, dtype=np.uint8, copy=True, order="C")
    stats = compute_statistics(start, prev, cov, spec)
    edges = np.array([start.edge_count], dtype=np.int64)
    states_out = np.zeros((config.n_samples, n, n), dtype=np.uint8)
    stats_out = np.zeros((config.n_samples, len(spec)), dtype=np.float64)
    extreme = np.zeros(config.total_sweeps, dtype=np.uint8)
    codes, scales, theta = spec.codes, spec.scales, spec.theta_vector
    no_dyads = np.zeros((1, 1), dtype=np.int64)
    chunk = _chunk_size(n_dyads)
    moves = 0

    for first in range(0, config.total_sweeps, chunk):
        count = min(chunk, config.total_sweeps - first)
        record = _record_slots(np.arange(first, first + count, dtype=np.int64), config)
        uniforms = rng.random((count, n_dyads))
        if config.proposal is Proposal.RANDOM_TOGGLE:
            dyads = rng.integers(0, n_dyads, size=(count, n_dyads), dtype=np.int64)
        else:
            dyads = no_dyads
        result = kernels.run_chain(
            config.proposal.code,
            codes,
            scales,
            theta,
            adj,
            prev_adj,
            influencer,
            uniforms,
            dyads,
            record,
            stats,
            edges,
            states_out,
            stats_out,
            extreme[first : first + count],
        )
        if result < 0:
            raise DegeneracyError(f"chain {chain} hit a non-finite linear predictor at theta={spec.theta}")
        moves += int(result)
        _LOGGER.debug("Chain %s: sweeps %s-%s done, %s moves", chain, first, first + count - 1, result)

    return _ChainResult(states_out, stats_out, moves, int(extreme.sum()))


def sample_networks(
    prev: DirectedGraph | None,
    cov: CovariateTable,
    spec: ModelSpec,
    config: McmcConfig,
    *,
    initial: DirectedGraph | None = None,
    threads: int = 1,
) -> SampleBatch:
    """Draw networks from P(N | prev; theta) by MCMC.

    The chain starts at ``initial`` if given, else at ``prev``, else at the
    empty graph. ``acceptance_rate`` is the share of dyad updates that changed
    the graph. The batch is flagged degenerate when the chains spend more than
    half of their sweeps at the empty or complete graph.
    """

    start = initial if initial is not None else prev if prev is not None else DirectedGraph(cov.n)
    check_inputs(start, prev, cov, spec)
    if start.n < 2:
        raise ModelConfigError(f"sampling needs at least two nodes, got {start.n}")

    _LOGGER.debug(
        "Sampling %s chains x %s sweeps on %s nodes (%s)",
        config.n_chains,
        config.total_sweeps,
        start.n,
        config.proposal.value,
    )
    workers = max(1, min(threads, config.n_chains))
    if workers == 1:
        results = [_run_chain(chain, start, prev, cov, spec, config) for chain in range(config.n_chains)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chain, chain, start, prev, cov, spec, config) for chain in range(config.n_chains)
            ]
            results = [future.result() for future in futures]

    total_sweeps = config.total_sweeps * config.n_chains
    fraction = sum(result.extreme_sweeps for result in results) / total_sweeps
    degenerate = fraction > DEGENERACY_FRACTION
    if degenerate:
        _LOGGER.warning(
            "Chain degenerate: %.1f%% of sweeps at the empty or complete graph (theta=%s)",
            100 * fraction,
            spec.theta,
        )
    return SampleBatch(
        term_names=tuple(spec.term_names),
        states=np.concatenate([result.states for result in results]),
        statistics=np.concatenate([result.statistics for result in results]),
        acceptance_rate=sum(result.moves for result in results) / (total_sweeps * start.n_dyads),
        degenerate=degenerate,
        degenerate_fraction=fraction,
    )


def generate_sequence(
    initial: Snapshot,
    cov: CovariateTable,
    spec: ModelSpec,
    horizon: int,
    config: McmcConfig,
    *,
    threads: int = 1,
    node_ids: tuple[str, ...] | None = None,
) -> TemporalNetwork:
    """Generate ``horizon`` snapshots after ``initial``, one MCMC draw per step.

    Step ``t`` samples N^t given N^{t-1} with seed ``derive_seed(config.seed, t)``
    and carries the single recorded state forward, so ``config.n_samples`` is
    ignored. The returned network holds the initial snapshot followed by the
    generated ones; labels of degenerate steps are listed in
    ``degenerate_labels``.
    """

    if horizon < 1:
        raise ModelConfigError(f"horizon must be at least 1, got {horizon}")
    if initial.graph.n != cov.n:
        raise UniverseMismatchError(f"initial snapshot has {initial.graph.n} nodes, covariates {cov.n}")

    single = replace(config, n_samples=1, n_chains=1)
    width = label_width(horizon)
    snapshots = [initial]
    degenerate: set[str] = set()
    current = initial.graph
    for step in range(1, horizon + 1):
        batch = sample_networks(current, cov, spec, single.with_seed(derive_seed(config.seed, step)), threads=threads)
        current = DirectedGraph.from_adjacency(batch.states[-1])
        label = next_label(initial.label, step, width)
        snapshots.append(Snapshot(current, label))
        if batch.degenerate:
            degenerate.add(label)
        _LOGGER.debug("Generated %s with %s edges", label, current.edge_count)

    return TemporalNetwork(cov, tuple(snapshots), node_ids, frozenset(degenerate))


def estimate_log_normalizer_ratio(
    theta_new: Sequence[float] | np.ndarray,
    theta_ref: Sequence[float] | np.ndarray,
    batch_at_ref: SampleBatch,
) -> LogRatioEstimate:
    """Estimate log(Z(theta_new) / Z(theta_ref)) from a batch sampled at ``theta_ref``.

    Uses log(mean(exp((theta_new - theta_ref) . g_i))) evaluated with
    ``logsumexp``. ``low_ess`` is set when the effective sample size of the
    importance weights falls below 5% of the batch.
    """

    shift = np.asarray(theta_new, dtype=np.float64) - np.asarray(theta_ref, dtype=np.float64)
    m = batch_at_ref.n_samples
    if shift.shape != (batch_at_ref.statistics.shape[1],):
        raise ModelConfigError(f"theta of length {shift.shape} does not match {batch_at_ref.statistics.shape[1]} terms")
    if m == 0:
        raise ModelConfigError("cannot estimate a normalizer ratio from an empty batch")
    if not np.any(shift):
        return LogRatioEstimate(0.0, float(m), False)

    log_weights = batch_at_ref.statistics @ shift
    log_total = float(logsumexp(log_weights))
    weights = np.exp(log_weights - log_total)
    ess = float(1.0 / np.sum(weights**2))
    low_ess = ess < ESS_WARNING_FRACTION * m
    if low_ess:
        _LOGGER.warning("Normalizer ratio effective sample size %.1f of %s samples", ess, m)
    return LogRatioEstimate(log_total - math.log(m), ess, low_ess)
