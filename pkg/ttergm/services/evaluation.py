"""Out-of-sample evaluation: degree errors, the holdout protocol and significance tests."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
import logging
import math
from typing import NamedTuple, Protocol

import numpy as np
from scipy import stats

from ..const import (
    DEFAULT_N_RUNS,
    FLAG_INSUFFICIENT_RUNS,
    MCMLE_MAX_OUTER,
    METRIC_IN_DEG,
    METRIC_INFLUENCER_IN_DEG,
    METRIC_INFLUENCER_OUT_DEG,
    METRIC_OUT_DEG,
    METRICS,
    MODEL_BLOCK,
    SIGNIFICANCE_LEVEL,
)
from ..exceptions import EvaluationError, UniverseMismatchError
from ..helpers import derive_seed
from .baselines import BlockModel, fit_block_model, sample_block_model
from .estimation import EstimationOptions, EstimationResult, Method, mcmle, mple
from .graph import CovariateTable, DirectedGraph, Snapshot, TemporalNetwork
from .sampler import McmcConfig, generate_sequence
from .statistics import ModelSpec

_LOGGER = logging.getLogger(__name__)


class DegreeError(NamedTuple):
    """Absolute errors of the average in- and out-degree."""

    in_err: float
    out_err: float


def _average_degrees(graph: DirectedGraph, nodes: Sequence[int] | None) -> tuple[float, float]:
    if nodes is None:
        average = graph.edge_count / graph.n if graph.n else 0.0
        return average, average
    index = np.asarray(nodes, dtype=np.int64)
    if index.size == 0:
        return 0.0, 0.0
    return float(graph.in_degrees()[index].mean()), float(graph.out_degrees()[index].mean())


def degree_error(
    predicted: Sequence[DirectedGraph], observed: DirectedGraph, *, nodes: Sequence[int] | None = None
) -> DegreeError:
    """Compare the mean predicted average degrees with the observed ones.

    With ``nodes`` the averages run over those nodes only (e.g. influencers).
    """

    if not predicted:
        raise EvaluationError("degree_error needs at least one predicted graph")
    for graph in predicted:
        if graph.n != observed.n:
            raise UniverseMismatchError(f"predicted graph has {graph.n} nodes, observed {observed.n}")
    averages = np.asarray([_average_degrees(graph, nodes) for graph in predicted])
    observed_in, observed_out = _average_degrees(observed, nodes)
    return DegreeError(
        in_err=abs(float(averages[:, 0].mean()) - observed_in),
        out_err=abs(float(averages[:, 1].mean()) - observed_out),
    )


class NetworkModel(Protocol):
    """A model that can be fitted on training snapshots and simulate the following ones."""

    name: str

    def fit(self, train: TemporalNetwork) -> None:
        """Fit the model on the training network."""

    def simulate(self, last: Snapshot, horizon: int, seed: int) -> list[DirectedGraph]:
        """Return ``horizon`` graphs following ``last``."""


class TergmModel:
    """Classic TERGM or TTERGM fitted by MPLE, optionally refined by MCMLE."""

    def __init__(
        self,
        name: str,
        spec: ModelSpec,
        *,
        method: Method = Method.MPLE,
        mcmc: McmcConfig | None = None,
        max_outer: int = MCMLE_MAX_OUTER,
        options: EstimationOptions | None = None,
        threads: int = 1,
    ) -> None:
        """Initialize an unfitted model."""
        self.name = name
        self.spec = spec
        self.method = method
        self.mcmc = mcmc or McmcConfig()
        self.max_outer = max_outer
        self.options = options
        self.threads = threads
        self.result: EstimationResult | None = None
        self._covariates: CovariateTable | None = None

    def fit(self, train: TemporalNetwork) -> None:
        """Estimate the coefficients on the training snapshots."""

        cov = train.covariates
        result = mple(train, cov, self.spec, self.options)
        if self.method is Method.MCMLE:
            result = mcmle(
                train,
                cov,
                self.spec,
                self.mcmc,
                self.max_outer,
                options=self.options,
                start=result,
                threads=self.threads,
            )
        self.result = result
        self._covariates = cov

    def simulate(self, last: Snapshot, horizon: int, seed: int) -> list[DirectedGraph]:
        """Generate the next ``horizon`` snapshots with the fitted coefficients."""

        if self.result is None or self._covariates is None:
            raise EvaluationError(f"model {self.name} has not been fitted")
        sequence = generate_sequence(last, self._covariates, self.result.spec(), horizon, self.mcmc.with_seed(seed))
        return sequence.graphs[1:]


class BlockModelBaseline:
    """Influencer block model; holdout months are independent draws."""

    def __init__(self, name: str = MODEL_BLOCK) -> None:
        """Initialize an unfitted model."""
        self.name = name
        self.model: BlockModel | None = None

    def fit(self, train: TemporalNetwork) -> None:
        """Fit the block rates on the training snapshots."""
        self.model = fit_block_model(train, train.covariates)

    def simulate(self, last: Snapshot, horizon: int, seed: int) -> list[DirectedGraph]:
        """Draw ``horizon`` independent graphs."""
        if self.model is None:
            raise EvaluationError(f"model {self.name} has not been fitted")
        return sample_block_model(self.model, horizon, seed)


class PairwiseTest(NamedTuple):
    """Welch test of two models on one holdout cell."""

    model_a: str
    model_b: str
    label: str
    metric: str
    p_value: float | None
    significant: bool | None = None


@dataclass(frozen=True)
class EvalReport:
    """Per-run degree errors of every model on every holdout month and metric."""

    models: tuple[str, ...]
    absent: tuple[str, ...]
    holdout_labels: tuple[str, ...]
    metrics: tuple[str, ...]
    n_runs: int
    seed: int
    errors: Mapping[str, Mapping[str, Mapping[str, tuple[float, ...]]]]
    tests: tuple[PairwiseTest, ...] = ()
    flags: frozenset[str] = field(default_factory=frozenset)

    def mean(self, model: str, label: str, metric: str) -> float:
        """Return the mean error over runs of one cell."""
        return float(np.mean(self.errors[model][label][metric]))

    def pair(self, model_a: str, model_b: str, label: str, metric: str) -> PairwiseTest:
        """Return the test of a model pair on one cell (order insensitive)."""
        for test in self.tests:
            if test.label == label and test.metric == metric and {test.model_a, test.model_b} == {model_a, model_b}:
                return test
        raise KeyError((model_a, model_b, label, metric))

    def p_value(self, model_a: str, model_b: str, label: str, metric: str) -> float | None:
        """Return the p-value of a model pair on one cell."""
        return self.pair(model_a, model_b, label, metric).p_value


def significance_test(errors_a: Sequence[float], errors_b: Sequence[float]) -> float:
    """Return the two-sided Welch t-test p-value of two per-run error lists."""

    a = np.asarray(errors_a, dtype=np.float64)
    b = np.asarray(errors_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise EvaluationError("significance_test needs at least two runs per model")
    if np.ptp(a) == 0.0 and np.ptp(b) == 0.0:
        return 1.0 if a[0] == b[0] else 0.0
    p_value = float(stats.ttest_ind(a, b, equal_var=False).pvalue)
    if math.isnan(p_value):
        return 1.0
    return min(1.0, max(0.0, p_value))


def _holdout_split(data: TemporalNetwork, holdout_labels: Sequence[str]) -> TemporalNetwork:
    horizon = len(holdout_labels)
    if horizon < 1:
        raise EvaluationError("at least one holdout label is required")
    if horizon >= len(data):
        raise EvaluationError(f"{horizon} holdout snapshots leave no training data in {len(data)}")
    if list(holdout_labels) != data.labels[-horizon:]:
        expected = data.labels[-horizon:]
        raise EvaluationError(f"holdout labels {list(holdout_labels)} must be the final snapshots {expected}")
    return data.slice(0, len(data) - horizon)


def _cell_errors(
    predicted: DirectedGraph, observed: DirectedGraph, influencers: list[int], metrics: Sequence[str]
) -> dict[str, float]:
    whole = degree_error([predicted], observed)
    values = {METRIC_IN_DEG: whole.in_err, METRIC_OUT_DEG: whole.out_err}
    if METRIC_INFLUENCER_IN_DEG in metrics:
        restricted = degree_error([predicted], observed, nodes=influencers)
        values[METRIC_INFLUENCER_IN_DEG] = restricted.in_err
        values[METRIC_INFLUENCER_OUT_DEG] = restricted.out_err
    return {metric: values[metric] for metric in metrics}


def run_holdout(
    data: TemporalNetwork,
    models: Sequence[NetworkModel],
    holdout_labels: Sequence[str],
    n_runs: int = DEFAULT_N_RUNS,
    seed: int = 0,
    *,
    threads: int = 1,
    alpha: float = SIGNIFICANCE_LEVEL,
) -> EvalReport:
    """Fit every model on the training snapshots and score its holdout predictions.

    Run ``r`` uses seed ``derive_seed(seed, r)`` and model ``i`` within it
    ``derive_seed(run_seed, i)``. A model whose fit or simulation fails is
    reported as absent. Influencer-restricted metrics are only reported when
    the network has influencers. Pairwise tests are marked significant when
    the Welch p-value is below ``alpha``.
    """

    if n_runs < 1:
        raise EvaluationError(f"n_runs must be at least 1, got {n_runs}")
    names = [model.name for model in models]
    if len(set(names)) != len(names):
        raise EvaluationError(f"model names must be unique: {names}")
    train = _holdout_split(data, holdout_labels)
    last = train.snapshots[-1]
    observed = [data.snapshot(label).graph for label in holdout_labels]
    influencers = data.covariates.influencers
    metrics = METRICS if influencers else (METRIC_IN_DEG, METRIC_OUT_DEG)

    fitted: list[tuple[int, NetworkModel]] = []
    absent: set[str] = set()
    for index, model in enumerate(models):
        try:
            model.fit(train)
        except Exception:
            _LOGGER.exception("Fitting %s failed; it is left out of the report", model.name)
            absent.add(model.name)
            continue
        _LOGGER.info("Fitted %s on %s training snapshots", model.name, len(train))
        fitted.append((index, model))

    def one_run(run: int) -> dict[str, list[dict[str, float]] | None]:
        run_seed = derive_seed(seed, run)
        outcome: dict[str, list[dict[str, float]] | None] = {}
        for index, model in fitted:
            try:
                predicted = model.simulate(last, len(holdout_labels), derive_seed(run_seed, index))
            except Exception as err:  # noqa: BLE001
                _LOGGER.warning("Run %s: simulating %s failed: %s", run, model.name, err)
                outcome[model.name] = None
                continue
            outcome[model.name] = [
                _cell_errors(graph, truth, influencers, metrics)
                for graph, truth in zip(predicted, observed, strict=True)
            ]
        return outcome

    if threads <= 1 or n_runs == 1:
        runs = [one_run(run) for run in range(n_runs)]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, n_runs)) as pool:
            runs = list(pool.map(one_run, range(n_runs)))

    for _, model in fitted:
        if any(run[model.name] is None for run in runs):
            absent.add(model.name)
    present = [model.name for _, model in fitted if model.name not in absent]

    errors: dict[str, dict[str, dict[str, tuple[float, ...]]]] = {}
    for name in present:
        errors[name] = {
            label: {
                metric: tuple(run[name][position][metric] for run in runs)  # type: ignore[index]
                for metric in metrics
            }
            for position, label in enumerate(holdout_labels)
        }

    flags: set[str] = set()
    tests: list[PairwiseTest] = []
    if n_runs < 2:
        flags.add(FLAG_INSUFFICIENT_RUNS)
    for model_a, model_b in combinations(present, 2):
        for label in holdout_labels:
            for metric in metrics:
                p_value = (
                    None
                    if n_runs < 2
                    else significance_test(errors[model_a][label][metric], errors[model_b][label][metric])
                )
                significant = None if p_value is None else p_value < alpha
                tests.append(PairwiseTest(model_a, model_b, label, metric, p_value, significant))

    if absent:
        _LOGGER.warning("Models absent from the report: %s", sorted(absent))
    return EvalReport(
        models=tuple(present),
        absent=tuple(name for name in names if name in absent),
        holdout_labels=tuple(holdout_labels),
        metrics=tuple(metrics),
        n_runs=n_runs,
        seed=seed,
        errors=errors,
        tests=tuple(tests),
        flags=frozenset(flags),
    )


def relative_improvement(report: EvalReport, model_a: str, model_b: str) -> dict[tuple[str, str], float]:
    """Return per (label, metric) how many percent fewer errors ``model_a`` makes than ``model_b``."""

    improvement: dict[tuple[str, str], float] = {}
    for label in report.holdout_labels:
        for metric in report.metrics:
            reference = report.mean(model_b, label, metric)
            ours = report.mean(model_a, label, metric)
            improvement[label, metric] = 100.0 * (reference - ours) / reference if reference else math.nan
    return improvement
