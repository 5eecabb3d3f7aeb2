"""Maximum pseudolikelihood and Monte Carlo maximum likelihood estimation."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import enum
import logging
import math
from typing import NamedTuple

import numpy as np
from scipy.special import expit, logsumexp

from ..const import (
    CONDITION_LIMIT,
    FLAG_DEGENERATE,
    FLAG_ESS_WARNING,
    FLAG_NO_IMPROVEMENT,
    FLAG_RIDGE,
    FLAG_SEPARATION,
    MAX_STEP_HALVINGS,
    MCMLE_INNER_MAX_ITER,
    MCMLE_LL_TOL,
    MCMLE_MAX_OUTER,
    MCMLE_STEP_TOL,
    MPLE_GRADIENT_TOL,
    MPLE_MAX_ITER,
    RIDGE_LAMBDA,
    SEPARATION_THETA_LIMIT,
)
from ..exceptions import EstimationError, ModelConfigError
from ..helpers import derive_seed, make_rng
from .graph import CovariateTable, DirectedGraph, TemporalNetwork
from .sampler import McmcConfig, SampleBatch, estimate_log_normalizer_ratio, sample_networks
from .statistics import ModelSpec, change_statistics_matrix, compute_statistics

_LOGGER = logging.getLogger(__name__)

FitUnit = tuple[DirectedGraph | None, DirectedGraph]

# objective changes below this relative size are rounding noise
_ROUNDING = 1e-12


class Method(enum.Enum):
    """Estimation method."""

    MPLE = "MPLE"
    MCMLE = "MCMLE"


@dataclass(frozen=True)
class EstimationOptions:
    """Tolerances and iteration caps of the optimizers."""

    gradient_tol: float = MPLE_GRADIENT_TOL
    max_iter: int = MPLE_MAX_ITER
    step_tol: float = MCMLE_STEP_TOL
    ll_tol: float = MCMLE_LL_TOL
    inner_max_iter: int = MCMLE_INNER_MAX_ITER
    max_halvings: int = MAX_STEP_HALVINGS
    ridge: float = RIDGE_LAMBDA


@dataclass(frozen=True, eq=False)
class EstimationResult:
    """Fitted coefficients with standard errors and convergence metadata."""

    term_names: tuple[str, ...]
    theta_hat: np.ndarray
    std_errors: np.ndarray
    log_likelihood_path: tuple[float, ...]
    converged: bool
    iterations: int
    method: Method
    gradient_norm: float = math.nan
    flags: frozenset[str] = field(default_factory=frozenset)
    seed: int | None = None

    def spec(self) -> ModelSpec:
        """Return the fitted model."""
        return ModelSpec.from_names(self.term_names, self.theta_hat.tolist())


class BootstrapResult(NamedTuple):
    """Bootstrap standard errors and the replicate estimates behind them."""

    std_errors: np.ndarray
    replicates: np.ndarray
    n_dropped: int


class _Design(NamedTuple):
    rows: np.ndarray
    response: np.ndarray


def fit_units(data: TemporalNetwork, spec: ModelSpec) -> list[FitUnit]:
    """Return the ``(prev, current)`` pairs a spec is fitted on.

    Temporal specs use every transition; static specs treat each snapshot as
    an independent observation.
    """

    if spec.is_temporal:
        units: list[FitUnit] = list(data.transitions())
        if not units:
            raise ModelConfigError("temporal terms need at least two snapshots")
        return units
    return [(None, graph) for graph in data.graphs]


def _design(unit: FitUnit, cov: CovariateTable, spec: ModelSpec) -> _Design:
    prev, current = unit
    rows = change_statistics_matrix(current, prev, cov, spec)
    off_diagonal = ~np.eye(current.n, dtype=bool)
    return _Design(rows, current.adjacency[off_diagonal].astype(np.float64))


def _weighted_design(designs: Sequence[_Design]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = np.concatenate([design.rows for design in designs])
    response = np.concatenate([design.response for design in designs])
    unique, counts = np.unique(np.column_stack([rows, response]), axis=0, return_counts=True)
    return unique[:, :-1], unique[:, -1], counts.astype(np.float64)


def _solve(information: np.ndarray, gradient: np.ndarray, ridge: float) -> tuple[np.ndarray, bool]:
    """Solve information @ step = gradient, adding a ridge when ill-conditioned."""

    try:
        if np.linalg.cond(information) < CONDITION_LIMIT:
            return np.linalg.solve(information, gradient), False
    except np.linalg.LinAlgError:
        pass
    regularized = information + ridge * np.eye(information.shape[0])
    return np.linalg.lstsq(regularized, gradient, rcond=None)[0], True


def _std_errors(information: np.ndarray, ridge: float) -> tuple[np.ndarray, bool]:
    try:
        if np.linalg.cond(information) < CONDITION_LIMIT:
            return np.sqrt(np.abs(np.diag(np.linalg.inv(information)))), False
    except np.linalg.LinAlgError:
        pass
    regularized = information + ridge * np.eye(information.shape[0])
    return np.sqrt(np.abs(np.diag(np.linalg.pinv(regularized)))), True


def _newton(
    objective: Callable[[np.ndarray], float],
    derivatives: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    start: np.ndarray,
    options: EstimationOptions,
    max_iter: int,
    limit: float | None = None,
) -> tuple[np.ndarray, int, bool, float, set[str], list[float]]:
    """Maximize a concave objective by Newton-Raphson with step halving.

    Returns (argmax, iterations, converged, gradient norm, flags, objective path).
    The objective never decreases between accepted iterates.
    """

    theta = start.copy()
    current = objective(theta)
    path = [current]
    flags: set[str] = set()
    gradient_norm = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        gradient, information = derivatives(theta)
        gradient_norm = float(np.max(np.abs(gradient)))
        if gradient_norm < options.gradient_tol:
            return theta, iterations - 1, True, gradient_norm, flags, path
        step, ridged = _solve(information, gradient, options.ridge)
        if ridged:
            flags.add(FLAG_RIDGE)
        floor = current - _ROUNDING * (1.0 + abs(current))
        size = 1.0
        candidate = theta + step
        value = objective(candidate)
        halvings = 0
        while not value >= floor and halvings < options.max_halvings:
            size /= 2
            candidate = theta + size * step
            value = objective(candidate)
            halvings += 1
        if not value >= floor:
            _LOGGER.debug("No improving step after %s halvings (gradient %.3g)", halvings, gradient_norm)
            flags.add(FLAG_NO_IMPROVEMENT)
            return theta, iterations, False, gradient_norm, flags, path
        theta, current = candidate, value
        path.append(current)
        _LOGGER.debug("Newton iteration %s: objective %.10g, step %.3g", iterations, current, size)
        if limit is not None and np.max(np.abs(theta)) > limit:
            flags.add(FLAG_SEPARATION)
            return theta, iterations, False, gradient_norm, flags, path
    gradient, _ = derivatives(theta)
    gradient_norm = float(np.max(np.abs(gradient)))
    return theta, iterations, gradient_norm < options.gradient_tol, gradient_norm, flags, path


def _fit_designs(
    designs: Sequence[_Design], spec: ModelSpec, options: EstimationOptions
) -> EstimationResult:
    rows, response, weights = _weighted_design(designs)

    def objective(theta: np.ndarray) -> float:
        eta = rows @ theta
        return float(weights @ (response * eta - np.logaddexp(0.0, eta)))

    def derivatives(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mu = expit(rows @ theta)
        gradient = rows.T @ (weights * (response - mu))
        information = rows.T @ (rows * (weights * mu * (1.0 - mu))[:, None])
        return gradient, information

    theta, iterations, converged, gradient_norm, flags, path = _newton(
        objective,
        derivatives,
        np.zeros(len(spec)),
        options,
        options.max_iter,
        SEPARATION_THETA_LIMIT,
    )
    if response.min() == response.max():
        # all dyads share one state: the logistic MLE lies at infinity
        flags.add(FLAG_SEPARATION)
        converged = False
    _, information = derivatives(theta)
    std_errors, ridged = _std_errors(information, options.ridge)
    if ridged:
        flags.add(FLAG_RIDGE)
    return EstimationResult(
        term_names=tuple(spec.term_names),
        theta_hat=theta,
        std_errors=std_errors,
        log_likelihood_path=tuple(path),
        converged=converged,
        iterations=iterations,
        method=Method.MPLE,
        gradient_norm=gradient_norm,
        flags=frozenset(flags),
    )


def mple(
    data: TemporalNetwork,
    cov: CovariateTable,
    spec: ModelSpec,
    options: EstimationOptions | None = None,
) -> EstimationResult:
    """Fit ``spec`` by maximum pseudolikelihood.

    Every dyad of every fit unit is one weighted logistic observation: the
    response is its state in N^t and the covariates are its change statistics.
    Identical rows are merged into weights before Newton-Raphson.
    """

    options = options or EstimationOptions()
    designs = [_design(unit, cov, spec) for unit in fit_units(data, spec)]
    result = _fit_designs(designs, spec, options)
    if result.converged:
        _LOGGER.info("MPLE converged after %s iterations: %s", result.iterations, result.theta_hat)
    else:
        _LOGGER.warning("MPLE did not converge (flags: %s)", sorted(result.flags))
    return result


def _importance_moments(statistics: np.ndarray, shift: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Return log mean exp(G shift), the weighted mean and covariance of G."""

    log_weights = statistics @ shift
    log_total = float(logsumexp(log_weights))
    weights = np.exp(log_weights - log_total)
    mean = weights @ statistics
    centered = statistics - mean
    covariance = centered.T @ (centered * weights[:, None])
    return log_total - math.log(statistics.shape[0]), mean, covariance


def _sample_units(
    units: Sequence[FitUnit],
    cov: CovariateTable,
    spec: ModelSpec,
    mcmc: McmcConfig,
    outer: int,
    threads: int,
) -> list[SampleBatch]:
    def draw(index: int) -> SampleBatch:
        prev, current = units[index]
        config = mcmc.with_seed(derive_seed(mcmc.seed, outer, index))
        return sample_networks(prev, cov, spec, config, initial=current)

    if threads <= 1 or len(units) == 1:
        return [draw(index) for index in range(len(units))]
    with ThreadPoolExecutor(max_workers=min(threads, len(units))) as pool:
        return list(pool.map(draw, range(len(units))))


def mcmle(
    data: TemporalNetwork,
    cov: CovariateTable,
    spec: ModelSpec,
    mcmc: McmcConfig,
    max_outer: int = MCMLE_MAX_OUTER,
    *,
    options: EstimationOptions | None = None,
    start: EstimationResult | None = None,
    threads: int = 1,
) -> EstimationResult:
    """Refine an MPLE fit by Monte Carlo maximum likelihood.

    Each outer iteration samples every fit unit at theta_k (chains start at
    the observed N^t) and maximizes the importance-sampled log-likelihood
    ratio, summed over units, by Newton steps with halving. The log-likelihood
    path is cumulative, relative to the starting point.
    """

    if max_outer < 1:
        raise ModelConfigError(f"max_outer must be at least 1, got {max_outer}")
    options = options or EstimationOptions()
    start = start or mple(data, cov, spec, options)
    units = fit_units(data, spec)
    observed = np.asarray([compute_statistics(current, prev, cov, spec) for prev, current in units])
    flags = set(start.flags - {FLAG_NO_IMPROVEMENT})
    theta = start.theta_hat.copy()
    path = [0.0]
    converged = False
    gradient_norm = math.nan
    information = np.eye(len(spec))
    outer = 0

    for outer in range(1, max_outer + 1):
        batches = _sample_units(units, cov, spec.with_theta(theta), mcmc, outer, threads)
        if any(batch.degenerate for batch in batches):
            flags.add(FLAG_DEGENERATE)
        samples = [batch.statistics for batch in batches]

        def objective(shift: np.ndarray, samples: list[np.ndarray] = samples) -> float:
            return float(
                sum(
                    shift @ g_obs - _importance_moments(stats, shift)[0]
                    for g_obs, stats in zip(observed, samples, strict=True)
                )
            )

        def derivatives(
            shift: np.ndarray, samples: list[np.ndarray] = samples
        ) -> tuple[np.ndarray, np.ndarray]:
            gradient = np.zeros(len(spec))
            info = np.zeros((len(spec), len(spec)))
            for g_obs, stats in zip(observed, samples, strict=True):
                _, mean, covariance = _importance_moments(stats, shift)
                gradient += g_obs - mean
                info += covariance
            return gradient, info

        shift, _, _, gradient_norm, inner_flags, _ = _newton(
            objective, derivatives, np.zeros(len(spec)), options, options.inner_max_iter
        )
        flags |= inner_flags - {FLAG_NO_IMPROVEMENT}
        for batch in batches:
            if estimate_log_normalizer_ratio(theta + shift, theta, batch).low_ess:
                flags.add(FLAG_ESS_WARNING)
        _, information = derivatives(shift)
        gain = objective(shift)
        path.append(path[-1] + gain)
        theta = theta + shift
        step_norm = float(np.max(np.abs(shift)))
        _LOGGER.debug("MCMLE iteration %s: theta %s, step %.3g, gain %.3g", outer, theta, step_norm, gain)

        if FLAG_NO_IMPROVEMENT in inner_flags and not np.any(shift):
            flags.add(FLAG_NO_IMPROVEMENT)
            _LOGGER.warning("MCMLE stopped: no improving step at iteration %s", outer)
            break
        if step_norm < options.step_tol:
            converged = True
            break
        # a large step that barely moves the approximated likelihood
        if gain < options.ll_tol:
            flags.add(FLAG_NO_IMPROVEMENT)
            _LOGGER.warning("MCMLE stopped: log-likelihood gain %.3g below %s at iteration %s", gain, options.ll_tol, outer)
            break

    std_errors, ridged = _std_errors(information, options.ridge)
    if ridged:
        flags.add(FLAG_RIDGE)
    if converged:
        _LOGGER.info("MCMLE converged after %s outer iterations: %s", outer, theta)
    else:
        _LOGGER.warning("MCMLE did not converge after %s outer iterations", outer)
    return EstimationResult(
        term_names=tuple(spec.term_names),
        theta_hat=theta,
        std_errors=std_errors,
        log_likelihood_path=tuple(path),
        converged=converged,
        iterations=outer,
        method=Method.MCMLE,
        gradient_norm=gradient_norm,
        flags=frozenset(flags),
        seed=mcmc.seed,
    )


def bootstrap_std_errors(
    data: TemporalNetwork,
    cov: CovariateTable,
    spec: ModelSpec,
    n_boot: int,
    seed: int,
    *,
    options: EstimationOptions | None = None,
    threads: int = 1,
) -> BootstrapResult:
    """Estimate standard errors by resampling fit units with replacement.

    Replicate ``b`` draws its resample from ``make_rng(seed, b)`` and refits
    the MPLE. Non-converged replicates are dropped; more than half dropped is
    an error.
    """

    if n_boot < 1:
        raise ModelConfigError(f"n_boot must be at least 1, got {n_boot}")
    options = options or EstimationOptions()
    units = fit_units(data, spec)
    if len(units) < 2:
        raise EstimationError(f"bootstrap needs at least two transitions, got {len(units)}")
    designs = [_design(unit, cov, spec) for unit in units]

    def replicate(index: int) -> EstimationResult:
        picks = make_rng(seed, index).integers(0, len(designs), size=len(designs))
        return _fit_designs([designs[pick] for pick in picks], spec, options)

    if threads <= 1:
        fits = [replicate(index) for index in range(n_boot)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(replicate, range(n_boot)))

    kept = [fit.theta_hat for fit in fits if fit.converged]
    dropped = n_boot - len(kept)
    if dropped:
        _LOGGER.warning("Dropped %s of %s non-converged bootstrap replicates", dropped, n_boot)
    if dropped * 2 > n_boot:
        raise EstimationError(f"{dropped} of {n_boot} bootstrap replicates did not converge")
    replicates = np.asarray(kept)
    std_errors = replicates.std(axis=0, ddof=1) if len(kept) >= 2 else np.zeros(len(spec))
    return BootstrapResult(std_errors, replicates, dropped)
