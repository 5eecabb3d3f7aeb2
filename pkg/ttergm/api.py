"""Pipeline API: ingest, estimate, simulate and evaluate from a run config."""

from __future__ import annotations

import asyncio
from collections.abc import Callable
from dataclasses import replace
from functools import partial
import logging
import math
from pathlib import Path
from typing import Any, TypeVar

import voluptuous as vol

from .config import RunConfig
from .const import (
    ACTIVITY_FILE,
    CONF_BOOTSTRAP,
    CONF_ESTIMATE,
    CONF_EVALUATE,
    CONF_INGEST,
    CONF_SIMULATE,
    ESTIMATE_FILE,
    EVALUATION_CSV,
    EVALUATION_JSON,
    FEATURES_FILE,
    FLAG_DEGENERATE,
    MODEL_BLOCK,
    MODEL_TERGM,
    MODEL_TTERGM,
    NETWORK_DIR,
    REJECTIONS_FILE,
    SIMULATED_DIR,
    TOPOLOGY_FILE,
    USERS_DIR,
)
from .exceptions import ConfigError, DegeneracyError, GraphError, IngestionError
from .services.baselines import classic_tergm_spec, preset_spec, ttergm_spec
from .services.estimation import EstimationResult, Method, bootstrap_std_errors, mcmle, mple
from .services.evaluation import BlockModelBaseline, EvalReport, TergmModel, relative_improvement, run_holdout
from .services.graph import TemporalNetwork
from .services.ingestion import activity_profile, build_influence_network, extract_connection_features, parse_event_log
from .services.sampler import generate_sequence
from .services.serialization import (
    dump_json,
    estimation_from_dict,
    estimation_to_dict,
    load_json,
    read_network,
    write_activity,
    write_evaluation,
    write_features,
    write_network,
    write_topology,
)
from .services.statistics import ModelSpec
from .services.topology import topology_report

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")

FOLLOWER_COUNTS_SCHEMA = vol.Schema({vol.Coerce(str): vol.All(vol.Coerce(int), vol.Range(min=0))})


class TtergmApi:
    """Runs the pipeline stages of one run config.

    Every stage reads its inputs, does the CPU-bound work in the default
    executor and writes its outputs below ``config.output_dir``. Stages return
    the summary lines printed by the command line.
    """

    def __init__(self, config: RunConfig) -> None:
        """Initialize the API."""
        self.config = config
        self.lock = asyncio.Lock()

    @property
    def output_dir(self) -> Path:
        """Return the directory all outputs are written to."""

        return self.config.output_dir

    async def _async_add_executor_job(self, target: Callable[..., _T], *args: Any) -> _T:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, partial(target, *args))

    async def async_run(self, command: str) -> list[str]:
        """Run one pipeline stage by name."""

        handlers = {
            CONF_INGEST: self.async_ingest,
            CONF_ESTIMATE: self.async_estimate,
            CONF_SIMULATE: self.async_simulate,
            CONF_EVALUATE: self.async_evaluate,
        }
        if command not in handlers:
            raise ConfigError(f"unknown command {command!r}")
        async with self.lock:
            return await handlers[command]()

    def _prepare(self, command: str) -> None:
        self.config.check_paths(command)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    async def _async_read_users(self, command: str) -> TemporalNetwork:
        network = await self._async_add_executor_job(read_network, Path(self.config.block(command)["network"]))
        return network.user_projection()

    # Ingest

    def _read_follower_counts(self) -> dict[str, int] | None:
        path = self.config.block(CONF_INGEST).get("follower_counts")
        if path is None:
            return None
        raw = load_json(Path(path))
        try:
            return FOLLOWER_COUNTS_SCHEMA(raw)
        except vol.Invalid as err:
            raise IngestionError(f"follower counts in {path} must map user ids to counts: {err}") from err

    def _ingest(self) -> list[str]:
        block = self.config.block(CONF_INGEST)
        cfg = self.config.ingest_config(self._read_follower_counts())
        with Path(block["events"]).open("rb") as handle:
            parsed = parse_event_log(handle, cfg.date_range)

        result = build_influence_network(parsed.records, cfg)
        users = result.network.user_projection()
        write_network(self.output_dir / NETWORK_DIR, result.network)
        write_network(self.output_dir / USERS_DIR, users)
        write_features(self.output_dir / FEATURES_FILE, extract_connection_features(result.network), users.node_ids)
        write_activity(self.output_dir / ACTIVITY_FILE, activity_profile(parsed.records, result.influencers.user_ids))
        write_topology(
            self.output_dir / TOPOLOGY_FILE,
            {snapshot.label: topology_report(snapshot.graph) for snapshot in users.snapshots},
        )
        dump_json(
            self.output_dir / REJECTIONS_FILE,
            {**parsed.report(), "influencers": dict(result.influencers.metadata), "top_repos": list(result.top_repos)},
        )

        lines = [f"events={parsed.lines_read} rejected={parsed.rejected}"]
        lines += [f"{row['label']} nodes={row['nodes']} edges={row['edges']}" for row in result.network.summary()]
        return lines

    async def async_ingest(self) -> list[str]:
        """Parse the event log and write the monthly networks and their reports."""

        await self._async_add_executor_job(self._prepare, CONF_INGEST)
        _LOGGER.info("Ingesting %s", self.config.block(CONF_INGEST)["events"])
        return await self._async_add_executor_job(self._ingest)

    # Estimate

    def _model_spec(self) -> ModelSpec:
        block = self.config.block(CONF_ESTIMATE)
        if "terms" in block:
            return ModelSpec.from_names(block["terms"])
        return preset_spec(block["preset"])

    def _estimate(self, users: TemporalNetwork) -> list[str]:
        block = self.config.block(CONF_ESTIMATE)
        spec = self._model_spec()
        options = self.config.estimation_options()
        threads = self.config.threads
        result = mple(users, users.covariates, spec, options)
        if Method(block["method"]) is Method.MCMLE:
            try:
                result = mcmle(
                    users,
                    users.covariates,
                    spec,
                    self.config.mcmc(CONF_ESTIMATE),
                    block["max_outer"],
                    options=options,
                    start=result,
                    threads=threads,
                )
            except DegeneracyError as err:
                _LOGGER.warning("MCMLE degenerated, reporting the MPLE start: %s", err)
                result = replace(result, converged=False, flags=result.flags | {FLAG_DEGENERATE})

        payload = estimation_to_dict(result, {"seed": self.config.seed, **block})
        if block[CONF_BOOTSTRAP]:
            boot = bootstrap_std_errors(
                users,
                users.covariates,
                spec,
                block[CONF_BOOTSTRAP],
                self.config.stage_seed(CONF_BOOTSTRAP),
                options=options,
                threads=threads,
            )
            payload["bootstrap"] = {"std_errors": boot.std_errors, "n_dropped": boot.n_dropped}
        dump_json(self.output_dir / ESTIMATE_FILE, payload)
        return [
            f"method={result.method.value} converged={str(result.converged).lower()} "
            f"terms={len(result.term_names)} iterations={result.iterations}",
            *(f"{name}={value:.6g}" for name, value in zip(result.term_names, result.theta_hat, strict=True)),
        ]

    async def async_estimate(self) -> list[str]:
        """Fit the configured model and write the estimate JSON."""

        await self._async_add_executor_job(self._prepare, CONF_ESTIMATE)
        users = await self._async_read_users(CONF_ESTIMATE)
        _LOGGER.info("Estimating on %s snapshots of %s users", len(users), users.n)
        return await self._async_add_executor_job(self._estimate, users)

    # Simulate

    def _simulate(self, users: TemporalNetwork) -> list[str]:
        block = self.config.block(CONF_SIMULATE)
        fit: EstimationResult = estimation_from_dict(load_json(Path(block["estimate"])))
        generated = generate_sequence(
            users.snapshots[-1],
            users.covariates,
            fit.spec(),
            block["horizon"],
            self.config.mcmc(CONF_SIMULATE),
            threads=self.config.threads,
            node_ids=users.node_ids,
        )
        write_network(self.output_dir / SIMULATED_DIR, generated)
        lines = [f"{row['label']} nodes={row['nodes']} edges={row['edges']}" for row in generated.summary()[1:]]
        if generated.degenerate_labels:
            lines.append(f"degenerate={','.join(sorted(generated.degenerate_labels))}")
        return lines

    async def async_simulate(self) -> list[str]:
        """Generate snapshots after the last observed one with a fitted model."""

        await self._async_add_executor_job(self._prepare, CONF_SIMULATE)
        users = await self._async_read_users(CONF_SIMULATE)
        if not len(users):
            raise GraphError("the network has no snapshots to continue")
        return await self._async_add_executor_job(self._simulate, users)

    # Evaluate

    def _evaluate(self, users: TemporalNetwork) -> list[str]:
        block = self.config.block(CONF_EVALUATE)
        method = Method(block["method"])
        mcmc = self.config.mcmc(CONF_EVALUATE)
        models = [
            TergmModel(MODEL_TTERGM, ttergm_spec(), method=method, mcmc=mcmc, max_outer=block["max_outer"]),
            TergmModel(MODEL_TERGM, classic_tergm_spec(), method=method, mcmc=mcmc, max_outer=block["max_outer"]),
            BlockModelBaseline(MODEL_BLOCK),
        ]
        report = run_holdout(
            users,
            models,
            block["holdout"],
            block["n_runs"],
            self.config.stage_seed(CONF_EVALUATE),
            threads=self.config.threads,
        )
        write_evaluation(self.output_dir / EVALUATION_CSV, self.output_dir / EVALUATION_JSON, report)
        return self._evaluation_summary(report)

    @staticmethod
    def _evaluation_summary(report: EvalReport) -> list[str]:
        lines = [
            f"{model} {label} {metric}={report.mean(model, label, metric):.6g}"
            for model in report.models
            for label in report.holdout_labels
            for metric in report.metrics
        ]
        if report.absent:
            lines.append(f"absent={','.join(report.absent)}")
        for reference in (MODEL_TERGM, MODEL_BLOCK):
            if MODEL_TTERGM not in report.models or reference not in report.models:
                continue
            for (label, metric), percent in relative_improvement(report, MODEL_TTERGM, reference).items():
                if math.isnan(percent):
                    continue
                test = report.pair(MODEL_TTERGM, reference, label, metric)
                _LOGGER.info(
                    "%s makes %.2f%% less %s error than %s in %s (p=%s, significant=%s)",
                    MODEL_TTERGM,
                    percent,
                    metric,
                    reference,
                    label,
                    test.p_value,
                    test.significant,
                )
        return lines

    async def async_evaluate(self) -> list[str]:
        """Run the holdout comparison of TTERGM, TERGM and the block model."""

        await self._async_add_executor_job(self._prepare, CONF_EVALUATE)
        users = await self._async_read_users(CONF_EVALUATE)
        _LOGGER.info("Evaluating on %s snapshots, holdout %s", len(users), self.config.block(CONF_EVALUATE)["holdout"])
        return await self._async_add_executor_job(self._evaluate, users)
