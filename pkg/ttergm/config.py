"""Run configuration: JSON files validated with voluptuous."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, replace
import json
import logging
import os
from pathlib import Path
from typing import Any

import voluptuous as vol
from voluptuous.humanize import humanize_error

from .const import (
    CONF_BOOTSTRAP,
    CONF_ESTIMATE,
    CONF_EVALUATE,
    CONF_INGEST,
    CONF_SIMULATE,
    DEFAULT_BURN_IN_SWEEPS,
    DEFAULT_LOG_LEVEL,
    DEFAULT_N_CHAINS,
    DEFAULT_N_RUNS,
    DEFAULT_N_SAMPLES,
    DEFAULT_SAMPLE_INTERVAL_SWEEPS,
    DEFAULT_TOP_K_INFLUENCERS,
    DEFAULT_TOP_K_REPOS,
    LOG_LEVELS,
    MAX_STEP_HALVINGS,
    MCMLE_INNER_MAX_ITER,
    MCMLE_LL_TOL,
    MCMLE_MAX_OUTER,
    MCMLE_STEP_TOL,
    MPLE_GRADIENT_TOL,
    MPLE_MAX_ITER,
    PRESET_TTERGM,
    PRESETS,
    RIDGE_LAMBDA,
    UINT64_MAX,
    WINDOW_CALENDAR_MONTH,
)
from .exceptions import ConfigError
from .helpers import derive_seed, parse_timestamp
from .services.estimation import EstimationOptions, Method
from .services.ingestion import IngestConfig
from .services.sampler import McmcConfig, Proposal

_LOGGER = logging.getLogger(__name__)

COMMANDS = (CONF_INGEST, CONF_ESTIMATE, CONF_SIMULATE, CONF_EVALUATE)


def _timestamp(value: Any) -> int:
    """Validate an ISO-8601 timestamp and return UTC seconds."""

    try:
        return parse_timestamp(str(value))
    except ValueError as err:
        raise vol.Invalid(f"not an ISO-8601 timestamp: {value!r}") from err


SEED = vol.All(vol.Coerce(int), vol.Range(min=0, max=UINT64_MAX))
POSITIVE = vol.All(vol.Coerce(int), vol.Range(min=1))
TOLERANCE = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
PATH = vol.All(str, vol.Length(min=1))

MCMC_SCHEMA = vol.Schema(
    {
        vol.Optional("burn_in_sweeps", default=DEFAULT_BURN_IN_SWEEPS): POSITIVE,
        vol.Optional("sample_interval_sweeps", default=DEFAULT_SAMPLE_INTERVAL_SWEEPS): POSITIVE,
        vol.Optional("n_samples", default=DEFAULT_N_SAMPLES): POSITIVE,
        vol.Optional("n_chains", default=DEFAULT_N_CHAINS): POSITIVE,
        vol.Optional("proposal", default=Proposal.GIBBS_SWEEP.value): vol.In([proposal.value for proposal in Proposal]),
    },
    extra=vol.PREVENT_EXTRA,
)

INGEST_SCHEMA = vol.Schema(
    {
        vol.Required("events"): PATH,
        vol.Required("start"): _timestamp,
        vol.Required("end"): _timestamp,
        vol.Optional("top_k_repos", default=DEFAULT_TOP_K_REPOS): POSITIVE,
        vol.Optional("top_k_influencers", default=DEFAULT_TOP_K_INFLUENCERS): POSITIVE,
        vol.Optional("window", default=WINDOW_CALENDAR_MONTH): vol.In([WINDOW_CALENDAR_MONTH]),
        vol.Optional("follower_counts"): PATH,
    },
    extra=vol.PREVENT_EXTRA,
)

ESTIMATE_SCHEMA = vol.Schema(
    {
        vol.Required("network"): PATH,
        vol.Optional("preset", default=PRESET_TTERGM): vol.In(PRESETS),
        # explicit term names replace the preset
        vol.Optional("terms"): vol.All([str], vol.Length(min=1)),
        vol.Optional("method", default=Method.MPLE.value): vol.In([method.value for method in Method]),
        vol.Optional("mcmc", default=dict): MCMC_SCHEMA,
        vol.Optional("max_outer", default=MCMLE_MAX_OUTER): POSITIVE,
        vol.Optional("gradient_tol", default=MPLE_GRADIENT_TOL): TOLERANCE,
        vol.Optional("max_iter", default=MPLE_MAX_ITER): POSITIVE,
        vol.Optional("step_tol", default=MCMLE_STEP_TOL): TOLERANCE,
        vol.Optional("ll_tol", default=MCMLE_LL_TOL): TOLERANCE,
        vol.Optional("inner_max_iter", default=MCMLE_INNER_MAX_ITER): POSITIVE,
        vol.Optional("max_halvings", default=MAX_STEP_HALVINGS): POSITIVE,
        vol.Optional("ridge", default=RIDGE_LAMBDA): TOLERANCE,
        vol.Optional(CONF_BOOTSTRAP, default=0): vol.All(vol.Coerce(int), vol.Range(min=0)),
    },
    extra=vol.PREVENT_EXTRA,
)

SIMULATE_SCHEMA = vol.Schema(
    {
        vol.Required("network"): PATH,
        vol.Required("estimate"): PATH,
        vol.Optional("horizon", default=1): POSITIVE,
        vol.Optional("mcmc", default=dict): MCMC_SCHEMA,
    },
    extra=vol.PREVENT_EXTRA,
)

EVALUATE_SCHEMA = vol.Schema(
    {
        vol.Required("network"): PATH,
        vol.Required("holdout"): vol.All([str], vol.Length(min=1)),
        vol.Optional("n_runs", default=DEFAULT_N_RUNS): POSITIVE,
        vol.Optional("method", default=Method.MPLE.value): vol.In([method.value for method in Method]),
        vol.Optional("mcmc", default=dict): MCMC_SCHEMA,
        vol.Optional("max_outer", default=MCMLE_MAX_OUTER): POSITIVE,
    },
    extra=vol.PREVENT_EXTRA,
)

RUN_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional("seed", default=0): SEED,
        vol.Optional("output_dir", default="out"): PATH,
        vol.Optional("log_level", default=DEFAULT_LOG_LEVEL): vol.All(vol.Upper, vol.In(LOG_LEVELS)),
        vol.Optional("threads"): POSITIVE,
        vol.Optional(CONF_INGEST): INGEST_SCHEMA,
        vol.Optional(CONF_ESTIMATE): ESTIMATE_SCHEMA,
        vol.Optional(CONF_SIMULATE): SIMULATE_SCHEMA,
        vol.Optional(CONF_EVALUATE): EVALUATE_SCHEMA,
    },
    extra=vol.PREVENT_EXTRA,
)

# keys of the per-stage seed streams derived from the global seed
STAGE_SEED_KEYS: dict[str, int] = {
    command: index for index, command in enumerate((*COMMANDS, CONF_BOOTSTRAP), start=1)
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration."""

    seed: int
    output_dir: Path
    log_level: str
    threads: int
    blocks: Mapping[str, Mapping[str, Any]]

    def block(self, command: str) -> Mapping[str, Any]:
        """Return the block of ``command`` or raise ConfigError."""
        try:
            return self.blocks[command]
        except KeyError:
            raise ConfigError(f"config has no {command!r} block") from None

    def stage_seed(self, command: str) -> int:
        """Return the seed of one pipeline stage, derived from the global seed."""
        return derive_seed(self.seed, STAGE_SEED_KEYS[command])

    def input_paths(self, command: str) -> list[Path]:
        """Return the input paths referenced by the block of ``command``."""
        block = self.block(command)
        keys = ("events", "follower_counts", "network", "estimate")
        return [Path(block[key]) for key in keys if key in block]

    def check_paths(self, command: str) -> None:
        """Raise FileNotFoundError for a referenced input path that does not exist."""
        for path in self.input_paths(command):
            if not path.exists():
                raise FileNotFoundError(f"input path {path} does not exist")

    def mcmc(self, command: str) -> McmcConfig:
        """Return the MCMC settings of ``command`` seeded from the stage seed."""
        raw = self.block(command).get("mcmc", {})
        return McmcConfig(
            burn_in_sweeps=raw["burn_in_sweeps"],
            sample_interval_sweeps=raw["sample_interval_sweeps"],
            n_samples=raw["n_samples"],
            seed=self.stage_seed(command),
            proposal=Proposal(raw["proposal"]),
            n_chains=raw["n_chains"],
        )

    def estimation_options(self) -> EstimationOptions:
        """Return the optimizer settings of the estimate block."""
        block = self.block(CONF_ESTIMATE)
        return EstimationOptions(
            gradient_tol=block["gradient_tol"],
            max_iter=block["max_iter"],
            step_tol=block["step_tol"],
            ll_tol=block["ll_tol"],
            inner_max_iter=block["inner_max_iter"],
            max_halvings=block["max_halvings"],
            ridge=block["ridge"],
        )

    def ingest_config(self, follower_counts: Mapping[str, int] | None) -> IngestConfig:
        """Return the ingestion settings."""
        block = self.block(CONF_INGEST)
        if not block["start"] < block["end"]:
            raise ConfigError("ingest start must precede end")
        return IngestConfig(
            start=block["start"],
            end=block["end"],
            top_k_repos=block["top_k_repos"],
            top_k_influencers=block["top_k_influencers"],
            window=block["window"],
            follower_counts=follower_counts,
        )

    def with_overrides(
        self, *, seed: int | None = None, output_dir: Path | None = None, threads: int | None = None
    ) -> RunConfig:
        """Return the config with command-line overrides applied."""
        return replace(
            self,
            seed=self.seed if seed is None else seed,
            output_dir=self.output_dir if output_dir is None else output_dir,
            threads=self.threads if threads is None else threads,
        )


def validate_config(raw: Any) -> RunConfig:
    """Validate a parsed config document."""

    try:
        data = RUN_CONFIG_SCHEMA(raw)
    except vol.Invalid as err:
        raise ConfigError(f"invalid config: {humanize_error(raw, err)}") from err
    return RunConfig(
        seed=data["seed"],
        output_dir=Path(data["output_dir"]),
        log_level=data["log_level"],
        threads=data.get("threads") or os.cpu_count() or 1,
        blocks={command: data[command] for command in COMMANDS if command in data},
    )


def load_config(path: Path) -> RunConfig:
    """Read and validate a JSON config file.

    A missing or unreadable file raises OSError; malformed JSON or schema
    violations raise ConfigError.
    """

    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from err
    config = validate_config(raw)
    _LOGGER.debug("Loaded config %s", path)
    return config
