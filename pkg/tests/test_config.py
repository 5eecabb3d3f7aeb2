"""Tests for run config validation."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from ttergm.config import load_config, validate_config
from ttergm.const import CONF_ESTIMATE, CONF_EVALUATE, CONF_INGEST, CONF_SIMULATE, UINT64_MAX
from ttergm.exceptions import ConfigError
from ttergm.helpers import derive_seed, parse_timestamp
from ttergm.services.estimation import EstimationOptions
from ttergm.services.sampler import McmcConfig, Proposal

pytestmark = pytest.mark.unit


def test_defaults() -> None:
    config = validate_config({})
    assert config.seed == 0
    assert config.output_dir == Path("out")
    assert config.log_level == "INFO"
    assert config.threads >= 1
    assert config.blocks == {}
    with pytest.raises(ConfigError):
        config.block(CONF_ESTIMATE)


def test_estimate_block_defaults() -> None:
    config = validate_config({"seed": 12, "log_level": "debug", "estimate": {"network": "out/users"}})
    block = config.block(CONF_ESTIMATE)
    assert block["preset"] == "ttergm"
    assert block["method"] == "MPLE"
    assert block["bootstrap"] == 0
    assert config.log_level == "DEBUG"
    assert config.estimation_options() == EstimationOptions()
    assert config.mcmc(CONF_ESTIMATE) == McmcConfig(seed=derive_seed(12, 2))


def test_stage_seeds_differ() -> None:
    config = validate_config({"seed": 3})
    seeds = {config.stage_seed(command) for command in (CONF_INGEST, CONF_ESTIMATE, CONF_SIMULATE, CONF_EVALUATE)}
    assert len(seeds) == 4
    assert config.stage_seed(CONF_SIMULATE) == validate_config({"seed": 3}).stage_seed(CONF_SIMULATE)


def test_mcmc_block() -> None:
    config = validate_config(
        {
            "simulate": {
                "network": "n",
                "estimate": "e.json",
                "horizon": 2,
                "mcmc": {"burn_in_sweeps": 7, "n_samples": 3, "proposal": "RandomToggle"},
            }
        }
    )
    mcmc = config.mcmc(CONF_SIMULATE)
    assert (mcmc.burn_in_sweeps, mcmc.n_samples, mcmc.sample_interval_sweeps) == (7, 3, 1)
    assert mcmc.proposal is Proposal.RANDOM_TOGGLE


@pytest.mark.parametrize(
    "raw",
    [
        [],
        {"unknown": 1},
        {"seed": -1},
        {"seed": UINT64_MAX + 1},
        {"log_level": "verbose"},
        {"threads": 0},
        {"estimate": {"network": "n", "preset": "ergm"}},
        {"estimate": {"network": "n", "mcmc": {"n_samples": 0}}},
        {"estimate": {"network": "n", "mcmc": {"thinning": 2}}},
        {"estimate": {"network": "n", "gradient_tol": 0}},
        {"estimate": {"preset": "ttergm"}},
        {"evaluate": {"network": "n", "holdout": []}},
        {"ingest": {"events": "e.jsonl", "start": "last week", "end": "2017-12-31T23:59:59Z"}},
    ],
)
def test_invalid_configs(raw: object) -> None:
    with pytest.raises(ConfigError):
        validate_config(raw)


def test_ingest_dates() -> None:
    block = {"events": "e.jsonl", "start": "2017-01-01T00:00:00Z", "end": "2017-12-31T23:59:59Z"}
    config = validate_config({"ingest": block})
    cfg = config.ingest_config({"a": 1})
    assert cfg.start == parse_timestamp("2017-01-01T00:00:00Z")
    assert cfg.labels[0] == "2017-01"
    assert cfg.labels[-1] == "2017-12"
    assert cfg.top_k_influencers == 10
    reversed_range = validate_config({"ingest": {**block, "start": block["end"], "end": block["start"]}})
    with pytest.raises(ConfigError):
        reversed_range.ingest_config(None)


def test_input_paths_are_checked(tmp_path: Path) -> None:
    network = tmp_path / "users"
    network.mkdir()
    config = validate_config({"simulate": {"network": str(network), "estimate": str(tmp_path / "missing.json")}})
    assert config.input_paths(CONF_SIMULATE) == [network, tmp_path / "missing.json"]
    with pytest.raises(FileNotFoundError):
        config.check_paths(CONF_SIMULATE)


def test_pipeline_config_may_name_outputs_of_earlier_stages(tmp_path: Path) -> None:
    events = tmp_path / "events.jsonl"
    events.write_text("", encoding="utf-8")
    out = tmp_path / "out"
    config = validate_config(
        {
            "output_dir": str(out),
            "ingest": {"events": str(events), "start": "2017-01-01T00:00:00Z", "end": "2017-02-28T23:59:59Z"},
            "estimate": {"network": str(out / "users")},
        }
    )
    config.check_paths(CONF_INGEST)
    with pytest.raises(FileNotFoundError):
        config.check_paths(CONF_ESTIMATE)


def test_overrides() -> None:
    config = validate_config({"seed": 1, "threads": 2})
    changed = config.with_overrides(seed=9, output_dir=Path("elsewhere"))
    assert (changed.seed, changed.output_dir, changed.threads) == (9, Path("elsewhere"), 2)
    assert config.with_overrides() == config


def test_load_config(tmp_path: Path) -> None:
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 5, "output_dir": str(tmp_path / "out")}), encoding="utf-8")
    assert load_config(path).seed == 5
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.json")
