"""Tests for the command line."""

from __future__ import annotations

from collections.abc import Iterator
import json
import logging
from pathlib import Path

import pytest

from ttergm.cli import build_parser, main
from ttergm.const import DOMAIN, EDGES_SUFFIX, EXIT_CONFIG, EXIT_DATA, EXIT_IO, EXIT_OK, SIMULATED_DIR, USERS_DIR

pytestmark = pytest.mark.integration


@pytest.fixture(autouse=True)
def reset_package_logger() -> Iterator[None]:
    """Drop the stderr handler main() installs."""
    yield
    logger = logging.getLogger(DOMAIN)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def write_config(tmp_path: Path):
    """Return a function writing a JSON run config."""

    def write(raw: dict, name: str = "run.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(raw), encoding="utf-8")
        return path

    return write


@pytest.fixture
def ingest_raw(tmp_path: Path, event_log: Path, follower_file: Path, date_range: tuple[str, str]) -> dict:
    """Return a run config that ingests the fixture log."""
    start, end = date_range
    return {
        "seed": 42,
        "output_dir": str(tmp_path / "out"),
        "log_level": "warning",
        "ingest": {
            "events": str(event_log),
            "follower_counts": str(follower_file),
            "start": start,
            "end": end,
            "top_k_repos": 1,
            "top_k_influencers": 1,
        },
    }


def test_help_exits_cleanly(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "ingest" in capsys.readouterr().out


def test_unknown_flag_is_a_usage_error(tmp_path: Path) -> None:
    with pytest.raises(SystemExit) as exc:
        main(["ingest", "--config", str(tmp_path / "run.json"), "--bogus"])
    assert exc.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--config", "run.json", "--threads", "0"])
    assert exc.value.code == EXIT_CONFIG


def test_parser_overrides() -> None:
    argv = ["simulate", "--config", "run.json", "--seed", "18446744073709551615", "--out", "x"]
    args = build_parser().parse_args(argv)
    assert args.command == "simulate"
    assert args.seed == 2**64 - 1
    assert args.out == Path("x")
    assert args.threads is None


def test_ingest(write_config, ingest_raw: dict, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["ingest", "--config", str(write_config(ingest_raw))]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out == ["events=20 rejected=2", "2017-01 nodes=5 edges=5", "2017-02 nodes=5 edges=7"]


def test_invalid_config_exits_2(write_config, ingest_raw: dict) -> None:
    assert main(["ingest", "--config", str(write_config({**ingest_raw, "colour": True}))]) == EXIT_CONFIG
    assert main(["estimate", "--config", str(write_config(ingest_raw))]) == EXIT_CONFIG


def test_missing_files_exit_3(tmp_path: Path, write_config, ingest_raw: dict) -> None:
    assert main(["ingest", "--config", str(tmp_path / "absent.json")]) == EXIT_IO
    missing = {**ingest_raw, "ingest": {**ingest_raw["ingest"], "events": str(tmp_path / "absent.jsonl")}}
    assert main(["ingest", "--config", str(write_config(missing))]) == EXIT_IO


def test_bad_data_exits_4(tmp_path: Path, write_config, ingest_raw: dict) -> None:
    followers = tmp_path / "followers_bad.json"
    followers.write_text(json.dumps(["inf"]), encoding="utf-8")
    bad = {**ingest_raw, "ingest": {**ingest_raw["ingest"], "follower_counts": str(followers)}}
    assert main(["ingest", "--config", str(write_config(bad))]) == EXIT_DATA


def test_reruns_are_byte_identical(tmp_path: Path, write_config, ingest_raw: dict) -> None:
    out = Path(ingest_raw["output_dir"])
    raw = {
        **ingest_raw,
        "estimate": {"network": str(out / USERS_DIR), "preset": "classic-tergm"},
        "simulate": {
            "network": str(out / USERS_DIR),
            "estimate": str(out / "estimate.json"),
            "horizon": 2,
            "mcmc": {"burn_in_sweeps": 5, "n_samples": 10},
        },
    }
    config = str(write_config(raw))
    for command in ("ingest", "estimate", "simulate"):
        assert main([command, "--config", config]) == EXIT_OK

    def simulated(directory: Path) -> dict[str, bytes]:
        return {path.name: path.read_bytes() for path in sorted(directory.glob(f"*{EDGES_SUFFIX}"))}

    first = simulated(out / SIMULATED_DIR)
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "again")]) == EXIT_OK
    assert simulated(tmp_path / "again" / SIMULATED_DIR) == first
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "other"), "--seed", "43"]) == EXIT_OK
    assert len(simulated(tmp_path / "other" / SIMULATED_DIR)) == len(first)
