"""Shared fixtures for the ttergm tests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from ttergm.services.graph import CovariateTable, DirectedGraph, TemporalNetwork

# (created_at, type, actor, repo); months 2017-01 and 2017-02, repository r1 has the most watchers
FIXTURE_EVENTS = [
    ("2017-01-02T10:00:00Z", "WatchEvent", "inf", "r1"),
    ("2017-01-03T10:00:00Z", "WatchEvent", "alice", "r1"),
    ("2017-01-04T10:00:00Z", "ForkEvent", "bob", "r1"),
    ("2017-01-05T10:00:00Z", "WatchEvent", "carol", "r2"),
    ("2017-01-06T10:00:00Z", "PushEvent", "alice", "r2"),
    ("2017-01-07T10:00:00Z", "PullRequestReviewCommentEvent", "inf", "r2"),
    ("2017-01-08T10:00:00Z", "IssueCommentEvent", "inf", "r1"),
    ("2017-01-09T10:00:00Z", "MemberEvent", "alice", "r2"),
    ("2017-01-10T10:00:00Z", "IssuesEvent", "bob", "r2"),
    ("2017-01-11T10:00:00Z", "GollumEvent", "carol", "r2"),
    ("2017-02-01T10:00:00Z", "ReleaseEvent", "alice", "r1"),
    ("2017-02-02T10:00:00Z", "PublicEvent", "inf", "r1"),
    ("2017-02-03T10:00:00Z", "PullRequestEvent", "carol", "r1"),
    ("2017-02-04T10:00:00Z", "PushEvent", "bob", "r2"),
    ("2017-02-05T10:00:00Z", "DeleteEvent", "bob", "r1"),
    ("2017-02-06T10:00:00Z", "CommitCommentEvent", "carol", "r2"),
    ("2017-02-07T10:00:00Z", "CreateEvent", "alice", "r2"),
    ("2017-02-09T10:00:00Z", "WatchEvent", "carol", "r1"),
]

FIXTURE_FOLLOWERS = {"inf": 50000, "alice": 10, "bob": 5, "carol": 1}

FIXTURE_START = "2017-01-01T00:00:00Z"
FIXTURE_END = "2017-02-28T23:59:59Z"

# follower counts of the ten most followed users of the reference cohort, in rank order
TOP_FOLLOWED = [
    ("lBMOoXAjxIN_Dc3alQNLZQ", 52722),
    ("BhQS5KA8AvmQJXbsVeusdw", 30161),
    ("s0jAeLRt2onrivaUCqdJrg", 25827),
    ("QFB1aZ8GXkNYHyfWe7aEeA", 24604),
    ("jAGnWUFUmnBc9ydeQbIfDQ", 24510),
    ("hXalEIoEWnEbCSfiQI1LNA", 23076),
    ("eUnkVgArKJiNOBhb0w53_Q", 18522),
    ("VRyyOPSJUCS5jRlDtwjefA", 15755),
    ("wNDkYd6NACSuvLCnxog23w", 15396),
    ("wHfAzUFXU8D186qTl9c54w", 14928),
]


def event_line(created_at: str, event_type: str, actor: str, repo: str) -> str:
    """Return one archive line."""
    payload = {"member": {"id": "carol"}} if event_type == "MemberEvent" else {}
    return json.dumps(
        {"type": event_type, "created_at": created_at, "actor": {"id": actor}, "repo": {"id": repo}, "payload": payload}
    )


@pytest.fixture
def event_lines() -> list[str]:
    """Return the 20-line log: 18 events covering every type plus 2 malformed lines."""
    lines = [event_line(*event) for event in FIXTURE_EVENTS]
    lines.insert(5, "{not json")
    lines.insert(12, json.dumps({"type": "PushEvent", "created_at": "2017-01-20T00:00:00Z", "repo": {"id": "r1"}}))
    return lines


@pytest.fixture
def event_log(tmp_path: Path, event_lines: list[str]) -> Path:
    """Write the fixture log to disk."""
    path = tmp_path / "events.jsonl"
    path.write_text("\n".join(event_lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def follower_file(tmp_path: Path) -> Path:
    """Write the fixture follower counts to disk."""
    path = tmp_path / "followers.json"
    path.write_text(json.dumps(FIXTURE_FOLLOWERS), encoding="utf-8")
    return path


@pytest.fixture
def cycle3() -> DirectedGraph:
    """Return the directed 3-cycle 0 -> 1 -> 2 -> 0."""
    return DirectedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def half_dense() -> DirectedGraph:
    """Return a 6-node graph with exactly half of its 30 dyads present."""
    return DirectedGraph.from_edges(6, [(u, v) for u in range(6) for v in range(6) if u != v and (u + v) % 2][:15])


def random_network(n: int, steps: int, density: float, seed: int, influencers: tuple[int, ...] = ()) -> TemporalNetwork:
    """Return a network of independent random snapshots."""
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(steps):
        adj = (rng.random((n, n)) < density).astype(np.uint8)
        np.fill_diagonal(adj, 0)
        graphs.append(DirectedGraph(n, adj))
    return TemporalNetwork.from_graphs(graphs, covariates=CovariateTable.from_influencers(n, influencers))


@pytest.fixture
def small_network() -> TemporalNetwork:
    """Return 4 random snapshots over 8 users, two of them influencers."""
    return random_network(8, 4, 0.3, seed=7, influencers=(0, 1))


@pytest.fixture
def make_network():
    """Return the random network factory."""
    return random_network


@pytest.fixture
def top_followed() -> list[tuple[str, int]]:
    """Return the reference follower ranking."""
    return list(TOP_FOLLOWED)


@pytest.fixture
def followers() -> dict[str, int]:
    """Return the fixture follower counts."""
    return dict(FIXTURE_FOLLOWERS)


@pytest.fixture
def date_range() -> tuple[str, str]:
    """Return the inclusive bounds of the fixture months."""
    return FIXTURE_START, FIXTURE_END
