"""Event-log ingestion: parse events, pick influencers and top repositories, build monthly networks."""

from __future__ import annotations

from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
import enum
import json
import logging
import math
from typing import Any

import voluptuous as vol

from ..const import (
    DEFAULT_TOP_K_INFLUENCERS,
    DEFAULT_TOP_K_REPOS,
    INFLUENCER_CUTOFF_NOTE,
    REJECTION_SAMPLE_SIZE,
    WINDOW_CALENDAR_MONTH,
)
from ..exceptions import IngestionError
from ..helpers import month_label, month_range, parse_timestamp, shift_month
from .graph import CovariateTable, DirectedGraph, NodeCovariates, NodeKind, Snapshot, TemporalNetwork
from .statistics import TermTag, influencer_source_counts

_LOGGER = logging.getLogger(__name__)


class EventCategory(enum.Enum):
    """Social role of an event; receptive events are also called participative."""

    RECEPTIVE = "receptive"
    CONTRIBUTIVE = "contributive"


class EventType(enum.Enum):
    """The 14 platform event types."""

    WATCH = "WatchEvent"
    PULL_REQUEST_REVIEW_COMMENT = "PullRequestReviewCommentEvent"
    ISSUE_COMMENT = "IssueCommentEvent"
    MEMBER = "MemberEvent"
    ISSUES = "IssuesEvent"
    GOLLUM = "GollumEvent"
    FORK = "ForkEvent"
    RELEASE = "ReleaseEvent"
    PUBLIC = "PublicEvent"
    PULL_REQUEST = "PullRequestEvent"
    PUSH = "PushEvent"
    DELETE = "DeleteEvent"
    COMMIT_COMMENT = "CommitCommentEvent"
    CREATE = "CreateEvent"

    @property
    def category(self) -> EventCategory:
        """Return the category of the event type (WatchEvent counts as receptive)."""
        return EventCategory.RECEPTIVE if self in _RECEPTIVE else EventCategory.CONTRIBUTIVE


_RECEPTIVE = frozenset(
    {
        EventType.WATCH,
        EventType.PULL_REQUEST_REVIEW_COMMENT,
        EventType.ISSUE_COMMENT,
        EventType.MEMBER,
        EventType.ISSUES,
        EventType.GOLLUM,
    }
)

REASON_MALFORMED_JSON = "malformed_json"
REASON_NOT_AN_OBJECT = "not_an_object"
REASON_UNKNOWN_TYPE = "unknown_type"
REASON_MISSING_FIELD = "missing_field"
REASON_BAD_TIMESTAMP = "bad_timestamp"

_ID = vol.All(vol.Any(str, int), vol.Coerce(str), vol.Length(min=1))
_REF = vol.Schema({vol.Required("id"): _ID}, extra=vol.ALLOW_EXTRA)

EVENT_SCHEMA = vol.Schema(
    {
        vol.Required("type"): vol.In([event_type.value for event_type in EventType]),
        vol.Required("created_at"): str,
        vol.Required("actor"): _REF,
        vol.Required("repo"): _REF,
        vol.Optional("payload"): vol.Any(dict, None),
    },
    extra=vol.ALLOW_EXTRA,
)


@dataclass(frozen=True)
class EventRecord:
    """One platform event."""

    timestamp: int
    event_type: EventType
    actor: str
    repo: str
    target_user: str | None = None


@dataclass(frozen=True)
class ParseResult:
    """Parsed events plus the rejection report."""

    records: tuple[EventRecord, ...]
    lines_read: int
    rejected: int
    rejection_samples: tuple[str, ...]
    reasons: Mapping[str, int]
    out_of_range: int = 0

    def report(self) -> dict[str, Any]:
        """Return the rejection report as a JSON-friendly dict."""

        return {
            "lines_read": self.lines_read,
            "accepted": len(self.records),
            "rejected": self.rejected,
            "out_of_range": self.out_of_range,
            "reasons": dict(sorted(self.reasons.items())),
            "samples": list(self.rejection_samples),
        }


def _target_user(payload: Any) -> str | None:
    if not isinstance(payload, dict):
        return None
    member = payload.get("member")
    if isinstance(member, dict) and isinstance(member.get("id"), str | int) and str(member["id"]):
        return str(member["id"])
    return None


def _parse_line(line: str) -> EventRecord | str:
    """Return the record of one line, or the rejection reason."""

    try:
        raw = json.loads(line)
    except json.JSONDecodeError:
        return REASON_MALFORMED_JSON
    if not isinstance(raw, dict):
        return REASON_NOT_AN_OBJECT
    try:
        event = EVENT_SCHEMA(raw)
    except vol.Invalid as err:
        return REASON_UNKNOWN_TYPE if err.path[:1] == ["type"] and "type" in raw else REASON_MISSING_FIELD
    try:
        timestamp = parse_timestamp(event["created_at"])
    except ValueError:
        return REASON_BAD_TIMESTAMP
    return EventRecord(
        timestamp=timestamp,
        event_type=EventType(event["type"]),
        actor=event["actor"]["id"],
        repo=event["repo"]["id"],
        target_user=_target_user(event.get("payload")),
    )


def parse_event_log(lines: Iterable[str | bytes], date_range: tuple[int, int] | None = None) -> ParseResult:
    """Parse newline-delimited JSON events in a single pass.

    Blank lines are skipped. Malformed lines and unknown event types are
    counted, the first few kept verbatim. Events outside ``date_range``
    (inclusive UTC seconds) are dropped and counted separately.
    """

    records: list[EventRecord] = []
    samples: list[str] = []
    reasons: Counter[str] = Counter()
    lines_read = 0
    out_of_range = 0
    try:
        for raw_line in lines:
            line = raw_line.decode("utf-8") if isinstance(raw_line, bytes) else raw_line
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            lines_read += 1
            parsed = _parse_line(line)
            if isinstance(parsed, str):
                reasons[parsed] += 1
                if len(samples) < REJECTION_SAMPLE_SIZE:
                    samples.append(line)
                continue
            if date_range is not None and not date_range[0] <= parsed.timestamp <= date_range[1]:
                out_of_range += 1
                continue
            records.append(parsed)
    except (OSError, UnicodeDecodeError) as err:
        raise IngestionError(f"cannot read event stream: {err}") from err

    rejected = sum(reasons.values())
    if rejected:
        _LOGGER.warning("Rejected %s of %s event lines: %s", rejected, lines_read, dict(reasons))
    _LOGGER.info("Parsed %s events from %s lines", len(records), lines_read)
    return ParseResult(tuple(records), lines_read, rejected, tuple(samples), dict(reasons), out_of_range)


@dataclass(frozen=True)
class IngestConfig:
    """Settings of one ingestion run; ``start`` and ``end`` are inclusive UTC seconds."""

    start: int
    end: int
    top_k_repos: int = DEFAULT_TOP_K_REPOS
    top_k_influencers: int = DEFAULT_TOP_K_INFLUENCERS
    window: str = WINDOW_CALENDAR_MONTH
    follower_counts: Mapping[str, int] | None = None

    def __post_init__(self) -> None:
        """Validate the date range, window and selection sizes."""
        if not self.start < self.end:
            raise IngestionError(f"date range start {self.start} must precede end {self.end}")
        if self.window != WINDOW_CALENDAR_MONTH:
            raise IngestionError(f"unsupported window {self.window!r}")
        if self.top_k_repos < 1 or self.top_k_influencers < 1:
            raise IngestionError("top-k sizes must be at least 1")

    @property
    def date_range(self) -> tuple[int, int]:
        """Return ``(start, end)``."""
        return (self.start, self.end)

    @property
    def labels(self) -> list[str]:
        """Return the month labels covered by the date range."""
        return month_range(self.start, self.end)


@dataclass(frozen=True)
class InfluencerSelection:
    """Selected influencers in rank order with the selection metadata."""

    user_ids: tuple[str, ...]
    counts: tuple[int, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)


def select_influencers(follower_counts: Mapping[str, int], k: int) -> InfluencerSelection:
    """Return the top-``k`` users by follower count, ties broken by user id."""

    if k < 1:
        raise IngestionError(f"k must be at least 1, got {k}")
    ranked = sorted(follower_counts.items(), key=lambda item: (-item[1], item[0]))[:k]
    metadata = {
        "k": k,
        "selected": len(ranked),
        "cutoff": ranked[-1][1] if ranked else None,
        "note": INFLUENCER_CUTOFF_NOTE,
    }
    return InfluencerSelection(
        tuple(user for user, _ in ranked), tuple(int(count) for _, count in ranked), metadata
    )


def rank_repositories(events: Iterable[EventRecord]) -> list[str]:
    """Rank repositories by distinct WatchEvent actors, ties broken by repo id."""

    watchers: dict[str, set[str]] = defaultdict(set)
    for event in events:
        stars = watchers[event.repo]
        if event.event_type is EventType.WATCH:
            stars.add(event.actor)
    return sorted(watchers, key=lambda repo: (-len(watchers[repo]), repo))


def influence_reach(events: Iterable[EventRecord]) -> dict[str, int]:
    """Return, per user, how many other users later acted on a repository the user acted on."""

    first: dict[str, dict[str, int]] = defaultdict(dict)
    last: dict[str, dict[str, int]] = defaultdict(dict)
    users: set[str] = set()
    for event in events:
        users.add(event.actor)
        repo_first = first[event.repo]
        repo_first[event.actor] = min(repo_first.get(event.actor, event.timestamp), event.timestamp)
        repo_last = last[event.repo]
        repo_last[event.actor] = max(repo_last.get(event.actor, event.timestamp), event.timestamp)

    reached: dict[str, set[str]] = {user: set() for user in users}
    for repo, starts in first.items():
        ends = last[repo]
        for user, started in starts.items():
            reached[user].update(other for other, ended in ends.items() if other != user and ended > started)
    return {user: len(others) for user, others in reached.items()}


@dataclass(frozen=True)
class IngestResult:
    """Network built from an event log plus the selections behind it."""

    network: TemporalNetwork
    influencers: InfluencerSelection
    top_repos: tuple[str, ...]
    follower_counts: Mapping[str, int]


def build_influence_network(events: Sequence[EventRecord], cfg: IngestConfig) -> IngestResult:
    """Build one snapshot per calendar month over a fixed node universe.

    Universe: influencers in rank order, then the other users active on a top
    repository (sorted by id), then the top repositories in rank order.
    Arcs per month: user -> repo when the user acted on the repository that
    month; influencer -> user when the user acted on a top repository that
    the influencer acted on earlier in the same or the previous month, or when
    the influencer added the user as a member of a top repository that month.
    """

    labels = cfg.labels
    in_range = sorted(
        (event for event in events if cfg.start <= event.timestamp <= cfg.end),
        key=lambda event: event.timestamp,
    )
    top_repos = tuple(rank_repositories(in_range)[: cfg.top_k_repos])
    if cfg.follower_counts is not None:
        follower_counts = {str(user): int(count) for user, count in cfg.follower_counts.items()}
    else:
        _LOGGER.warning("No follower counts given; ranking influencers by influence reach")
        follower_counts = influence_reach(in_range)
    selection = select_influencers(follower_counts, cfg.top_k_influencers)
    influencer_set = set(selection.user_ids)

    top_set = set(top_repos)
    relevant = [event for event in in_range if event.repo in top_set]
    others = sorted({event.actor for event in relevant} - influencer_set)
    node_ids = (*selection.user_ids, *others, *top_repos)
    index = {node_id: position for position, node_id in enumerate(node_ids)}
    n_users = len(selection.user_ids) + len(others)
    covariates = CovariateTable(
        tuple(
            NodeCovariates(
                is_influencer=node_id in influencer_set, follower_count=max(0, follower_counts.get(node_id, 0))
            )
            for node_id in node_ids[:n_users]
        )
        + tuple(NodeCovariates(kind=NodeKind.REPO) for _ in top_repos)
    )

    # earliest influencer activity per (influencer, repo, month)
    influencer_first: dict[tuple[str, str, str], int] = {}
    for event in relevant:
        if event.actor in influencer_set:
            key = (event.actor, event.repo, month_label(event.timestamp))
            influencer_first.setdefault(key, event.timestamp)

    arcs: dict[str, set[tuple[int, int]]] = {label: set() for label in labels}
    for event in relevant:
        label = month_label(event.timestamp)
        month_arcs = arcs[label]
        actor = index[event.actor]
        month_arcs.add((actor, index[event.repo]))
        if event.actor in influencer_set and event.target_user is not None:
            member = index.get(event.target_user)
            if member is not None and member < n_users and member != actor:
                month_arcs.add((actor, member))
        previous = shift_month(label, -1)
        for influencer in selection.user_ids:
            if influencer == event.actor:
                continue
            started = min(
                influencer_first.get((influencer, event.repo, label), math.inf),
                influencer_first.get((influencer, event.repo, previous), math.inf),
            )
            if started < event.timestamp:
                month_arcs.add((index[influencer], actor))

    snapshots = tuple(
        Snapshot(DirectedGraph.from_edges(len(node_ids), sorted(arcs[label])), label) for label in labels
    )
    network = TemporalNetwork(covariates, snapshots, node_ids)
    for summary in network.summary():
        _LOGGER.info("Snapshot %s: %s nodes, %s edges", summary["label"], summary["nodes"], summary["edges"])
    return IngestResult(network, selection, top_repos, follower_counts)


@dataclass(frozen=True)
class ConnectionFeatures:
    """Triadic connection counts of one influencer in one snapshot."""

    direct_links: int
    path2_links: int
    path3_links: int
    influencer_triangles: int


def extract_connection_features(
    tn: TemporalNetwork, influencers: Sequence[int] | None = None
) -> dict[str, dict[int, ConnectionFeatures]]:
    """Return per snapshot label the connection features of each influencer.

    Counts use the user-user projection; the first snapshot has no previous
    one, so its influencer triangles are zero.
    """

    users = tn.user_projection()
    chosen = list(users.covariates.influencers if influencers is None else influencers)
    flagged = set(users.covariates.influencers)
    for node in chosen:
        if node not in flagged:
            raise IngestionError(f"node {node} is not an influencer")

    features: dict[str, dict[int, ConnectionFeatures]] = {}
    prev: DirectedGraph | None = None
    for snapshot in users.snapshots:
        counts = influencer_source_counts(snapshot.graph, prev, users.covariates)
        features[snapshot.label] = {
            node: ConnectionFeatures(
                direct_links=int(counts[TermTag.TRIADIC_DIRECT_LINKS][node]),
                path2_links=int(counts[TermTag.TRIADIC_PATH2][node]),
                path3_links=int(counts[TermTag.TRIADIC_PATH3][node]),
                influencer_triangles=int(counts[TermTag.INFLUENCER_TRIANGLE][node]),
            )
            for node in chosen
        }
        prev = snapshot.graph
    return features


@dataclass(frozen=True)
class ActivityRow:
    """Receptive and contributive event counts of one user."""

    user: str
    is_influencer: bool
    receptive: int
    contributive: int


@dataclass(frozen=True)
class ActivityProfile:
    """Per-user activity and the group means (receptive, contributive)."""

    rows: tuple[ActivityRow, ...]
    influencer_mean: tuple[float, float]
    follower_mean: tuple[float, float]


def _group_mean(rows: Sequence[ActivityRow]) -> tuple[float, float]:
    if not rows:
        return (math.nan, math.nan)
    return (
        sum(row.receptive for row in rows) / len(rows),
        sum(row.contributive for row in rows) / len(rows),
    )


def activity_profile(events: Iterable[EventRecord], influencers: Iterable[str]) -> ActivityProfile:
    """Count receptive and contributive events per acting user."""

    flagged = set(influencers)
    counts: dict[str, Counter[EventCategory]] = defaultdict(Counter)
    for event in events:
        counts[event.actor][event.event_type.category] += 1
    rows = tuple(
        ActivityRow(
            user=user,
            is_influencer=user in flagged,
            receptive=counts[user][EventCategory.RECEPTIVE],
            contributive=counts[user][EventCategory.CONTRIBUTIVE],
        )
        for user in sorted(counts)
    )
    return ActivityProfile(
        rows,
        _group_mean([row for row in rows if row.is_influencer]),
        _group_mean([row for row in rows if not row.is_influencer]),
    )
