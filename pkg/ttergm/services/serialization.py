"""File formats: edge lists, network directories, results and reports."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from ..const import COVARIATES_FILE, EDGES_SUFFIX, NETWORK_MANIFEST, NODE_IDS_FILE
from ..exceptions import GraphError
from .baselines import BLOCK_NAMES, BlockModel
from .estimation import EstimationResult, Method
from .evaluation import EvalReport
from .graph import CovariateTable, DirectedGraph, NodeCovariates, NodeKind, Snapshot, TemporalNetwork
from .ingestion import ActivityProfile, ConnectionFeatures
from .sampler import SampleBatch
from .topology import TopologyReport

_LOGGER = logging.getLogger(__name__)


def _clean(value: Any) -> Any:
    """Map NaN and infinities to None and numpy scalars to Python ones."""

    if isinstance(value, np.ndarray):
        return [_clean(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Mapping):
        return {str(key): _clean(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [_clean(item) for item in value]
    return value


def dump_json(path: Path, payload: Any) -> None:
    """Write ``payload`` as sorted, indented JSON."""

    path.write_text(json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_json(path: Path) -> Any:
    """Read a JSON file, reporting malformed content as a data error."""

    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise GraphError(f"{path} is not valid JSON: {err}") from err


def _csv_value(value: Any) -> Any:
    cleaned = _clean(value)
    return "" if cleaned is None else cleaned


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write a CSV file with ``\\n`` line endings."""

    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_value(value) for value in row])


# Graphs and networks


def format_edge_list(graph: DirectedGraph) -> str:
    """Return the edge-list text: ``n=<count>`` then one ``u v`` line per arc."""

    lines = [f"n={graph.n}", *(f"{u} {v}" for u, v in graph.edges())]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> DirectedGraph:
    """Parse edge-list text produced by ``format_edge_list``."""

    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("n="):
        raise GraphError("edge list must start with an 'n=<count>' header")
    try:
        n = int(lines[0].removeprefix("n="))
        edges = [tuple(int(part) for part in line.split()) for line in lines[1:]]
    except ValueError as err:
        raise GraphError(f"malformed edge list: {err}") from err
    if any(len(edge) != 2 for edge in edges):
        raise GraphError("every edge line needs exactly two node ids")
    return DirectedGraph.from_edges(n, edges)  # type: ignore[arg-type]


def write_edge_list(path: Path, graph: DirectedGraph) -> None:
    """Write one graph as an edge-list file."""

    path.write_text(format_edge_list(graph), encoding="utf-8")


def read_edge_list(path: Path) -> DirectedGraph:
    """Read one edge-list file."""

    return parse_edge_list(path.read_text(encoding="utf-8"))


def covariates_to_dict(cov: CovariateTable) -> dict[str, dict[str, Any]]:
    """Return the covariate table keyed by node index."""

    return {
        str(index): {
            "is_influencer": node.is_influencer,
            "follower_count": node.follower_count,
            "kind": node.kind.value,
        }
        for index, node in enumerate(cov.nodes)
    }


def covariates_from_dict(raw: Mapping[str, Mapping[str, Any]]) -> CovariateTable:
    """Rebuild a covariate table from its JSON form."""

    if sorted(raw, key=lambda key: int(key) if str(key).isdigit() else -1) != [str(i) for i in range(len(raw))]:
        raise GraphError("covariate keys must be the node indices 0..n-1")
    indices = range(len(raw))
    try:
        return CovariateTable(
            tuple(
                NodeCovariates(
                    is_influencer=bool(raw[str(index)].get("is_influencer", False)),
                    follower_count=int(raw[str(index)].get("follower_count", 0)),
                    kind=NodeKind(raw[str(index)].get("kind", NodeKind.USER.value)),
                )
                for index in indices
            )
        )
    except (TypeError, ValueError, AttributeError) as err:
        raise GraphError(f"malformed covariate table: {err}") from err


def write_network(directory: Path, tn: TemporalNetwork) -> list[Path]:
    """Write a temporal network directory and return the files written."""

    directory.mkdir(parents=True, exist_ok=True)
    written = []
    manifest = {
        "n": tn.n,
        "labels": tn.labels,
        "degenerate_labels": sorted(tn.degenerate_labels),
        "summary": tn.summary(),
    }
    dump_json(directory / NETWORK_MANIFEST, manifest)
    dump_json(directory / COVARIATES_FILE, covariates_to_dict(tn.covariates))
    written += [directory / NETWORK_MANIFEST, directory / COVARIATES_FILE]
    if tn.node_ids is not None:
        dump_json(directory / NODE_IDS_FILE, list(tn.node_ids))
        written.append(directory / NODE_IDS_FILE)
    for snapshot in tn.snapshots:
        path = directory / f"{snapshot.label}{EDGES_SUFFIX}"
        write_edge_list(path, snapshot.graph)
        written.append(path)
    _LOGGER.info("Wrote network with %s snapshots to %s", len(tn), directory)
    return written


def read_network(directory: Path) -> TemporalNetwork:
    """Read a directory written by ``write_network``."""

    manifest = load_json(directory / NETWORK_MANIFEST)
    cov = covariates_from_dict(load_json(directory / COVARIATES_FILE))
    node_ids_path = directory / NODE_IDS_FILE
    node_ids = tuple(str(node) for node in load_json(node_ids_path)) if node_ids_path.exists() else None
    snapshots = tuple(
        Snapshot(read_edge_list(directory / f"{label}{EDGES_SUFFIX}"), str(label)) for label in manifest["labels"]
    )
    return TemporalNetwork(cov, snapshots, node_ids, frozenset(manifest.get("degenerate_labels", ())))


# Samples and fits


def write_sample_batch(path: Path, batch: SampleBatch) -> Path:
    """Write the statistics matrix as CSV and the chain diagnostics as a JSON sidecar."""

    write_csv(path, batch.term_names, batch.statistics.tolist())
    sidecar = path.with_suffix(".json")
    dump_json(
        sidecar,
        {
            "n_samples": batch.n_samples,
            "acceptance_rate": batch.acceptance_rate,
            "degenerate": batch.degenerate,
            "degenerate_fraction": batch.degenerate_fraction,
        },
    )
    return sidecar


def estimation_to_dict(result: EstimationResult, config: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Return the JSON form of a fit."""

    return {
        "method": result.method.value,
        "terms": list(result.term_names),
        "theta_hat": result.theta_hat,
        "std_errors": result.std_errors,
        "log_likelihood_path": list(result.log_likelihood_path),
        "converged": result.converged,
        "iterations": result.iterations,
        "gradient_norm": result.gradient_norm,
        "flags": sorted(result.flags),
        "seed": result.seed,
        "config": dict(config or {}),
    }


def estimation_from_dict(raw: Mapping[str, Any]) -> EstimationResult:
    """Rebuild a fit from its JSON form (missing numbers read as NaN)."""

    def floats(values: Sequence[float | None]) -> np.ndarray:
        return np.asarray([math.nan if value is None else float(value) for value in values])

    try:
        return EstimationResult(
            term_names=tuple(raw["terms"]),
            theta_hat=floats(raw["theta_hat"]),
            std_errors=floats(raw["std_errors"]),
            log_likelihood_path=tuple(floats(raw.get("log_likelihood_path", ())).tolist()),
            converged=bool(raw["converged"]),
            iterations=int(raw["iterations"]),
            method=Method(raw["method"]),
            gradient_norm=math.nan if raw.get("gradient_norm") is None else float(raw["gradient_norm"]),
            flags=frozenset(raw.get("flags", ())),
            seed=raw.get("seed"),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise GraphError(f"malformed estimation result: {err}") from err


def block_model_to_dict(model: BlockModel) -> dict[str, Any]:
    """Return the JSON form of a block model."""

    return {
        "blocks": list(BLOCK_NAMES),
        "block_of": model.block_of,
        "p": model.p,
        "flags": sorted(model.flags),
    }


# Reports


def evaluation_rows(report: EvalReport) -> list[list[Any]]:
    """Return one row per model x month x metric."""

    rows = []
    for model in report.models:
        for label in report.holdout_labels:
            for metric in report.metrics:
                values = report.errors[model][label][metric]
                std = float(np.std(values, ddof=1)) if len(values) > 1 else math.nan
                rows.append([model, label, metric, report.mean(model, label, metric), std, len(values)])
    return rows


def write_evaluation(csv_path: Path, json_path: Path, report: EvalReport) -> None:
    """Write the evaluation summary CSV and the raw per-run JSON."""

    write_csv(csv_path, ["model", "label", "metric", "mean_error", "std_error", "n_runs"], evaluation_rows(report))

    dump_json(
        json_path,
        {
            "models": list(report.models),
            "absent": list(report.absent),
            "holdout_labels": list(report.holdout_labels),
            "metrics": list(report.metrics),
            "n_runs": report.n_runs,
            "seed": report.seed,
            "errors": report.errors,
            "tests": [test._asdict() for test in report.tests],
            "flags": sorted(report.flags),
        },
    )


def write_features(
    path: Path, features: Mapping[str, Mapping[int, ConnectionFeatures]], node_ids: Sequence[str] | None
) -> None:
    """Write the connection features, one row per snapshot and influencer."""

    rows = [
        [
            label,
            node,
            node_ids[node] if node_ids else node,
            values.direct_links,
            values.path2_links,
            values.path3_links,
            values.influencer_triangles,
        ]
        for label, per_node in features.items()
        for node, values in per_node.items()
    ]
    write_csv(
        path,
        ["label", "node", "node_id", "direct_links", "path2_links", "path3_links", "influencer_triangles"],
        rows,
    )


def write_activity(path: Path, profile: ActivityProfile) -> None:
    """Write the per-user activity profile followed by the two group means."""

    rows: list[list[Any]] = [
        [row.user, int(row.is_influencer), row.receptive, row.contributive] for row in profile.rows
    ]
    rows.append(["mean:influencers", 1, *profile.influencer_mean])
    rows.append(["mean:followers", 0, *profile.follower_mean])
    write_csv(path, ["user", "is_influencer", "receptive", "contributive"], rows)


def write_topology(path: Path, reports: Mapping[str, TopologyReport]) -> None:
    """Write one topology row per snapshot label."""

    header = ["label", "n_nodes", "n_edges", "avg_shortest_path", "assortativity", "n_components", "avg_clustering"]
    write_csv(
        path,
        header,
        (
            [
                label,
                report.n_nodes,
                report.n_edges,
                report.avg_shortest_path,
                report.assortativity,
                report.n_components,
                report.avg_clustering,
            ]
            for label, report in reports.items()
        ),
    )
