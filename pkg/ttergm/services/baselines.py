"""Comparison models: the influencer block model and the classic TERGM preset."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from ..const import FLAG_EMPTY_BLOCK, PRESET_CLASSIC, PRESET_TTERGM
from ..exceptions import GraphError, ModelConfigError, UniverseMismatchError
from ..helpers import make_rng
from .graph import CovariateTable, DirectedGraph, TemporalNetwork
from .statistics import ModelSpec, StatisticTerm, TermTag

_LOGGER = logging.getLogger(__name__)

FOLLOWER_BLOCK = 0
INFLUENCER_BLOCK = 1
BLOCK_NAMES = ("follower", "influencer")

CLASSIC_TAGS = (
    TermTag.EDGES,
    TermTag.MUTUAL,
    TermTag.TRANSITIVE_TRIADS,
    TermTag.HOMOPHILY_INFLUENCER,
    TermTag.STABILITY,
)
TRIADIC_TAGS = (
    TermTag.TRIADIC_DIRECT_LINKS,
    TermTag.TRIADIC_PATH2,
    TermTag.TRIADIC_PATH3,
    TermTag.INFLUENCER_TRIANGLE,
)


@dataclass(frozen=True, eq=False)
class BlockModel:
    """Two-block Bernoulli model; ``p[a, b]`` is the arc probability from block a to block b."""

    block_of: np.ndarray
    p: np.ndarray
    flags: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        """Validate block assignments and rates."""
        block_of = np.asarray(self.block_of, dtype=np.int64)
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "block_of", block_of)
        object.__setattr__(self, "p", p)
        if block_of.ndim != 1:
            raise GraphError("block_of must be a vector")
        if p.shape != (2, 2):
            raise GraphError(f"rate matrix must be 2x2, got {p.shape}")
        if np.any((block_of < 0) | (block_of > 1)):
            raise GraphError("every node needs block 0 or 1")
        if not np.all((p >= 0.0) & (p <= 1.0)):
            raise GraphError("block rates must lie in [0, 1]")

    @property
    def n(self) -> int:
        """Return the universe size."""
        return int(self.block_of.shape[0])

    def dyad_probabilities(self) -> np.ndarray:
        """Return the n x n matrix of arc probabilities (zero on the diagonal)."""
        probs = self.p[self.block_of[:, None], self.block_of[None, :]]
        np.fill_diagonal(probs, 0.0)
        return probs


def fit_block_model(data: TemporalNetwork, cov: CovariateTable) -> BlockModel:
    """Fit the block rates by pooled edge counts.

    Blocks are the influencer covariate. With several snapshots the targets of
    every transition (all but the first snapshot) are pooled; a single snapshot
    is used as is. A block pair without possible dyads gets rate 0 and the
    ``empty_block`` flag.
    """

    if cov.n != data.n:
        raise UniverseMismatchError(f"covariates cover {cov.n} nodes, network has {data.n}")
    graphs = data.graphs[1:] if len(data) > 1 else data.graphs
    block_of = cov.influencer_mask.astype(np.int64)
    members = [block_of == block for block in (FOLLOWER_BLOCK, INFLUENCER_BLOCK)]
    sizes = [int(mask.sum()) for mask in members]
    total = np.sum([graph.adjacency for graph in graphs], axis=0, dtype=np.int64)

    p = np.zeros((2, 2))
    flags: set[str] = set()
    for a in (FOLLOWER_BLOCK, INFLUENCER_BLOCK):
        for b in (FOLLOWER_BLOCK, INFLUENCER_BLOCK):
            possible = sizes[a] * (sizes[b] - (1 if a == b else 0)) * len(graphs)
            if possible == 0:
                flags.add(FLAG_EMPTY_BLOCK)
                continue
            observed = int(total[np.ix_(members[a], members[b])].sum())
            p[a, b] = observed / possible

    if flags:
        _LOGGER.warning("Block model has empty block pairs (sizes %s); their rates are 0", sizes)
    _LOGGER.info("Fitted block model on %s snapshots: %s", len(graphs), p.tolist())
    return BlockModel(block_of, p, frozenset(flags))


def sample_block_model(m: BlockModel, n_samples: int, seed: int) -> list[DirectedGraph]:
    """Draw ``n_samples`` graphs with independent Bernoulli dyads."""

    if n_samples < 0:
        raise ModelConfigError(f"n_samples must be non-negative, got {n_samples}")
    rng = make_rng(seed)
    probs = m.dyad_probabilities()
    return [
        DirectedGraph(m.n, (rng.random((m.n, m.n)) < probs).astype(np.uint8)) for _ in range(n_samples)
    ]


def classic_tergm_spec() -> ModelSpec:
    """Return the classic TERGM preset with zero coefficients."""

    return ModelSpec(tuple(StatisticTerm(tag) for tag in CLASSIC_TAGS))


def ttergm_spec() -> ModelSpec:
    """Return the TTERGM preset: the classic terms followed by the triadic influencer terms."""

    return ModelSpec(tuple(StatisticTerm(tag) for tag in CLASSIC_TAGS + TRIADIC_TAGS))


def preset_spec(name: str) -> ModelSpec:
    """Resolve a preset name to its spec."""

    if name == PRESET_CLASSIC:
        return classic_tergm_spec()
    if name == PRESET_TTERGM:
        return ttergm_spec()
    raise ModelConfigError(f"unknown model preset {name!r}")
