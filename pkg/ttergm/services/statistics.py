"""Sufficient statistics and change statistics of the model terms.

Counting conventions are fixed once for every term: tuples are ordered and
never divided by automorphism counts. Paths are simple (no repeated node).

``Edges``               number of arcs
``Mutual``              number of reciprocated dyads (each pair once)
``TransitiveTriads``    ordered triples i->j, j->k, i->k
``TwoStarsOut/In``      sum over nodes of C(outdeg, 2) / C(indeg, 2)
``HomophilyInfluencer`` arcs whose endpoints agree on is_influencer
``Stability``           dyads whose state is the same in the current and previous snapshot
``TriadicDirectLinks``  arcs influencer -> non-influencer
``TriadicPath2/3``      simple directed paths of length 2 / 3 from an influencer to a non-influencer
``InfluencerTriangle``  triples (r, f, x), r influencer, r->f, f->x, r->x with r->x already present before
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
import enum
import logging
import math

import numpy as np

from ..exceptions import ModelConfigError, UniverseMismatchError
from . import kernels
from .graph import CovariateTable, DirectedGraph, Dyad

_LOGGER = logging.getLogger(__name__)


class TermTag(enum.Enum):
    """Model terms; the value is the serialized tag string."""

    EDGES = "Edges"
    MUTUAL = "Mutual"
    TRANSITIVE_TRIADS = "TransitiveTriads"
    TWO_STARS_OUT = "TwoStarsOut"
    TWO_STARS_IN = "TwoStarsIn"
    HOMOPHILY_INFLUENCER = "HomophilyInfluencer"
    STABILITY = "Stability"
    TRIADIC_DIRECT_LINKS = "TriadicDirectLinks"
    TRIADIC_PATH2 = "TriadicPath2"
    TRIADIC_PATH3 = "TriadicPath3"
    INFLUENCER_TRIANGLE = "InfluencerTriangle"

    @property
    def code(self) -> int:
        """Return the kernel code of the term."""
        return _KERNEL_CODES[self]

    @property
    def is_temporal(self) -> bool:
        """Return True if the term needs the previous snapshot."""
        return self in TEMPORAL_TAGS

    @property
    def is_dyad_independent(self) -> bool:
        """Return True if the term's change statistic ignores the rest of the graph."""
        return self in DYAD_INDEPENDENT_TAGS


_KERNEL_CODES: dict[TermTag, int] = {
    TermTag.EDGES: kernels.EDGES,
    TermTag.MUTUAL: kernels.MUTUAL,
    TermTag.TRANSITIVE_TRIADS: kernels.TRANSITIVE_TRIADS,
    TermTag.TWO_STARS_OUT: kernels.TWO_STARS_OUT,
    TermTag.TWO_STARS_IN: kernels.TWO_STARS_IN,
    TermTag.HOMOPHILY_INFLUENCER: kernels.HOMOPHILY_INFLUENCER,
    TermTag.STABILITY: kernels.STABILITY,
    TermTag.TRIADIC_DIRECT_LINKS: kernels.TRIADIC_DIRECT_LINKS,
    TermTag.TRIADIC_PATH2: kernels.TRIADIC_PATH2,
    TermTag.TRIADIC_PATH3: kernels.TRIADIC_PATH3,
    TermTag.INFLUENCER_TRIANGLE: kernels.INFLUENCER_TRIANGLE,
}

TEMPORAL_TAGS = frozenset(
    {
        TermTag.STABILITY,
        TermTag.TRIADIC_DIRECT_LINKS,
        TermTag.TRIADIC_PATH2,
        TermTag.TRIADIC_PATH3,
        TermTag.INFLUENCER_TRIANGLE,
    }
)
DYAD_INDEPENDENT_TAGS = frozenset(
    {TermTag.EDGES, TermTag.HOMOPHILY_INFLUENCER, TermTag.STABILITY, TermTag.TRIADIC_DIRECT_LINKS}
)
_TRIADIC_TAGS = frozenset(
    {TermTag.TRIADIC_DIRECT_LINKS, TermTag.TRIADIC_PATH2, TermTag.TRIADIC_PATH3, TermTag.INFLUENCER_TRIANGLE}
)


@dataclass(frozen=True)
class StatisticTerm:
    """One model term, optionally scaled."""

    tag: TermTag
    scale: float = 1.0

    def __post_init__(self) -> None:
        """Validate the scale."""
        if not math.isfinite(self.scale) or self.scale == 0:
            raise ModelConfigError(f"term scale must be finite and non-zero, got {self.scale}")

    @property
    def name(self) -> str:
        """Return the serialized name, ``Tag`` or ``Tag*scale``."""
        if self.scale == 1.0:
            return self.tag.value
        return f"{self.tag.value}*{self.scale:g}"

    @classmethod
    def parse(cls, name: str) -> StatisticTerm:
        """Parse a serialized term name."""
        tag_name, _, scale = name.partition("*")
        try:
            tag = TermTag(tag_name.strip())
        except ValueError as err:
            raise ModelConfigError(f"unknown statistic term {name!r}") from err
        try:
            return cls(tag, float(scale) if scale else 1.0)
        except ValueError as err:
            raise ModelConfigError(f"bad scale in term {name!r}") from err


@dataclass(frozen=True)
class ModelSpec:
    """Ordered terms plus the coefficient vector theta."""

    terms: tuple[StatisticTerm, ...]
    theta: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        """Validate length and finiteness of theta."""
        terms = tuple(self.terms)
        theta = tuple(float(value) for value in self.theta) if self.theta else (0.0,) * len(terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "theta", theta)
        if not terms:
            raise ModelConfigError("a model needs at least one term")
        if len(theta) != len(terms):
            raise ModelConfigError(f"{len(theta)} coefficients for {len(terms)} terms")
        if not all(math.isfinite(value) for value in theta):
            raise ModelConfigError("all coefficients must be finite")

    @classmethod
    def from_names(cls, names: Iterable[str], theta: Sequence[float] | None = None) -> ModelSpec:
        """Build a spec from serialized term names."""
        return cls(tuple(StatisticTerm.parse(name) for name in names), tuple(theta) if theta is not None else ())

    def with_theta(self, theta: Sequence[float] | np.ndarray) -> ModelSpec:
        """Return the same terms with new coefficients."""
        return ModelSpec(self.terms, tuple(float(value) for value in theta))

    @property
    def term_names(self) -> list[str]:
        """Return the serialized term names."""
        return [term.name for term in self.terms]

    @property
    def theta_vector(self) -> np.ndarray:
        """Return theta as a float64 vector."""
        return np.asarray(self.theta, dtype=np.float64)

    @property
    def codes(self) -> np.ndarray:
        """Return the kernel codes of the terms."""
        return np.asarray([term.tag.code for term in self.terms], dtype=np.int64)

    @property
    def scales(self) -> np.ndarray:
        """Return the term scales."""
        return np.asarray([term.scale for term in self.terms], dtype=np.float64)

    @property
    def is_temporal(self) -> bool:
        """Return True if any term needs the previous snapshot."""
        return any(term.tag.is_temporal for term in self.terms)

    @property
    def is_dyad_independent(self) -> bool:
        """Return True if every term is dyad independent (MPLE is then the exact MLE)."""
        return all(term.tag.is_dyad_independent for term in self.terms)

    def __len__(self) -> int:
        """Return the number of terms."""
        return len(self.terms)


def check_inputs(current: DirectedGraph, prev: DirectedGraph | None, cov: CovariateTable, spec: ModelSpec) -> None:
    """Raise if the graphs, covariates and spec cannot be combined."""

    if cov.n != current.n:
        raise UniverseMismatchError(f"covariates cover {cov.n} nodes, graph has {current.n}")
    if prev is not None and prev.n != current.n:
        raise UniverseMismatchError(f"previous snapshot has {prev.n} nodes, current has {current.n}")
    if prev is None and spec.is_temporal:
        temporal = [term.name for term in spec.terms if term.tag.is_temporal]
        raise ModelConfigError(f"terms {temporal} need a previous snapshot")


def kernel_arrays(
    current: DirectedGraph, prev: DirectedGraph | None, cov: CovariateTable
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the (adjacency, previous adjacency, influencer mask) triple the kernels expect."""

    prev_adj = prev.adjacency if prev is not None else np.zeros_like(current.adjacency)
    return current.adjacency, prev_adj, cov.influencer_mask


def influencer_source_counts(
    current: DirectedGraph, prev: DirectedGraph | None, cov: CovariateTable
) -> dict[TermTag, np.ndarray]:
    """Return the triadic counts per source node (zero for non-influencers).

    Summing a vector over all nodes gives the corresponding model statistic.
    Without a previous snapshot no influencer triangle can form.
    """

    adj = current.adjacency.astype(np.int64)
    prev_adj = prev.adjacency.astype(np.int64) if prev is not None else np.zeros_like(adj)
    source = cov.influencer_mask.astype(bool)
    target = ~source
    two = adj @ adj
    mutual_degree = (adj * adj.T).sum(axis=1)
    walks3 = two @ adj
    # drop walks r->a->r->b and r->b->c->b, add back r->b->r->b counted twice
    paths3 = walks3 - mutual_degree[:, None] * adj - adj * mutual_degree[None, :] + adj * adj.T
    counts = {
        TermTag.TRIADIC_DIRECT_LINKS: (adj[:, target]).sum(axis=1),
        TermTag.TRIADIC_PATH2: (two[:, target]).sum(axis=1),
        TermTag.TRIADIC_PATH3: (paths3[:, target]).sum(axis=1),
        TermTag.INFLUENCER_TRIANGLE: (two * adj * prev_adj).sum(axis=1),
    }
    return {tag: np.where(source, values, 0) for tag, values in counts.items()}


def _raw_statistic(
    tag: TermTag,
    adj: np.ndarray,
    prev_adj: np.ndarray | None,
    influencer: np.ndarray,
    triadic: dict[TermTag, np.ndarray] | None,
) -> int:
    n = adj.shape[0]
    if tag is TermTag.EDGES:
        return int(adj.sum())
    if tag is TermTag.MUTUAL:
        return int((adj * adj.T).sum()) // 2
    if tag is TermTag.TRANSITIVE_TRIADS:
        return int(((adj @ adj) * adj).sum())
    if tag is TermTag.TWO_STARS_OUT:
        degrees = adj.sum(axis=1)
        return int((degrees * (degrees - 1) // 2).sum())
    if tag is TermTag.TWO_STARS_IN:
        degrees = adj.sum(axis=0)
        return int((degrees * (degrees - 1) // 2).sum())
    if tag is TermTag.HOMOPHILY_INFLUENCER:
        same = influencer[:, None] == influencer[None, :]
        return int((adj * same).sum())
    if tag is TermTag.STABILITY:
        assert prev_adj is not None
        return int((adj == prev_adj).sum()) - n
    assert triadic is not None
    return int(triadic[tag].sum())


def compute_statistics(
    current: DirectedGraph, prev: DirectedGraph | None, cov: CovariateTable, spec: ModelSpec
) -> np.ndarray:
    """Return the statistic vector g(current, prev) aligned to ``spec.terms``."""

    check_inputs(current, prev, cov, spec)
    adj = current.adjacency.astype(np.int64)
    prev_adj = prev.adjacency.astype(np.int64) if prev is not None else None
    influencer = cov.influencer_mask.astype(bool)
    triadic = (
        influencer_source_counts(current, prev, cov)
        if any(term.tag in _TRIADIC_TAGS for term in spec.terms)
        else None
    )
    values = [
        term.scale * _raw_statistic(term.tag, adj, prev_adj, influencer, triadic) for term in spec.terms
    ]
    return np.asarray(values, dtype=np.float64)


def change_statistics(
    current: DirectedGraph, prev: DirectedGraph | None, cov: CovariateTable, spec: ModelSpec, dyad: Dyad
) -> np.ndarray:
    """Return g(current + dyad) - g(current - dyad), computed locally."""

    check_inputs(current, prev, cov, spec)
    u, v = dyad
    current.check_dyad(u, v)
    adj, prev_adj, influencer = kernel_arrays(current, prev, cov)
    out = np.zeros(len(spec), dtype=np.float64)
    kernels.change_vector(spec.codes, spec.scales, adj, prev_adj, influencer, u, v, out)
    return out


def change_statistics_matrix(
    current: DirectedGraph, prev: DirectedGraph | None, cov: CovariateTable, spec: ModelSpec
) -> np.ndarray:
    """Return the change statistics of every dyad, one row per dyad in ``dyad_iter`` order."""

    check_inputs(current, prev, cov, spec)
    adj, prev_adj, influencer = kernel_arrays(current, prev, cov)
    out = np.zeros((current.n_dyads, len(spec)), dtype=np.float64)
    kernels.change_matrix(spec.codes, spec.scales, adj, prev_adj, influencer, out)
    return out
