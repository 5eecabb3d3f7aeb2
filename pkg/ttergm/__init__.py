"""Temporal exponential random graph models with triadic influencer statistics."""

from __future__ import annotations

from .exceptions import TtergmError
from .services.baselines import classic_tergm_spec, preset_spec, ttergm_spec
from .services.estimation import EstimationResult, mcmle, mple
from .services.graph import CovariateTable, DirectedGraph, Snapshot, TemporalNetwork
from .services.sampler import McmcConfig, generate_sequence, sample_networks
from .services.statistics import ModelSpec, StatisticTerm, TermTag

__all__ = [
    "CovariateTable",
    "DirectedGraph",
    "EstimationResult",
    "McmcConfig",
    "ModelSpec",
    "Snapshot",
    "StatisticTerm",
    "TemporalNetwork",
    "TermTag",
    "TtergmError",
    "classic_tergm_spec",
    "generate_sequence",
    "mcmle",
    "mple",
    "preset_spec",
    "sample_networks",
    "ttergm_spec",
]
