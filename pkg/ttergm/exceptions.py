"""Exceptions raised by the ttergm package."""


class TtergmError(Exception):
    """Base class for ttergm errors."""


class GraphError(TtergmError):
    """Invalid graph operation."""


class SelfLoopError(GraphError):
    """A self-loop was requested on a graph that forbids them."""


class NodeRangeError(GraphError):
    """A node index lies outside the node universe."""


class UniverseMismatchError(GraphError):
    """Two graphs that must share a node universe do not."""


class FrozenGraphError(GraphError):
    """A mutation was attempted on an immutable snapshot graph."""


class ModelConfigError(TtergmError):
    """Invalid model specification, e.g. a temporal term without a previous snapshot."""


class DegeneracyError(TtergmError):
    """The linear predictor of a conditional became non-finite."""


class EstimationError(TtergmError):
    """Parameter estimation could not produce a result."""


class IngestionError(TtergmError):
    """The event log or ingestion settings could not be processed."""


class EvaluationError(TtergmError):
    """The holdout protocol was given inconsistent inputs."""


class ConfigError(TtergmError):
    """The run configuration failed validation."""
