"""Exception types shared across the package."""


class BehaviorBenchError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BehaviorBenchError):
    """A config object fails validation."""


class ContractViolationError(BehaviorBenchError):
    """A caller broke a documented precondition (e.g. stepping a terminal state)."""


class UnsupportedOperationError(BehaviorBenchError):
    """A scalar functional used a primitive outside the supported set."""


class ProvenanceError(BehaviorBenchError):
    """Artifacts do not belong together (checkpoint/record snapshot mismatch)."""


class TractabilityError(BehaviorBenchError):
    """An exact computation was requested beyond its feasible size."""


class TrainingDivergedError(BehaviorBenchError):
    """Training hit a non-finite loss; diagnostics were dumped before raising."""
