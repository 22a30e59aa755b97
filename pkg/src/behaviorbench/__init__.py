"""Workbench for measuring and explaining learned driving behaviors.

The package bundles a deterministic four-lane highway simulator, a small
policy network with exact reverse-mode gradients, an on-policy PPO trainer,
scalar behavior measures over recorded scenarios, and three explainers
(training-record influence, per-feature Shapley attribution, and
KL-constrained counterfactual policy search).
"""

__version__ = "0.1.0"

from behaviorbench.errors import (
    BehaviorBenchError,
    ConfigurationError,
    ContractViolationError,
    ProvenanceError,
    TractabilityError,
    TrainingDivergedError,
    UnsupportedOperationError,
)

__all__ = [
    "__version__",
    "BehaviorBenchError",
    "ConfigurationError",
    "ContractViolationError",
    "ProvenanceError",
    "TractabilityError",
    "TrainingDivergedError",
    "UnsupportedOperationError",
]
