from behaviorbench.policy.tape import Node, backward, constant
from behaviorbench.policy.network import (
    PolicyOutput,
    PolicySpec,
    TapedPolicy,
    forward,
    forward_batch,
    grad_scalar,
    init_params,
    sample,
)
from behaviorbench.policy.checkpoint import (
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "Checkpoint",
    "Node",
    "PolicyOutput",
    "PolicySpec",
    "TapedPolicy",
    "backward",
    "constant",
    "forward",
    "forward_batch",
    "grad_scalar",
    "init_params",
    "load_checkpoint",
    "sample",
    "save_checkpoint",
]
