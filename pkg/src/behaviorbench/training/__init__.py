from behaviorbench.training.gae import compute_gae
from behaviorbench.training.records import (
    RecordBatch,
    TrainingRecord,
    load_epoch_records,
    save_epoch_records,
)
from behaviorbench.training.ppo import ppo_loss_grad
from behaviorbench.training.trainer import (
    EpochMetrics,
    TrainerConfig,
    train,
)

__all__ = [
    "EpochMetrics",
    "RecordBatch",
    "TrainerConfig",
    "TrainingRecord",
    "compute_gae",
    "load_epoch_records",
    "ppo_loss_grad",
    "save_epoch_records",
    "train",
]
