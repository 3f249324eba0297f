from .evaluate import evaluate, frame_overheads, policy_frame_rates, write_layout_results
from .trainer import TrainConfig, TrainResult, batch_loss, compute_norm_stats, train, write_learning_curve

__all__ = [
    "TrainConfig",
    "TrainResult",
    "compute_norm_stats",
    "batch_loss",
    "train",
    "write_learning_curve",
    "evaluate",
    "frame_overheads",
    "policy_frame_rates",
    "write_layout_results",
]
