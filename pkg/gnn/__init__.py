from .forward import (
    RecurrentState,
    aggregate,
    airmpnn_forward,
    airmprnn_step,
    forward_frame,
    initial_state,
    mpnn_forward,
    policy_output,
    run_episode,
)
from .models import (
    NormStats,
    PolicyKind,
    PolicyModel,
    build_model,
    load_checkpoint,
    normalize_gain,
    parameter_report,
    save_checkpoint,
    structure,
)

__all__ = [
    "PolicyKind",
    "PolicyModel",
    "NormStats",
    "normalize_gain",
    "structure",
    "build_model",
    "parameter_report",
    "save_checkpoint",
    "load_checkpoint",
    "RecurrentState",
    "aggregate",
    "mpnn_forward",
    "airmpnn_forward",
    "airmprnn_step",
    "initial_state",
    "forward_frame",
    "policy_output",
    "run_episode",
]
