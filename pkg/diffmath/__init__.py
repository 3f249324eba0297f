from . import tensor as ops
from .adam import AdamState, adam_step
from .checkpoint import decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint
from .mlp import Activation, MlpParams, mlp_apply
from .tensor import Tape, Tensor, backward, grad_tape

__all__ = [
    "ops",
    "Tensor",
    "Tape",
    "grad_tape",
    "backward",
    "Activation",
    "MlpParams",
    "mlp_apply",
    "AdamState",
    "adam_step",
    "encode_checkpoint",
    "decode_checkpoint",
    "write_checkpoint",
    "read_checkpoint",
]
