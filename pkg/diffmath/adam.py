import logging
from collections.abc import Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from utils.exceptions import ConfigurationError

from .tensor import Tensor

logger = logging.getLogger(__name__)


class AdamState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step: int = Field(0, ge=0)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameters(cls, params: Sequence[Tensor], **kwargs) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p.values) for p in params],
            second_moment=[np.zeros_like(p.values) for p in params],
            **kwargs,
        )


def adam_step(
    params: Sequence[Tensor],
    grads: Mapping[Tensor, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[Sequence[Tensor], AdamState]:
    """
    One bias-corrected Adam update, in place on ``params``.

    Parameters missing from ``grads`` are treated as having a zero gradient.
    """
    if len(params) != len(state.first_moment):
        raise ConfigurationError(f"Adam state tracks {len(state.first_moment)} tensors, got {len(params)}")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for i, p in enumerate(params):
        g = grads.get(p)
        if g is None:
            g = np.zeros_like(p.values)
        if g.shape != p.values.shape or state.first_moment[i].shape != p.values.shape:
            raise ConfigurationError(f"gradient shape {list(g.shape)} does not match parameter {p.shape}")
        m = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g
        v = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g
        state.first_moment[i], state.second_moment[i] = m, v
        p.values = p.values - lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return params, state
