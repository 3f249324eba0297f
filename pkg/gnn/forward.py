"""Forward passes of the three policies, batched over networks.

Gains are (B, K, K) arrays with [b, j, i] the power gain of tx j -> rx i (a single
(K, K) network is promoted to B = 1). Returned powers are (B, K) tensors in [0, 1].

``mode="ideal"`` aggregates with exact, differentiable sums of p_j |h_{j,i}|^2;
``mode="physical"`` asks a PilotChannel for signal-level estimates instead and
treats them as constants, so it is for evaluation only.
"""

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from airphy import PilotChannel
from diffmath import MlpParams, Tensor, mlp_apply, ops
from utils.exceptions import ConfigurationError, UsageError

from .models import PolicyKind, PolicyModel, normalize_gain

logger = logging.getLogger(__name__)

Mode = Literal["ideal", "physical"]


class RecurrentState(BaseModel):
    """Hidden state an Air-MPRNN node carries into the next frame."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    embedding: Tensor  # (B, K, E)
    direct_gain: np.ndarray  # (B, K) linear |h_ii|^2 of the previous frame
    frame: int = 0


def _batched(gains) -> np.ndarray:
    g = np.asarray(gains, dtype=np.float64)
    if g.ndim == 2:
        g = g[None]
    if g.ndim != 3 or g.shape[1] != g.shape[2]:
        raise ConfigurationError(f"gains must be (B, K, K), got shape {list(g.shape)}")
    return g


def _check_kind(model: PolicyModel, kind: PolicyKind) -> None:
    if model.kind is not kind:
        raise UsageError(f"{kind.value} forward pass called with a {model.kind.value} model")


def _senders(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (j, i) with j != i, both shaped (K-1, K)."""
    j = np.array([[s for s in range(k) if s != i] for i in range(k)]).T
    i = np.broadcast_to(np.arange(k), j.shape)
    return j, i


def aggregate(incoming: Tensor, mode: str) -> Tensor:
    """Reduces [b, j, i, ...] over the senders j != i of every receiver i."""
    b, k = incoming.shape[:2]
    if k == 1:
        return Tensor(np.zeros([b, 1] + incoming.shape[3:]))
    j, i = _senders(k)
    picked = incoming[:, j, i]
    if mode == "max":
        return ops.max(picked, axis=1)
    total = ops.sum(picked, axis=1)
    return total * (1.0 / k) if mode == "mean" else total


def _direct_feature(model: PolicyModel, direct: np.ndarray) -> np.ndarray:
    stats = model.norm_stats
    return normalize_gain(direct, stats.direct_mean, stats.direct_std)[..., None]


def _aggregate_feature(model: PolicyModel, a: Tensor) -> Tensor:
    # aggregates are in mW; dividing by P_max puts them on the interference-gain scale
    stats = model.norm_stats
    b, k = a.shape
    return ops.reshape(normalize_gain(a * (1.0 / model.max_power), stats.interference_mean, stats.interference_std), (b, k, 1))


def policy_output(e: Tensor, omega: MlpParams) -> Tensor:
    """p_i = omega(e_i), sigmoid head, with the trailing unit axis dropped."""
    out = mlp_apply(omega, e)
    return ops.reshape(out, out.shape[:-1])


def mpnn_forward(model: PolicyModel, gains) -> Tensor:
    """N rounds of m_ji = phi(e_j, z_j, g_ji), a_i = AGG_{j != i} m_ji, e_i = U(e_i, a_i, z_i)."""
    _check_kind(model, PolicyKind.MPNN)
    g = _batched(gains)
    b, k = g.shape[:2]
    stats = model.norm_stats

    z = _direct_feature(model, np.diagonal(g, axis1=1, axis2=2))
    sender_z = np.broadcast_to(z[:, :, None, :], (b, k, k, 1))
    edges = normalize_gain(g, stats.interference_mean, stats.interference_std)[..., None]

    e = Tensor(np.zeros((b, k, model.embed_dim)))
    for _ in range(model.layers):
        sender = ops.broadcast_to(ops.reshape(e, (b, k, 1, model.embed_dim)), (b, k, k, model.embed_dim))
        messages = mlp_apply(model.phi, ops.concat([sender, sender_z, edges], axis=-1))
        a = aggregate(messages, model.aggregation)
        e = mlp_apply(model.update, ops.concat([e, a, z], axis=-1))
    return policy_output(e, model.omega)


def _pilot_powers(model: PolicyModel, e: Tensor, z) -> Tensor:
    out = mlp_apply(model.phi, ops.concat([e, z], axis=-1))
    return ops.reshape(out, out.shape[:-1]) * model.max_power


def _air_round(
    model: PolicyModel,
    pilot: Tensor,
    g: np.ndarray,
    mode: Mode,
    channels: np.ndarray | None,
    pilot_channel: PilotChannel | None,
) -> tuple[Tensor, np.ndarray]:
    """One simultaneous pilot round: returns the aggregate (B, K) and the direct gains it revealed."""
    b, k = pilot.shape
    if mode == "ideal":
        received = ops.reshape(pilot, (b, k, 1)) * g
        return aggregate(received, model.aggregation), np.diagonal(g, axis1=1, axis2=2)
    if mode != "physical":
        raise UsageError(f"mode must be 'ideal' or 'physical', got '{mode}'")
    if channels is None or pilot_channel is None:
        raise UsageError("physical mode needs complex channels and a PilotChannel")

    observation = pilot_channel.broadcast(pilot.values, channels)
    if model.aggregation == "max":
        estimate = observation.max_estimate()
    else:
        estimate = observation.sum_estimate(pilot_channel.bias_correction)
        if model.aggregation == "mean":
            estimate = estimate / k
    return Tensor(estimate), observation.local_gain()


def _physical_channels(channels, g: np.ndarray) -> np.ndarray | None:
    if channels is None:
        return None
    h = np.asarray(channels)
    h = h[None] if h.ndim == 2 else h
    if h.shape != g.shape:
        raise ConfigurationError(f"channels {list(h.shape)} do not match gains {list(g.shape)}")
    return h


def _airmpnn_layers(
    model: PolicyModel,
    g: np.ndarray,
    mode: Mode,
    channels: np.ndarray | None,
    pilot_channel: PilotChannel | None,
) -> Tensor:
    b, k = g.shape[:2]
    # local CSI of the direct link is estimated conventionally (the "+1" round of the overhead)
    z = _direct_feature(model, np.diagonal(g, axis1=1, axis2=2))
    e = Tensor(np.zeros((b, k, model.embed_dim)))
    for _ in range(model.layers):
        pilot = _pilot_powers(model, e, z)
        a, _ = _air_round(model, pilot, g, mode, channels, pilot_channel)
        e = mlp_apply(model.update, ops.concat([e, _aggregate_feature(model, a), z], axis=-1))
    return e


def airmpnn_forward(
    model: PolicyModel,
    gains,
    *,
    mode: Mode = "ideal",
    channels=None,
    pilot_channel: PilotChannel | None = None,
) -> Tensor:
    """N pilot rounds: p~_i = P_max phi(e_i, z_i), a_i = sum_{j != i} p~_j |h_ji|^2, e_i = U(e_i, a~_i, z_i)."""
    _check_kind(model, PolicyKind.AIR_MPNN)
    g = _batched(gains)
    e = _airmpnn_layers(model, g, mode, _physical_channels(channels, g), pilot_channel)
    return policy_output(e, model.omega)


def initial_state(model: PolicyModel, gains) -> RecurrentState:
    """Zero embedding and the direct gains of the first frame from local CSI."""
    g = _batched(gains)
    b, k = g.shape[:2]
    return RecurrentState(
        embedding=Tensor(np.zeros((b, k, model.embed_dim))),
        direct_gain=np.diagonal(g, axis1=1, axis2=2).copy(),
    )


def airmprnn_step(
    model: PolicyModel,
    state: RecurrentState,
    gains,
    *,
    mode: Mode = "ideal",
    channels=None,
    pilot_channel: PilotChannel | None = None,
) -> tuple[Tensor, RecurrentState]:
    """
    One frame: the pilot power comes from the previous frame's embedding and direct gain,
    a single broadcast yields both the new aggregate and the new direct gain.
    """
    _check_kind(model, PolicyKind.AIR_MPRNN)
    g = _batched(gains)
    pilot = _pilot_powers(model, state.embedding, _direct_feature(model, state.direct_gain))
    a, direct = _air_round(model, pilot, g, mode, _physical_channels(channels, g), pilot_channel)
    e = mlp_apply(
        model.update,
        ops.concat([state.embedding, _aggregate_feature(model, a), _direct_feature(model, direct)], axis=-1),
    )
    p = policy_output(e, model.omega)
    return p, RecurrentState(embedding=e, direct_gain=direct, frame=state.frame + 1)


def forward_frame(
    model: PolicyModel,
    gains,
    *,
    mode: Mode = "ideal",
    channels=None,
    pilot_channel: PilotChannel | None = None,
) -> Tensor:
    """Single-frame policies; for air-mprnn this is a step from the bootstrap state."""
    if model.kind is PolicyKind.MPNN:
        return mpnn_forward(model, gains)
    if model.kind is PolicyKind.AIR_MPNN:
        return airmpnn_forward(model, gains, mode=mode, channels=channels, pilot_channel=pilot_channel)
    state = initial_state(model, gains)
    p, _ = airmprnn_step(model, state, gains, mode=mode, channels=channels, pilot_channel=pilot_channel)
    return p


def run_episode(
    model: PolicyModel,
    gains,
    *,
    mode: Mode = "ideal",
    channels=None,
    pilot_channel: PilotChannel | None = None,
    warm_start: PolicyModel | None = None,
) -> list[Tensor]:
    """
    Per-frame powers for a batch of episodes.

    Args:
        gains: (B, T, K, K) or a single episode (T, K, K)
        channels: complex coefficients of the same shape, physical mode only
        warm_start: Air-MPNN model that drives frame 0 of an Air-MPRNN episode

    Returns:
        T tensors of shape (B, K); mpnn and air-mpnn treat every frame independently
    """
    g = np.asarray(gains, dtype=np.float64)
    g = g[None] if g.ndim == 3 else g
    if g.ndim != 4:
        raise ConfigurationError(f"episode gains must be (B, T, K, K), got shape {list(g.shape)}")
    h = None
    if channels is not None:
        h = np.asarray(channels)
        h = h[None] if h.ndim == 3 else h
    frames = g.shape[1]

    def frame_channels(t: int):
        return None if h is None else h[:, t]

    if model.kind is not PolicyKind.AIR_MPRNN:
        return [
            forward_frame(model, g[:, t], mode=mode, channels=frame_channels(t), pilot_channel=pilot_channel)
            for t in range(frames)
        ]

    powers: list[Tensor] = []
    if warm_start is not None:
        _check_kind(warm_start, PolicyKind.AIR_MPNN)
        e = _airmpnn_layers(warm_start, g[:, 0], mode, frame_channels(0), pilot_channel)
        powers.append(policy_output(e, warm_start.omega))
        state = RecurrentState(embedding=e, direct_gain=np.diagonal(g[:, 0], axis1=1, axis2=2).copy(), frame=1)
    else:
        state = initial_state(model, g[:, 0])
    for t in range(state.frame, frames):
        p, state = airmprnn_step(model, state, g[:, t], mode=mode, channels=frame_channels(t), pilot_channel=pilot_channel)
        powers.append(p)
    return powers
