"""Scalar WMMSE power control and its one-iteration over-the-air variant.

Amplitudes v_i = sqrt(P_max p_i), gains g[j, i] = |h_{j,i}|^2, weights alpha_i:

    u_i = h_ii v_i / (sum_j g_ji v_j^2 + sigma^2)
    w_i = 1 / (1 - u_i h_ii v_i)
    v_i = clip(alpha_i w_i u_i h_ii / sum_j alpha_j w_j u_j^2 g_ij, 0, sqrt(P_max))

Each step is an exact block minimization, so the weighted sum-rate never decreases.
"""

import itertools
import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from airphy import PilotChannel
from evalmetrics import weighted_sum_rate
from utils.exceptions import ConfigurationError, DegenerateChannelError, UsageError

logger = logging.getLogger(__name__)

# up to this K every on/off pattern is a starting point
SUBSET_START_LIMIT = 4


class WmmseState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    v: np.ndarray  # (B, K) amplitudes in [0, sqrt(P_max)]
    u: np.ndarray
    w: np.ndarray
    iteration: int = 0

    def powers(self, max_power: float) -> np.ndarray:
        return self.v**2 / max_power


def _prepare(gains, weights, max_power: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = np.asarray(gains, dtype=np.float64)
    g = g[None] if g.ndim == 2 else g
    if g.ndim != 3 or g.shape[1] != g.shape[2]:
        raise ConfigurationError(f"gains must be (B, K, K), got shape {list(g.shape)}")
    if max_power <= 0:
        raise ConfigurationError(f"max power must be positive, got {max_power}")
    direct = np.diagonal(g, axis1=1, axis2=2)
    if np.any(direct <= 0):
        raise DegenerateChannelError("every link needs a positive direct gain")
    alpha = np.ones(direct.shape) if weights is None else np.broadcast_to(np.asarray(weights, dtype=np.float64), direct.shape)
    return g, np.sqrt(direct), alpha


def _receiver_step(
    v: np.ndarray, h_direct: np.ndarray, received: np.ndarray, noise_var: float
) -> tuple[np.ndarray, np.ndarray]:
    """u- and w-steps from the total received power sum_j g_ji v_j^2 at every receiver."""
    total = received + noise_var
    with np.errstate(divide="ignore", invalid="ignore"):
        u = h_direct * v / total
        w = 1.0 / (1.0 - u * h_direct * v)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
        raise DegenerateChannelError("interference-plus-noise vanished at a receiver (sigma^2 = 0 without interference?)")
    return u, w


def _transmitter_step(
    u: np.ndarray, w: np.ndarray, alpha: np.ndarray, h_direct: np.ndarray, reverse: np.ndarray, max_power: float
) -> np.ndarray:
    """v-step from sum_j alpha_j w_j u_j^2 g_ij, the power every transmitter hears back."""
    numerator = alpha * w * u * h_direct
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(reverse > 0, numerator / reverse, 0.0)
    return np.clip(v, 0.0, np.sqrt(max_power))


def wmmse_iterate(
    gains,
    noise_var: float,
    weights=None,
    iters: int = 100,
    max_power: float = 1.0,
    state: WmmseState | None = None,
) -> tuple[WmmseState, np.ndarray]:
    """
    Runs ``iters`` WMMSE iterations from full power (or from ``state``).

    Returns:
        final state and the weighted sum-rate history, shape (iters + 1, B)

    Raises:
        DegenerateChannelError: zero direct gain or nothing to divide by
    """
    g, h_direct, alpha = _prepare(gains, weights, max_power)
    if iters < 0:
        raise ConfigurationError(f"iteration count must be non-negative, got {iters}")
    v = np.full(h_direct.shape, np.sqrt(max_power)) if state is None else state.v.copy()
    u = np.zeros_like(v) if state is None else state.u
    w = np.zeros_like(v) if state is None else state.w
    done = 0 if state is None else state.iteration

    history = [weighted_sum_rate(v**2 / max_power, g, alpha, noise_var, max_power=max_power)]
    for _ in range(iters):
        u, w = _receiver_step(v, h_direct, np.einsum("bj,bji->bi", v**2, g), noise_var)
        v = _transmitter_step(u, w, alpha, h_direct, np.einsum("bj,bij->bi", alpha * w * u**2, g), max_power)
        history.append(weighted_sum_rate(v**2 / max_power, g, alpha, noise_var, max_power=max_power))
    return WmmseState(v=v, u=u, w=w, iteration=done + iters), np.asarray(history).reshape(iters + 1, -1)


def _starting_amplitudes(k: int, max_power: float, random_starts: int, seed: int) -> list[np.ndarray]:
    """Full power first, then every other on/off pattern while K is small, then random amplitudes."""
    top = np.sqrt(max_power)
    if k <= SUBSET_START_LIMIT:
        patterns = [np.array(bits, dtype=np.float64) for bits in itertools.product((1.0, 0.0), repeat=k) if any(bits)]
    else:
        patterns = [np.ones(k)]
    rng = np.random.default_rng(seed)
    return [top * p for p in patterns] + [top * rng.uniform(size=k) for _ in range(random_starts)]


def wmmse(
    gains,
    noise_var: float,
    weights=None,
    iters: int = 100,
    max_power: float = 1.0,
    *,
    multistart: bool = True,
    random_starts: int = 4,
    seed: int = 0,
) -> np.ndarray:
    """
    Normalized powers p = v^2 / P_max after ``iters`` iterations; shape follows ``gains``.

    With ``multistart`` the iterations run from several starting points and every
    instance keeps the one with the highest weighted sum-rate. A link started at zero
    power stays off, so the on/off starts reach stationary points on every face of the box.
    """
    g, h_direct, _ = _prepare(gains, weights, max_power)
    if not multistart:
        state, _ = wmmse_iterate(g, noise_var, weights, iters, max_power)
        best = state.powers(max_power)
    else:
        best, best_rate = None, None
        for start in _starting_amplitudes(g.shape[-1], max_power, random_starts, seed):
            v = np.broadcast_to(start, h_direct.shape).copy()
            initial = WmmseState(v=v, u=np.zeros_like(v), w=np.zeros_like(v))
            state, history = wmmse_iterate(g, noise_var, weights, iters, max_power, state=initial)
            p, rate = state.powers(max_power), history[-1]
            if best is None:
                best, best_rate = p, rate
            else:
                better = rate > best_rate
                best = np.where(better[:, None], p, best)
                best_rate = np.where(better, rate, best_rate)
    return best[0] if np.ndim(gains) == 2 else best


def air_wmmse(
    gains,
    noise_var: float,
    weights=None,
    max_power: float = 1.0,
    *,
    mode: Literal["ideal", "physical"] = "ideal",
    channels=None,
    pilot_channel: PilotChannel | None = None,
) -> np.ndarray:
    """
    One WMMSE iteration from full power with the two network-wide sums measured over the air.

    Forward round: transmitters send pilots at v_j^2, receiver i gets sum_{j != i} g_ji v_j^2
    and adds its own term from local CSI. Reverse round: receivers send pilots at
    alpha_j w_j u_j^2 over the reciprocal channel, transmitter i gets sum_{j != i} of the
    v-step denominator and adds its own term.
    """
    g, h_direct, alpha = _prepare(gains, weights, max_power)
    direct = h_direct**2
    v = np.full(h_direct.shape, np.sqrt(max_power))

    if mode == "ideal":
        off = g * (1.0 - np.eye(g.shape[-1]))
        forward = np.einsum("bj,bji->bi", v**2, off)
    elif mode == "physical":
        if channels is None or pilot_channel is None:
            raise UsageError("physical mode needs complex channels and a PilotChannel")
        h = np.asarray(channels)
        h = h[None] if h.ndim == 2 else h
        forward = pilot_channel.broadcast(v**2, h).sum_estimate(pilot_channel.bias_correction)
    else:
        raise UsageError(f"mode must be 'ideal' or 'physical', got '{mode}'")
    u, w = _receiver_step(v, h_direct, forward + direct * v**2, noise_var)

    reverse_powers = alpha * w * u**2
    if mode == "ideal":
        reverse = np.einsum("bj,bij->bi", reverse_powers, off)
    else:
        # receivers rescale their pilots so the strongest one transmits at P_max
        scale = max_power / np.maximum(reverse_powers.max(axis=1, keepdims=True), np.finfo(float).tiny)
        observation = pilot_channel.broadcast(reverse_powers * scale, np.swapaxes(h, 1, 2))
        reverse = observation.sum_estimate(pilot_channel.bias_correction) / scale
    v = _transmitter_step(u, w, alpha, h_direct, reverse + reverse_powers * direct, max_power)

    p = v**2 / max_power
    return p[0] if np.ndim(gains) == 2 else p
