import numpy as np

from diffmath import Tensor, ops

from .overhead import rate_prefactor


def _off_diagonal(gains: np.ndarray) -> np.ndarray:
    k = gains.shape[-1]
    return gains * (1.0 - np.eye(k))


def sinr(p: np.ndarray, gains: np.ndarray, noise_var: float, max_power: float = 1.0) -> np.ndarray:
    """
    xi_i = P p_i |h_ii|^2 / (sum_{j != i} P p_j |h_ji|^2 + sigma^2), batched over leading axes.

    Args:
        p: (..., K) normalized powers in [0, 1]
        gains: (..., K, K) power gains, [j, i] = tx j -> rx i
        max_power: P_max in mW, applied to signal and interference alike
    """
    p = np.asarray(p, dtype=np.float64)
    signal = max_power * p * np.diagonal(gains, axis1=-2, axis2=-1)
    interference = max_power * np.einsum("...j,...ji->...i", p, _off_diagonal(gains))
    return signal / (interference + noise_var)


def weighted_sum_rate(
    p: np.ndarray,
    gains: np.ndarray,
    weights: np.ndarray | None,
    noise_var: float,
    overhead: int = 0,
    symbols_per_frame: int = 1,
    max_power: float = 1.0,
):
    """sum_i w_i max(0, (N_S - N_O)/N_S) log2(1 + xi_i) in bps/Hz, batched over leading axes."""
    xi = sinr(p, gains, noise_var, max_power)
    weights = np.ones_like(xi) if weights is None else np.asarray(weights, dtype=np.float64)
    rate = rate_prefactor(overhead, symbols_per_frame) * np.sum(weights * np.log2(1.0 + xi), axis=-1)
    return float(rate) if np.ndim(rate) == 0 else rate


def sinr_tensor(p: Tensor, gains: np.ndarray, noise_var: float, max_power: float = 1.0) -> Tensor:
    """Differentiable SINR for a batch: p (B, K), gains (B, K, K)."""
    b, k = p.shape
    direct = np.diagonal(gains, axis1=-2, axis2=-1)
    signal = p * (max_power * direct)
    column = ops.reshape(p, (b, k, 1))
    interference = ops.sum(column * (max_power * _off_diagonal(gains)), axis=1)
    return signal / (interference + noise_var)


def weighted_sum_rate_tensor(
    p: Tensor,
    gains: np.ndarray,
    weights: np.ndarray | None,
    noise_var: float,
    max_power: float = 1.0,
) -> Tensor:
    """Per-network weighted sum-rate (B,), without the overhead prefactor."""
    xi = sinr_tensor(p, gains, noise_var, max_power)
    weights = np.ones(p.shape) if weights is None else np.asarray(weights, dtype=np.float64)
    return ops.sum(ops.log2(xi + 1.0) * weights, axis=-1)
