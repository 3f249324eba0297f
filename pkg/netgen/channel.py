import numpy as np
from pydantic import BaseModel, ConfigDict

from utils.exceptions import DomainError

from .layout import as_rng


class ChannelEpisode(BaseModel):
    """T block-fading frames of one layout; entry (j, i) is the link tx j -> rx i."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    g_ls: np.ndarray  # (K, K) large-scale power gains
    h_ss: np.ndarray  # (T, K, K) complex small-scale states
    rho: float

    @property
    def frames(self) -> int:
        return self.h_ss.shape[0]

    @property
    def n_links(self) -> int:
        return self.g_ls.shape[0]

    @property
    def gains(self) -> np.ndarray:
        """|h_{j,i}(t)|^2 = g_ls[j, i] * |h_ss(t)[j, i]|^2, shape (T, K, K)."""
        return self.g_ls * np.abs(self.h_ss) ** 2

    @property
    def channels(self) -> np.ndarray:
        """Complex coefficients h_{j,i}(t) = sqrt(g_ls) * h_ss(t)."""
        return np.sqrt(self.g_ls) * self.h_ss


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, variance) samples."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def evolve_episode(
    g_ls: np.ndarray,
    rho: float,
    frames: int,
    seed: int | np.random.Generator | None = None,
) -> ChannelEpisode:
    """
    Gauss-Markov small-scale fading: h_ss(t+1) = rho * h_ss(t) + beta(t),
    beta(t) ~ CN(0, 1 - rho^2), h_ss(0) ~ CN(0, 1), so E|h_ss(t)|^2 = 1 for every t.

    Raises:
        DomainError: rho outside [0, 1), T < 1 or non-positive large-scale gains
    """
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"correlation coefficient must lie in [0, 1), got {rho}")
    if frames < 1:
        raise DomainError(f"need at least one frame, got {frames}")
    g_ls = np.asarray(g_ls, dtype=np.float64)
    if np.any(g_ls <= 0):
        raise DomainError("large-scale gains must be strictly positive")

    rng = as_rng(seed)
    h_ss = np.empty((frames,) + g_ls.shape, dtype=np.complex128)
    h_ss[0] = complex_gaussian(rng, g_ls.shape)
    innovation = 1.0 - rho**2
    for t in range(1, frames):
        h_ss[t] = rho * h_ss[t - 1] + complex_gaussian(rng, g_ls.shape, innovation)
    return ChannelEpisode(g_ls=g_ls, h_ss=h_ss, rho=float(rho))
