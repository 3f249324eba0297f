import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from utils.exceptions import ConfigurationError, DomainError

from .pathloss import pathloss_db

logger = logging.getLogger(__name__)

MAX_PLACEMENT_ROUNDS = 1000


class NetworkLayout(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_links: int
    field_length: float
    tx_positions: np.ndarray  # (K, 2) meters
    rx_positions: np.ndarray  # (K, 2) meters

    @property
    def link_density(self) -> float:
        return self.n_links / self.field_length**2

    def distances(self) -> np.ndarray:
        """d[j, i] = distance from transmitter j to receiver i."""
        diff = self.tx_positions[:, None, :] - self.rx_positions[None, :, :]
        return np.sqrt(np.sum(diff**2, axis=-1))


def as_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_layout(
    n_links: int,
    field_length: float,
    min_dist: float,
    max_dist: float,
    seed: int | np.random.Generator | None = None,
) -> NetworkLayout:
    """
    Drops K transmitters uniformly in the square and one receiver per transmitter,
    uniform over the annulus [min_dist, max_dist] around it, redrawn until it lands
    inside the square.

    Raises:
        ConfigurationError: K < 1 or not 0 < min_dist < max_dist < field_length
        DomainError: receivers still outside the square after the retry budget
    """
    if n_links < 1:
        raise ConfigurationError(f"need at least one link, got K={n_links}")
    if not 0 < min_dist < max_dist < field_length:
        raise ConfigurationError(
            f"need 0 < min_dist < max_dist < field_length, got {min_dist}, {max_dist}, {field_length}"
        )
    rng = as_rng(seed)
    tx = rng.uniform(0.0, field_length, size=(n_links, 2))
    rx = np.empty_like(tx)

    pending = np.arange(n_links)
    for _ in range(MAX_PLACEMENT_ROUNDS):
        # area-uniform radius over the annulus
        radius = np.sqrt(rng.uniform(min_dist**2, max_dist**2, size=pending.size))
        angle = rng.uniform(0.0, 2.0 * np.pi, size=pending.size)
        candidate = tx[pending] + radius[:, None] * np.stack((np.cos(angle), np.sin(angle)), axis=1)
        inside = np.all((candidate >= 0.0) & (candidate <= field_length), axis=1)
        rx[pending[inside]] = candidate[inside]
        pending = pending[~inside]
        if pending.size == 0:
            return NetworkLayout(n_links=n_links, field_length=field_length, tx_positions=tx, rx_positions=rx)

    raise DomainError(f"{pending.size} receivers could not be placed inside the field after {MAX_PLACEMENT_ROUNDS} rounds")


def large_scale_gains(
    layout: NetworkLayout,
    antenna_gain_db: float = 5.0,
    carrier_frequency: float = 2.4e9,
    tx_height: float = 1.5,
    rx_height: float = 1.5,
) -> np.ndarray:
    """g_ls[j, i] = 10^((G_ant - L_pl(d_ji)) / 10), linear power gain tx j -> rx i."""
    loss = pathloss_db(layout.distances(), carrier_frequency, tx_height, rx_height)
    return np.power(10.0, (antenna_gain_db - loss) / 10.0)
