import numpy as np


def epa(n_links: int, batch: int | None = None) -> np.ndarray:
    """Every transmitter at full power: p_i = 1."""
    return np.ones(n_links if batch is None else (batch, n_links))
