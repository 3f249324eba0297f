import numpy as np
from pydantic import BaseModel, ConfigDict

from netgen.channel import complex_gaussian
from netgen.layout import as_rng
from utils.exceptions import ConfigurationError


class PilotBank(BaseModel):
    """K mutually orthonormal pilot sequences stored as the columns of an (L_p, K) matrix."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sequences: np.ndarray

    @property
    def n_pilots(self) -> int:
        return self.sequences.shape[1]

    @property
    def length(self) -> int:
        return self.sequences.shape[0]

    def pilot(self, i: int) -> np.ndarray:
        return self.sequences[:, i]

    def gram(self) -> np.ndarray:
        return self.sequences.conj().T @ self.sequences


def make_pilot_bank(n_pilots: int, length: int | None = None, seed: int | np.random.Generator | None = 0) -> PilotBank:
    """
    Orthonormal pilots from the Q factor of a random complex Gaussian matrix.

    Raises:
        ConfigurationError: length < n_pilots, orthogonality impossible
    """
    length = n_pilots if length is None else length
    if n_pilots < 1:
        raise ConfigurationError(f"need at least one pilot, got {n_pilots}")
    if length < n_pilots:
        raise ConfigurationError(f"{n_pilots} orthogonal pilots need length >= {n_pilots}, got {length}")
    q, _ = np.linalg.qr(complex_gaussian(as_rng(seed), (length, n_pilots)))
    return PilotBank(sequences=q)
