"""Over-the-air aggregation: what a receiver learns from superimposed orthogonal pilots.

With y_i = sum_j sqrt(p_j) h_{j,i} s_j + n_i and orthonormal s_j:

    ||y_i||^2 - |y_i^H s_i|^2  ~  sum_{j != i} p_j |h_{j,i}|^2     (interference power)
    |y_i^H s_i|^2 / p_i        ~  |h_{i,i}|^2                      (local direct gain)
    max_{k != i} |y_i^H s_k|^2 ~  max_{j != i} p_j |h_{j,i}|^2

All three are exact when the noise variance is zero.
"""

import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from netgen.channel import complex_gaussian
from netgen.layout import as_rng
from utils.exceptions import ConfigurationError, DomainError, EstimationError
from utils.utils import write_csv

from .pilots import PilotBank

logger = logging.getLogger(__name__)

Aggregation = Literal["sum", "mean", "max"]


class ReceivedPilot(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    owner: int
    samples: np.ndarray  # (L_p,) complex


def receive_pilots(
    i: int,
    powers: np.ndarray,
    h_column: np.ndarray,
    bank: PilotBank,
    noise_var: float = 0.0,
    seed: int | np.random.Generator | None = None,
) -> ReceivedPilot:
    """
    Superimposed pilots at receiver ``i``.

    Args:
        powers: pilot transmit powers p_j of all K transmitters
        h_column: complex coefficients h_{j,i}, j = 0..K-1
        noise_var: per-sample AWGN variance; 0 gives the noiseless signal

    Raises:
        DomainError: negative pilot power
    """
    powers = np.asarray(powers, dtype=np.float64)
    if np.any(powers < 0):
        raise DomainError("pilot powers must be non-negative")
    if powers.shape[0] != bank.n_pilots or np.shape(h_column)[0] != bank.n_pilots:
        raise ConfigurationError(f"bank has {bank.n_pilots} pilots, got {powers.shape[0]} powers")
    y = bank.sequences @ (np.sqrt(powers) * np.asarray(h_column))
    if noise_var > 0:
        y = y + complex_gaussian(as_rng(seed), bank.length, noise_var)
    return ReceivedPilot(owner=i, samples=y)


def air_sum_estimate(
    y: ReceivedPilot,
    pilot: np.ndarray,
    noise_var: float = 0.0,
    bias_correction: bool = False,
) -> float:
    """||y||^2 - |y^H s_i|^2; optionally minus the L_p * sigma^2 noise bias, clamped at 0."""
    energy = float(np.vdot(y.samples, y.samples).real)
    own = float(np.abs(np.vdot(y.samples, pilot)) ** 2)
    estimate = energy - own
    if bias_correction:
        estimate = max(estimate - y.samples.shape[0] * noise_var, 0.0)
    return estimate


def air_local_gain(y: ReceivedPilot, pilot: np.ndarray, own_power: float) -> float:
    """|y^H s_i|^2 / p_i, the direct gain recovered from the node's own pilot."""
    if own_power <= 0:
        raise EstimationError(f"node {y.owner} transmitted no pilot, its direct gain is unobservable")
    return float(np.abs(np.vdot(y.samples, pilot)) ** 2) / own_power


def air_max_estimate(y: ReceivedPilot, bank: PilotBank, i: int) -> float:
    """max over k != i of |y^H s_k|^2."""
    projections = np.abs(bank.sequences.conj().T @ y.samples) ** 2
    others = np.delete(projections, i)
    return float(others.max()) if others.size else 0.0


def exact_aggregate(powers: np.ndarray, gains_column: np.ndarray, i: int, mode: Aggregation = "sum") -> float:
    """Oracle sum / mean / max over j != i of p_j |h_{j,i}|^2; mean divides by K."""
    received = np.delete(np.asarray(powers) * np.asarray(gains_column), i)
    if mode == "sum":
        return float(received.sum())
    if mode == "mean":
        return float(received.sum()) / len(gains_column)
    if mode == "max":
        return float(received.max()) if received.size else 0.0
    raise ConfigurationError(f"unknown aggregation '{mode}'")


class PilotObservation(BaseModel):
    """Everything all receivers of a batch of networks measure in one simultaneous broadcast."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    energy: np.ndarray  # (B, K): ||y_i||^2
    projections: np.ndarray  # (B, K, K): [b, k, i] = |y_i^H s_k|^2
    powers: np.ndarray  # (B, K)
    noise_var: float
    pilot_length: int

    def own(self) -> np.ndarray:
        return np.diagonal(self.projections, axis1=1, axis2=2)

    def sum_estimate(self, bias_correction: bool = False) -> np.ndarray:
        estimate = self.energy - self.own()
        if bias_correction:
            estimate = np.maximum(estimate - self.pilot_length * self.noise_var, 0.0)
        return estimate

    def local_gain(self) -> np.ndarray:
        if np.any(self.powers <= 0):
            raise EstimationError("a node transmitted no pilot, its direct gain is unobservable")
        return self.own() / self.powers

    def max_estimate(self) -> np.ndarray:
        k = self.projections.shape[1]
        if k == 1:
            return np.zeros_like(self.energy)
        masked = np.where(np.eye(k, dtype=bool)[None], -np.inf, self.projections)
        return masked.max(axis=1)


class PilotChannel:
    """
    Physical pilot medium shared by a batch of networks.

    Every ``broadcast`` call is one simultaneous pilot round in every network of the
    batch; ``broadcasts`` counts the rounds consumed so far.
    """

    def __init__(
        self,
        bank: PilotBank,
        noise_var: float = 0.0,
        seed: int | np.random.Generator | None = None,
        bias_correction: bool = False,
        trace: bool = False,
    ):
        self.bank = bank
        self.noise_var = float(noise_var)
        self.rng = as_rng(seed)
        self.bias_correction = bias_correction
        self.broadcasts = 0
        self._trace: list[dict] | None = [] if trace else None

    def broadcast(self, powers: np.ndarray, channels: np.ndarray) -> PilotObservation:
        """
        Args:
            powers: (B, K) pilot powers
            channels: (B, K, K) complex coefficients, [b, j, i] = h_{j,i}
        """
        powers = np.asarray(powers, dtype=np.float64)
        if np.any(powers < 0):
            raise DomainError("pilot powers must be non-negative")
        if channels.shape[-1] != self.bank.n_pilots:
            raise ConfigurationError(f"bank has {self.bank.n_pilots} pilots, network has {channels.shape[-1]} nodes")
        s = self.bank.sequences
        received = np.einsum("lj,bji->bli", s, np.sqrt(powers)[:, :, None] * channels)
        if self.noise_var > 0:
            received = received + complex_gaussian(self.rng, received.shape, self.noise_var)
        energy = np.sum(np.abs(received) ** 2, axis=1)
        projections = np.abs(np.einsum("lk,bli->bki", s.conj(), received)) ** 2
        self.broadcasts += 1

        observation = PilotObservation(
            energy=energy,
            projections=projections,
            powers=powers,
            noise_var=self.noise_var,
            pilot_length=self.bank.length,
        )
        if self._trace is not None:
            estimates = observation.sum_estimate(self.bias_correction)
            own = observation.own()
            for b in range(powers.shape[0]):
                for i in range(powers.shape[1]):
                    self._trace.append(
                        {
                            "broadcast": self.broadcasts,
                            "network": b,
                            "node": i,
                            "pilot_power": repr(float(powers[b, i])),
                            "energy": repr(float(energy[b, i])),
                            "own_projection": repr(float(own[b, i])),
                            "sum_estimate": repr(float(estimates[b, i])),
                        }
                    )
        return observation

    @property
    def trace_rows(self) -> list[dict]:
        if self._trace is None:
            raise ConfigurationError("pilot channel was created without trace=True")
        return self._trace

    def dump_trace(self, path: str | Path) -> None:
        if self._trace is None:
            raise ConfigurationError("pilot channel was created without trace=True")
        write_csv(path, self._trace)
        logger.info("pilot trace written: %s (%d rows)", path, len(self._trace))
