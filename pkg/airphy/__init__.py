from .aggregation import (
    Aggregation,
    PilotChannel,
    PilotObservation,
    ReceivedPilot,
    air_local_gain,
    air_max_estimate,
    air_sum_estimate,
    exact_aggregate,
    receive_pilots,
)
from .pilots import PilotBank, make_pilot_bank

__all__ = [
    "PilotBank",
    "make_pilot_bank",
    "ReceivedPilot",
    "receive_pilots",
    "air_sum_estimate",
    "air_local_gain",
    "air_max_estimate",
    "exact_aggregate",
    "Aggregation",
    "PilotChannel",
    "PilotObservation",
]
