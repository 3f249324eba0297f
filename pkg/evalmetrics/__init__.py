from config import OverheadConfig

from .overhead import Scheme, as_scheme, format_ratio, overhead_ratio, overhead_symbols, rate_prefactor
from .rates import sinr, sinr_tensor, weighted_sum_rate, weighted_sum_rate_tensor

__all__ = [
    "OverheadConfig",
    "Scheme",
    "as_scheme",
    "overhead_symbols",
    "overhead_ratio",
    "rate_prefactor",
    "format_ratio",
    "sinr",
    "weighted_sum_rate",
    "sinr_tensor",
    "weighted_sum_rate_tensor",
]
