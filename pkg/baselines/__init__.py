from .epa import epa
from .wmmse import WmmseState, air_wmmse, wmmse, wmmse_iterate

__all__ = ["epa", "WmmseState", "wmmse", "wmmse_iterate", "air_wmmse"]
