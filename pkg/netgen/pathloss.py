import numpy as np

from config import SPEED_OF_LIGHT
from utils.exceptions import DomainError


def breakpoint_distance(carrier_frequency: float = 2.4e9, tx_height: float = 1.5, rx_height: float = 1.5) -> float:
    wavelength = SPEED_OF_LIGHT / carrier_frequency
    return 4.0 * tx_height * rx_height / wavelength


def breakpoint_loss_db(carrier_frequency: float = 2.4e9, tx_height: float = 1.5, rx_height: float = 1.5) -> float:
    wavelength = SPEED_OF_LIGHT / carrier_frequency
    return abs(20.0 * np.log10(wavelength**2 / (8.0 * np.pi * tx_height * rx_height)))


def pathloss_db(
    d,
    carrier_frequency: float = 2.4e9,
    tx_height: float = 1.5,
    rx_height: float = 1.5,
):
    """
    Two-slope UHF path loss in dB: 20 dB/decade up to the breakpoint, 40 dB/decade after.

    Args:
        d: distance(s) in meters, scalar or array

    Raises:
        DomainError: any distance is not strictly positive
    """
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0):
        raise DomainError("path loss needs strictly positive distances (coincident tx/rx?)")
    r_bp = breakpoint_distance(carrier_frequency, tx_height, rx_height)
    l_bp = breakpoint_loss_db(carrier_frequency, tx_height, rx_height)
    slope = 20.0 * np.log10(d / r_bp)
    loss = l_bp + 6.0 + np.where(d <= r_bp, slope, 2.0 * slope)
    return float(loss) if loss.ndim == 0 else loss


def noise_power(psd_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in mW for a PSD in dBm/Hz over ``bandwidth_hz``."""
    if bandwidth_hz <= 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    return 10.0 ** ((psd_dbm_per_hz + 10.0 * np.log10(bandwidth_hz)) / 10.0)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * np.log10(mw)
