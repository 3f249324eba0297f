from enum import Enum

from config import OverheadConfig
from utils.exceptions import UsageError


class Scheme(str, Enum):
    EPA = "epa"
    WMMSE = "wmmse"
    AIR_WMMSE = "air-wmmse"
    MPNN = "mpnn"
    AIR_MPNN = "air-mpnn"
    AIR_MPRNN = "air-mprnn"


def as_scheme(scheme) -> Scheme:
    try:
        return Scheme(getattr(scheme, "value", scheme))
    except ValueError:
        raise UsageError(f"unknown scheme '{scheme}', expected one of {[s.value for s in Scheme]}") from None


def overhead_symbols(scheme, n_links: int, cfg: OverheadConfig) -> int:
    """
    Pilot and message symbols a scheme spends per frame before data transmission.

        epa        0
        wmmse      K^2 d_csi                   (every link estimated)
        air-wmmse  3 K d_csi                   (local CSI + two pilot rounds, one iteration)
        mpnn       K^2 d_csi + N K d_mp        (CSI + N sequential embedding broadcasts)
        air-mpnn   (N + 1) K d_csi             (local CSI + N simultaneous pilot rounds)
        air-mprnn  K d_csi                     (one pilot round per frame)
    """
    scheme = as_scheme(scheme)
    k, n = n_links, cfg.layers
    if scheme is Scheme.EPA:
        return 0
    if scheme is Scheme.WMMSE:
        return k * k * cfg.delta_csi
    if scheme is Scheme.AIR_WMMSE:
        return 3 * k * cfg.delta_csi
    if scheme is Scheme.MPNN:
        return k * k * cfg.delta_csi + n * k * cfg.delta_mp
    if scheme is Scheme.AIR_MPNN:
        return (n + 1) * k * cfg.delta_csi
    return k * cfg.delta_csi


def overhead_ratio(scheme, n_links: int, cfg: OverheadConfig) -> float:
    return overhead_symbols(scheme, n_links, cfg) / cfg.symbols_per_frame


def rate_prefactor(overhead: int, symbols_per_frame: int) -> float:
    """(N_S - N_O) / N_S, clamped at zero once the overhead eats the whole frame."""
    return max(0.0, (symbols_per_frame - overhead) / symbols_per_frame)


def format_ratio(ratio: float) -> str:
    return "0" if ratio == 0 else f"{100.0 * ratio:.1f}%"
