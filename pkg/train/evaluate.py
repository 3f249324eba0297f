import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from airphy import PilotBank, PilotChannel, make_pilot_bank
from baselines import air_wmmse, epa, wmmse
from config import RunConfig
from evalmetrics import Scheme, as_scheme, overhead_symbols, rate_prefactor, weighted_sum_rate
from gnn import PolicyKind, PolicyModel, run_episode
from gnn.forward import Mode
from netgen import ChannelDataset, noise_power
from utils.exceptions import UsageError
from utils.types import EvaluationResult, LayoutResult
from utils.utils import write_csv

logger = logging.getLogger(__name__)

WMMSE_ITERATIONS = 100


def policy_frame_rates(
    model: PolicyModel,
    gains: np.ndarray,
    noise_var: float,
    *,
    mode: Mode = "ideal",
    channels: np.ndarray | None = None,
    pilot_channel: PilotChannel | None = None,
    warm_start: PolicyModel | None = None,
) -> np.ndarray:
    """Sum-rates (B, T) of a policy over a batch of episodes, before overhead discounting."""
    powers = run_episode(model, gains, mode=mode, channels=channels, pilot_channel=pilot_channel, warm_start=warm_start)
    return np.stack(
        [weighted_sum_rate(p.values, gains[:, t], None, noise_var, max_power=model.max_power) for t, p in enumerate(powers)],
        axis=1,
    )


def _baseline_frame_rates(
    scheme: Scheme,
    gains: np.ndarray,
    noise_var: float,
    max_power: float,
    mode: Mode,
    channels: np.ndarray | None,
    pilot_channel: PilotChannel | None,
) -> np.ndarray:
    b, t, k = gains.shape[:3]
    flat = gains.reshape(b * t, k, k)
    if scheme is Scheme.EPA:
        p = epa(k, b * t)
    elif scheme is Scheme.WMMSE:
        p = wmmse(flat, noise_var, iters=WMMSE_ITERATIONS, max_power=max_power)
    else:
        h = None if channels is None else channels.reshape(b * t, k, k)
        p = air_wmmse(flat, noise_var, max_power=max_power, mode=mode, channels=h, pilot_channel=pilot_channel)
    return weighted_sum_rate(p, flat, None, noise_var, max_power=max_power).reshape(b, t)


def frame_overheads(
    scheme: Scheme, n_links: int, frames: int, cfg: RunConfig, warm_start_layers: int | None = None
) -> list[int]:
    """N_O of every frame; a warm-started Air-MPRNN pays its ``warm_start_layers``-deep Air-MPNN price in frame 0."""
    overhead = [overhead_symbols(scheme, n_links, cfg.overhead)] * frames
    if warm_start_layers is not None and frames:
        warm = cfg.overhead.model_copy(update={"layers": warm_start_layers})
        overhead[0] = overhead_symbols(Scheme.AIR_MPNN, n_links, warm)
    return overhead


def evaluate(
    policy: PolicyModel | Scheme | str,
    dataset: ChannelDataset,
    cfg: RunConfig,
    *,
    mode: Mode = "ideal",
    warm_start: PolicyModel | None = None,
    pilot_noise: bool = True,
    seed: int = 0,
    workers: int = 4,
    chunk_size: int = 50,
    trace_path: str | Path | None = None,
) -> EvaluationResult:
    """
    Mean overhead-discounted sum-rate of a policy or baseline on a test dataset.

    Every frame of every episode is evaluated; Air-MPRNN runs through the frames
    sequentially. Per-layout results are frame averages.

    Raises:
        UsageError: GNN scheme without a model, physical mode for a scheme with no
            pilot rounds, or a warm start for anything but Air-MPRNN
    """
    model = policy if isinstance(policy, PolicyModel) else None
    scheme = as_scheme(model.kind if model is not None else policy)
    if model is None and scheme.value in {k.value for k in PolicyKind}:
        raise UsageError(f"scheme '{scheme.value}' needs a trained model")
    if mode == "physical" and scheme in (Scheme.EPA, Scheme.WMMSE, Scheme.MPNN):
        raise UsageError(f"'{scheme.value}' has no over-the-air rounds to simulate")
    if warm_start is not None and scheme is not Scheme.AIR_MPRNN:
        raise UsageError("only air-mprnn can be warm started")

    ch = cfg.channel
    noise_var = noise_power(ch.noise_psd_dbm_hz, ch.bandwidth)
    if model is not None:
        cfg = cfg.model_copy(update={"overhead": cfg.overhead.model_copy(update={"layers": model.layers})})
    warm_layers = warm_start.layers if warm_start is not None else None
    overheads = frame_overheads(scheme, dataset.n_links, dataset.frames, cfg, warm_layers)
    prefactors = np.array([rate_prefactor(n, cfg.overhead.symbols_per_frame) for n in overheads])

    if trace_path is not None and mode != "physical":
        logger.warning("pilot trace needs physical mode, %s will not be written", trace_path)
        trace_path = None
    gains = dataset.gains
    channels = dataset.channels if mode == "physical" else None
    bank: PilotBank | None = None
    if mode == "physical":
        bank = make_pilot_bank(dataset.n_links, cfg.model.pilot_length, seed=seed)

    def make_channel(chunk: int) -> PilotChannel | None:
        if bank is None:
            return None
        return PilotChannel(
            bank,
            noise_var if pilot_noise else 0.0,
            seed=np.random.default_rng([seed, chunk]),
            bias_correction=cfg.model.noise_bias_correction,
            trace=trace_path is not None,
        )

    def evaluate_chunk(chunk: int) -> tuple[np.ndarray, PilotChannel | None]:
        rows = slice(chunk * chunk_size, (chunk + 1) * chunk_size)
        g = gains[rows]
        h = None if channels is None else channels[rows]
        pilot_channel = make_channel(chunk)
        if model is not None:
            rates = policy_frame_rates(
                model, g, noise_var, mode=mode, channels=h, pilot_channel=pilot_channel, warm_start=warm_start
            )
        else:
            rates = _baseline_frame_rates(scheme, g, noise_var, ch.max_tx_power_mw, mode, h, pilot_channel)
        return rates, pilot_channel

    n_chunks = -(-len(dataset) // chunk_size)
    if trace_path is not None:
        workers = 1
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(evaluate_chunk, range(n_chunks)))

    frame_rates = np.concatenate([rates for rates, _ in results], axis=0) * prefactors
    per_layout = frame_rates.mean(axis=1)
    if trace_path is not None and bank is not None:
        rows = [row for _, pilot_channel in results for row in pilot_channel.trace_rows]
        write_csv(trace_path, rows)
        logger.info("pilot trace written: %s (%d rows)", trace_path, len(rows))

    result = EvaluationResult(
        scheme=scheme.value,
        n_links=dataset.n_links,
        overhead_symbols=overheads[-1],
        overhead_ratio=overheads[-1] / cfg.overhead.symbols_per_frame,
        frame_overheads=overheads,
        mean_sum_rate=float(per_layout.mean()),
        layouts=[
            LayoutResult(layout=m, rho=float(dataset.rho[m]), sum_rate=float(per_layout[m])) for m in range(len(dataset))
        ],
    )
    logger.info(
        "%s on %d layouts (K=%d, %s): %.4f bps/Hz, overhead %d symbols",
        scheme.value, len(dataset), dataset.n_links, mode, result.mean_sum_rate, result.overhead_symbols,
    )
    return result


def write_layout_results(path: str | Path, result: EvaluationResult) -> Path:
    return write_csv(path, [row.as_csv() for row in result.layouts], columns=["layout", "rho", "sum_rate"])
