import logging
import time
from collections.abc import Callable
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from config import RunConfig, TrainConfig
from diffmath import AdamState, Tensor, adam_step, backward, grad_tape, ops
from evalmetrics import overhead_symbols, rate_prefactor, weighted_sum_rate_tensor
from gnn import NormStats, PolicyKind, PolicyModel, build_model, forward_frame, run_episode, save_checkpoint
from netgen import ChannelDataset, noise_power
from utils.exceptions import DataError, NonFiniteError, TrainingDivergedError
from utils.types import LearningCurvePoint
from utils.utils import write_csv

from .evaluate import policy_frame_rates

logger = logging.getLogger(__name__)

__all__ = ["TrainConfig", "TrainResult", "compute_norm_stats", "batch_loss", "train", "write_learning_curve"]


class TrainResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: PolicyModel
    curve: list[LearningCurvePoint] = []
    elapsed_seconds: float = 0.0


def compute_norm_stats(dataset: ChannelDataset) -> NormStats:
    """
    Mean and std of direct-link and interference-link power gains over every layout and frame.

    Raises:
        DataError: empty dataset, no interference links, or a population with zero variance
    """
    if len(dataset) == 0:
        raise DataError("cannot compute normalization statistics of an empty dataset")
    gains = dataset.gains
    k = gains.shape[-1]
    diagonal = np.eye(k, dtype=bool)
    direct = gains[..., diagonal]
    interference = gains[..., ~diagonal]
    if interference.size == 0:
        raise DataError("a single-link dataset has no interference links to normalize")
    stats = {
        "direct_mean": float(direct.mean()),
        "direct_std": float(direct.std()),
        "interference_mean": float(interference.mean()),
        "interference_std": float(interference.std()),
    }
    if stats["direct_std"] == 0 or stats["interference_std"] == 0:
        raise DataError(f"degenerate dataset, a gain population has zero variance: {stats}")
    return NormStats(**stats)


def batch_loss(model: PolicyModel, gains: np.ndarray, noise_var: float) -> Tensor:
    """
    Negative mean sum-rate of a batch, no overhead prefactor.

    Args:
        gains: (B, K, K) frames, or (B, T, K, K) episodes for air-mprnn (averaged over frames)
    """
    if model.kind is PolicyKind.AIR_MPRNN:
        powers = run_episode(model, gains)
        rates = [
            ops.mean(weighted_sum_rate_tensor(p, gains[:, t], None, noise_var, model.max_power))
            for t, p in enumerate(powers)
        ]
        total = rates[0]
        for rate in rates[1:]:
            total = total + rate
        return total * (-1.0 / len(rates))
    p = forward_frame(model, gains)
    return ops.mean(weighted_sum_rate_tensor(p, gains, None, noise_var, model.max_power)) * -1.0


def _validation_gains(model: PolicyModel, dataset: ChannelDataset) -> np.ndarray:
    gains = dataset.gains
    # single-frame policies are validated on the first frame of every held-out layout
    return gains if model.kind is PolicyKind.AIR_MPRNN else gains[:, :1]


def _validation_rate(
    model: PolicyModel, gains: np.ndarray, noise_var: float, prefactor: float = 1.0, chunk_size: int = 50
) -> float:
    """Mean held-out sum-rate after the overhead discount the policy pays every frame."""
    if len(gains) == 0:
        return float("nan")
    rates = [
        policy_frame_rates(model, gains[start : start + chunk_size], noise_var)
        for start in range(0, len(gains), chunk_size)
    ]
    return prefactor * float(np.concatenate(rates, axis=0).mean())


def train(
    kind: PolicyKind | str,
    dataset: ChannelDataset,
    cfg: RunConfig,
    *,
    checkpoint_dir: str | Path | None = None,
    on_iteration: Callable[[int, float], None] | None = None,
) -> TrainResult:
    """
    Unsupervised training against the negative sum-rate with Adam and step-decayed LR.

    A ``validation_fraction`` share of layouts is held out for the learning curve;
    normalization statistics come from the remaining training layouts only.

    Raises:
        TrainingDivergedError: the loss or a gradient became non-finite
    """
    started = time.perf_counter()
    tc = cfg.train
    kind = PolicyKind(getattr(kind, "value", kind))
    train_set, validation_set = dataset.split(tc.validation_fraction, seed=tc.seed)
    model = build_model(
        kind, cfg.model, compute_norm_stats(train_set), max_power=cfg.channel.max_tx_power_mw
    )
    noise_var = noise_power(cfg.channel.noise_psd_dbm_hz, cfg.channel.bandwidth)
    params = model.parameters()
    adam = AdamState.for_parameters(params)

    gains = train_set.gains
    m, frames = gains.shape[:2]
    validation_gains = _validation_gains(model, validation_set)
    overhead = cfg.overhead.model_copy(update={"layers": model.layers})
    prefactor = rate_prefactor(overhead_symbols(kind, dataset.n_links, overhead), overhead.symbols_per_frame)
    logger.info(
        "training %s: %d parameters, %d train / %d validation layouts, %d iterations",
        kind.value, model.parameter_count, m, len(validation_set), tc.iterations,
    )

    curve: list[LearningCurvePoint] = []
    for iteration in range(tc.iterations):
        lr = tc.learning_rate * tc.lr_decay ** (iteration // tc.decay_interval)
        batch_seed = int(np.random.SeedSequence([tc.seed, iteration]).generate_state(1)[0])
        rng = np.random.default_rng(batch_seed)
        layouts = rng.choice(m, size=tc.batch_size, replace=m < tc.batch_size)
        if kind is PolicyKind.AIR_MPRNN:
            batch = gains[layouts]
        else:
            batch = gains[layouts, rng.integers(0, frames, size=tc.batch_size)]

        try:
            with grad_tape():
                loss = batch_loss(model, batch, noise_var)
                grads = backward(loss)
        except NonFiniteError as e:
            raise TrainingDivergedError(f"{kind.value} training diverged: {e}", iteration, batch_seed) from e
        if not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise TrainingDivergedError(f"{kind.value} gradient is not finite", iteration, batch_seed)
        adam_step(params, grads, adam, lr)

        step = iteration + 1
        if step % tc.validate_every == 0 or step == tc.iterations:
            point = LearningCurvePoint(
                iteration=step,
                train_loss=loss.item(),
                validation_sum_rate=_validation_rate(model, validation_gains, noise_var, prefactor),
                lr=lr,
            )
            curve.append(point)
            if on_iteration is not None:
                on_iteration(step, point.validation_sum_rate)
        if step % tc.log_every == 0:
            logger.info(
                "%s iteration %d/%d: loss %.4f, lr %.6f", kind.value, step, tc.iterations, loss.item(), lr
            )
        if checkpoint_dir is not None and tc.checkpoint_interval and step % tc.checkpoint_interval == 0:
            save_checkpoint(Path(checkpoint_dir) / f"{kind.value}-iter{step:05d}.agck", model)

    elapsed = time.perf_counter() - started
    model.training_seconds = elapsed
    logger.info("training %s finished in %.2f s", kind.value, elapsed)
    return TrainResult(model=model, curve=curve, elapsed_seconds=elapsed)


def write_learning_curve(path: str | Path, curve: list[LearningCurvePoint]) -> Path:
    return write_csv(
        path, [point.as_csv() for point in curve], columns=["iteration", "train_loss", "validation_sum_rate", "lr"]
    )
