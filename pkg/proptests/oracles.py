"""Property and oracle checks across the simulator, the policies and the baselines.

Every property returns an OracleReport instead of raising, so one run always
produces a complete report. ``scale="small"`` uses fewer random instances.
"""

import itertools
import logging
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel

import templates
from airphy import PilotChannel, air_local_gain, air_max_estimate, air_sum_estimate, exact_aggregate, make_pilot_bank, receive_pilots
from baselines import air_wmmse, wmmse, wmmse_iterate
from config import OverheadConfig, RunConfig
from diffmath import backward, grad_tape
from evalmetrics import Scheme, format_ratio, overhead_ratio, overhead_symbols, rate_prefactor, weighted_sum_rate
from gnn import NormStats, PolicyKind, PolicyModel, build_model, parameter_report, run_episode
from netgen import evolve_episode, generate_layout, large_scale_gains, noise_power
from train import batch_loss
from utils.utils import write_csv

logger = logging.getLogger(__name__)

Scale = Literal["small", "full"]

EXACT_TOLERANCE = 1e-10
EQUIVARIANCE_TOLERANCE = 1e-9
GRADIENT_TOLERANCE = 1e-4
WMMSE_GRID_RATIO = 0.98


class OracleReport(BaseModel):
    name: str
    instances: int
    max_deviation: float
    passed: bool
    detail: str = ""

    def as_csv(self) -> dict[str, str]:
        return {
            "property": self.name,
            "instances": str(self.instances),
            "max_deviation": repr(self.max_deviation),
            "passed": str(self.passed).lower(),
            "detail": self.detail,
        }


def _random_channels(rng: np.random.Generator, k: int, batch: int | None = None) -> np.ndarray:
    """Complex coefficients with power gains in [1e-2, 1], so cancellation stays benign."""
    shape = (k, k) if batch is None else (batch, k, k)
    magnitude = np.sqrt(10.0 ** rng.uniform(-2.0, 0.0, size=shape))
    return magnitude * np.exp(2j * np.pi * rng.uniform(size=shape))


def _simulated_gains(rng: np.random.Generator, n_links: int, frames: int = 1, rho: float = 0.5) -> np.ndarray:
    cfg = RunConfig().channel
    length = float(np.sqrt(n_links / cfg.link_density))
    layout = generate_layout(n_links, length, cfg.min_link_distance, cfg.max_link_distance, rng)
    g_ls = large_scale_gains(layout, cfg.antenna_gain_db, cfg.carrier_frequency, cfg.tx_height, cfg.rx_height)
    episode = evolve_episode(g_ls, rho, frames, rng)
    return episode.gains if frames > 1 else episode.gains[0]


def _simulated_channels(rng: np.random.Generator, n_links: int) -> np.ndarray:
    gains = _simulated_gains(rng, n_links)
    return np.sqrt(gains) * np.exp(2j * np.pi * rng.uniform(size=gains.shape))


def _stats_for(gains: np.ndarray) -> NormStats:
    k = gains.shape[-1]
    mask = np.eye(k, dtype=bool)
    direct, cross = gains[..., mask], gains[..., ~mask]
    return NormStats(
        direct_mean=float(direct.mean()),
        direct_std=float(direct.std()) or 1.0,
        interference_mean=float(cross.mean()),
        interference_std=float(cross.std()) or 1.0,
    )


def _model(kind: PolicyKind, gains: np.ndarray, seed: int) -> PolicyModel:
    return build_model(kind, norm_stats=_stats_for(gains), max_power=RunConfig().channel.max_tx_power_mw, seed=seed)


def _relative(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.abs(b), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b) / scale)) if a.size else 0.0


def pilot_orthonormality(rng: np.random.Generator, n: int) -> OracleReport:
    deviations = []
    for k in list(range(1, 9)) + [20, 50]:
        length = k + int(rng.integers(0, 3))
        bank = make_pilot_bank(k, length, seed=rng)
        deviations.append(float(np.max(np.abs(bank.gram() - np.eye(k)))))
    worst = max(deviations)
    return OracleReport(name="pilot_orthonormality", instances=len(deviations), max_deviation=worst, passed=worst < 1e-12)


def noiseless_aggregation(rng: np.random.Generator, n: int) -> OracleReport:
    """Sum, max and direct-gain estimates from superimposed pilots equal the exact values."""
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(2, 9))
        h = _random_channels(rng, k)
        powers = rng.uniform(0.1, 1.0, size=k)
        bank = make_pilot_bank(k, seed=rng)
        g = np.abs(h) ** 2
        for i in range(k):
            y = receive_pilots(i, powers, h[:, i], bank)
            worst = max(
                worst,
                _relative(air_sum_estimate(y, bank.pilot(i)), exact_aggregate(powers, g[:, i], i, "sum")),
                _relative(air_max_estimate(y, bank, i), exact_aggregate(powers, g[:, i], i, "max")),
                _relative(air_local_gain(y, bank.pilot(i), powers[i]), g[i, i]),
            )
    return OracleReport(
        name="noiseless_aggregation_exact", instances=n, max_deviation=worst, passed=worst < EXACT_TOLERANCE
    )


def noisy_aggregation(rng: np.random.Generator, n: int) -> OracleReport:
    """Median relative error of the interference-power estimate under the default thermal noise."""
    cfg = RunConfig().channel
    noise_var = noise_power(cfg.noise_psd_dbm_hz, cfg.bandwidth)
    medians = {}
    for k in (5, 20, 50):
        errors = []
        for _ in range(n):
            h = _simulated_channels(rng, k)
            powers = cfg.max_tx_power_mw * rng.uniform(0.1, 1.0, size=(1, k))
            channel = PilotChannel(make_pilot_bank(k, seed=rng), noise_var, seed=rng)
            estimate = channel.broadcast(powers, h[None]).sum_estimate()[0]
            exact = np.array([exact_aggregate(powers[0], np.abs(h[:, i]) ** 2, i) for i in range(k)])
            errors.extend(np.abs(estimate - exact) / exact)
        medians[k] = float(np.median(errors))
    detail = " ".join(f"K={k}:{m:.2e}" for k, m in medians.items())
    return OracleReport(
        name="noisy_aggregation_median_error", instances=3 * n, max_deviation=medians[20], passed=medians[20] < 0.01, detail=detail
    )


def _permute(gains: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return gains[..., perm, :][..., :, perm]


def permutation_equivariance(rng: np.random.Generator, n: int) -> OracleReport:
    """All three policies and the air estimators commute with node relabeling."""
    worst = 0.0
    for index in range(n):
        k = int(rng.integers(2, 9))
        perm = rng.permutation(k)
        episode = _simulated_gains(rng, k, frames=3)
        for kind in PolicyKind:
            model = _model(kind, episode, seed=index)
            model.aggregation = ("sum", "mean", "max")[index % 3]
            p = np.stack([t.values[0] for t in run_episode(model, episode)])
            q = np.stack([t.values[0] for t in run_episode(model, _permute(episode, perm))])
            worst = max(worst, _relative(q, p[:, perm]))

        h = _random_channels(rng, k, batch=1)
        powers = rng.uniform(0.1, 1.0, size=(1, k))
        bank = make_pilot_bank(k, seed=rng)
        original = PilotChannel(bank).broadcast(powers, h)
        permuted = PilotChannel(bank).broadcast(powers[:, perm], _permute(h, perm))
        worst = max(
            worst,
            _relative(permuted.sum_estimate(), original.sum_estimate()[:, perm]),
            _relative(permuted.max_estimate(), original.max_estimate()[:, perm]),
        )
    return OracleReport(
        name="permutation_equivariance", instances=n, max_deviation=worst, passed=worst < EQUIVARIANCE_TOLERANCE
    )


def ideal_physical_agreement(rng: np.random.Generator, n: int) -> OracleReport:
    """Noiseless physical pilots reproduce the ideal forward passes and one ideal Air-WMMSE iteration."""
    cfg = RunConfig().channel
    noise_var = noise_power(cfg.noise_psd_dbm_hz, cfg.bandwidth)
    worst = 0.0
    for index in range(n):
        k = int(rng.integers(2, 9))
        episode = _simulated_gains(rng, k, frames=3)
        channels = np.sqrt(episode) * np.exp(2j * np.pi * rng.uniform(size=episode.shape))
        bank = make_pilot_bank(k, seed=rng)
        for kind in (PolicyKind.AIR_MPNN, PolicyKind.AIR_MPRNN):
            model = _model(kind, episode, seed=index)
            ideal = np.stack([t.values for t in run_episode(model, episode)])
            physical = np.stack(
                [t.values for t in run_episode(model, episode, mode="physical", channels=channels, pilot_channel=PilotChannel(bank))]
            )
            worst = max(worst, _relative(physical, ideal))
        frame = episode[0]
        ideal = air_wmmse(frame, noise_var, max_power=cfg.max_tx_power_mw)
        physical = air_wmmse(
            frame, noise_var, max_power=cfg.max_tx_power_mw, mode="physical", channels=channels[0], pilot_channel=PilotChannel(bank)
        )
        worst = max(worst, float(np.max(np.abs(physical - ideal))))
    return OracleReport(
        name="ideal_physical_agreement", instances=n, max_deviation=worst, passed=worst < EQUIVARIANCE_TOLERANCE
    )


def gradient_check(rng: np.random.Generator, n: int, eps: float = 1e-6) -> OracleReport:
    """Backpropagated gradients of the batch loss against central differences, K = 4."""
    cfg = RunConfig().channel
    noise_var = noise_power(cfg.noise_psd_dbm_hz, cfg.bandwidth)
    worst, checked, failures = 0.0, 0, 0
    for kind in PolicyKind:
        frames = 10 if kind is PolicyKind.AIR_MPRNN else 1
        batch = np.stack([_simulated_gains(rng, 4, frames=max(frames, 2))[:frames] for _ in range(2)])
        gains = batch if kind is PolicyKind.AIR_MPRNN else batch[:, 0]
        model = _model(kind, batch, seed=int(rng.integers(1 << 31)))
        with grad_tape():
            grads = backward(batch_loss(model, gains, noise_var))
        for param in model.parameters():
            analytic = grads.get(param, np.zeros_like(param.values))
            for flat in rng.choice(param.size, size=min(2, param.size), replace=False):
                index = np.unravel_index(flat, param.values.shape)
                original = param.values[index]
                param.values[index] = original + eps
                upper = batch_loss(model, gains, noise_var).item()
                param.values[index] = original - eps
                lower = batch_loss(model, gains, noise_var).item()
                param.values[index] = original
                numeric = (upper - lower) / (2 * eps)
                a = float(analytic[index])
                gap = abs(a - numeric)
                checked += 1
                if gap > GRADIENT_TOLERANCE * max(abs(a), abs(numeric)) + 1e-6:
                    failures += 1
                if max(abs(a), abs(numeric)) > 1e-3:
                    worst = max(worst, gap / max(abs(a), abs(numeric)))
    return OracleReport(
        name="gradient_finite_differences",
        instances=checked,
        max_deviation=worst,
        passed=failures == 0,
        detail=f"{failures} coordinates outside tolerance" if failures else "",
    )


def wmmse_monotonicity(rng: np.random.Generator, n: int) -> OracleReport:
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(2, 9))
        gains = 10.0 ** rng.uniform(-3.0, 0.0, size=(k, k))
        _, history = wmmse_iterate(gains, noise_var=float(10.0 ** rng.uniform(-3, -1)), iters=50)
        drops = -np.diff(history[:, 0])
        worst = max(worst, float(drops.max()))
    return OracleReport(name="wmmse_monotone_rate", instances=n, max_deviation=max(worst, 0.0), passed=worst <= 1e-9)


def wmmse_grid_dominance(rng: np.random.Generator, n: int, levels: int = 21) -> OracleReport:
    """WMMSE(100) against exhaustive search over ``levels`` power levels per link (K = 2, 3)."""
    ratios = []
    grid = np.linspace(0.0, 1.0, levels)
    for index in range(n):
        k = 2 + index % 2
        gains = 10.0 ** rng.uniform(-3.0, 0.0, size=(k, k))
        noise_var = float(10.0 ** rng.uniform(-3, -1))
        candidates = np.array(list(itertools.product(grid, repeat=k)))
        best = float(np.max(weighted_sum_rate(candidates, np.broadcast_to(gains, (len(candidates), k, k)), None, noise_var)))
        achieved = weighted_sum_rate(wmmse(gains, noise_var), gains, None, noise_var)
        ratios.append(achieved / best)
    below = sum(ratio < WMMSE_GRID_RATIO for ratio in ratios)
    return OracleReport(
        name="wmmse_grid_dominance",
        instances=n,
        max_deviation=max(0.0, float(1.0 - min(ratios))),
        passed=below == 0,
        detail=f"worst ratio {min(ratios):.4f}, {below} instances below {WMMSE_GRID_RATIO}",
    )


def overhead_table(rng: np.random.Generator, n: int) -> OracleReport:
    cfg = OverheadConfig()
    expected = {
        Scheme.EPA: "0",
        Scheme.WMMSE: "13.3%",
        Scheme.MPNN: "23.3%",
        Scheme.AIR_MPNN: "2.7%",
        Scheme.AIR_MPRNN: "0.7%",
        Scheme.AIR_WMMSE: "2.0%",
    }
    mismatches = [s.value for s, ratio in expected.items() if format_ratio(overhead_ratio(s, 20, cfg)) != ratio]
    cliff = rate_prefactor(overhead_symbols(Scheme.MPNN, 30, OverheadConfig(delta_csi=2, delta_mp=20)), 3000)
    passed = not mismatches and cliff == 0.0
    return OracleReport(
        name="overhead_formula_table",
        instances=len(expected) + 1,
        max_deviation=float(len(mismatches)) + cliff,
        passed=passed,
        detail=f"mismatched: {mismatches}" if mismatches else "",
    )


def parameter_counts(rng: np.random.Generator, n: int) -> OracleReport:
    rows = {row.kind: row for row in parameter_report()}
    expected = {"mpnn": 2377, "air-mpnn": 1882, "air-mprnn": 2186}
    off = [kind for kind, count in expected.items() if rows[kind].computed != count]
    return OracleReport(
        name="parameter_counts",
        instances=len(rows),
        max_deviation=float(max(abs(rows[k].computed - expected[k]) for k in expected)),
        passed=not off,
        detail=f"air-mprnn published {rows['air-mprnn'].published}, computed {rows['air-mprnn'].computed}",
    )


PROPERTIES: dict[str, Callable[[np.random.Generator, int], OracleReport]] = {
    "pilot_orthonormality": pilot_orthonormality,
    "noiseless_aggregation_exact": noiseless_aggregation,
    "noisy_aggregation_median_error": noisy_aggregation,
    "permutation_equivariance": permutation_equivariance,
    "ideal_physical_agreement": ideal_physical_agreement,
    "gradient_finite_differences": gradient_check,
    "wmmse_monotone_rate": wmmse_monotonicity,
    "wmmse_grid_dominance": wmmse_grid_dominance,
    "overhead_formula_table": overhead_table,
    "parameter_counts": parameter_counts,
}

# (instances at K <= 8, instances of statistical checks at K = 20)
INSTANCE_COUNTS = {"small": (20, 3), "full": (100, 10)}
STATISTICAL = {"noisy_aggregation_median_error"}


def run_property(name: str, seed: int = 0, scale: Scale = "small") -> OracleReport:
    small, statistical = INSTANCE_COUNTS[scale]
    n = statistical if name in STATISTICAL else small
    rng = np.random.default_rng([seed, sorted(PROPERTIES).index(name)])
    try:
        return PROPERTIES[name](rng, n)
    except Exception as e:  # noqa: BLE001
        logger.warning("property %s raised %s: %s", name, type(e).__name__, e)
        return OracleReport(name=name, instances=0, max_deviation=float("inf"), passed=False, detail=f"{type(e).__name__}: {e}")


def run_all(seed: int = 0, scale: Scale = "small", workers: int = 4) -> list[OracleReport]:
    """Runs every property; each draws from its own seeded stream, so order and threads do not matter."""
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as executor:
        reports = list(executor.map(lambda name: run_property(name, seed, scale), PROPERTIES))
    logger.info(
        templates.ORACLE_REPORT_FOOTER.format(
            passed=sum(r.passed for r in reports), total=len(reports), elapsed=time.perf_counter() - started
        )
    )
    return reports


def format_report(reports: list[OracleReport]) -> str:
    lines = [
        templates.ORACLE_REPORT_LINE.format(
            status="PASS" if r.passed else "FAIL",
            name=r.name,
            instances=r.instances,
            deviation=r.max_deviation,
            detail=r.detail,
        ).rstrip()
        for r in reports
    ]
    lines.append(f"{sum(r.passed for r in reports)}/{len(reports)} properties passed")
    return "\n".join(lines)


def write_report_csv(path: str | Path, reports: list[OracleReport]) -> Path:
    return write_csv(path, [r.as_csv() for r in reports], columns=["property", "instances", "max_deviation", "passed", "detail"])


__all__ = ["OracleReport", "PROPERTIES", "run_property", "run_all", "format_report", "write_report_csv"]
