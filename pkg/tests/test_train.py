import logging

import numpy as np
import pytest

from config import ChannelConfig
from gnn import PolicyKind, build_model
from netgen import generate_dataset, noise_power
from train import batch_loss, compute_norm_stats, evaluate, frame_overheads, policy_frame_rates, train, write_learning_curve
from utils.exceptions import DataError, UsageError


def test_norm_stats_split_direct_and_interference(small_dataset):
    stats = compute_norm_stats(small_dataset)
    gains = small_dataset.gains
    mask = np.eye(3, dtype=bool)
    assert stats.direct_mean == pytest.approx(gains[..., mask].mean())
    assert stats.interference_std == pytest.approx(gains[..., ~mask].std())
    # direct links are much shorter than interfering ones
    assert stats.direct_mean > stats.interference_mean


def test_single_link_dataset_cannot_be_normalized():
    dataset = generate_dataset(ChannelConfig(n_links=1, frames=2), 2, seed=0)
    with pytest.raises(DataError):
        compute_norm_stats(dataset)


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_batch_loss_is_negative_rate(kind, small_dataset, small_config):
    noise_var = noise_power(small_config.channel.noise_psd_dbm_hz, small_config.channel.bandwidth)
    model = build_model(kind, norm_stats=compute_norm_stats(small_dataset), max_power=small_config.channel.max_tx_power_mw)
    gains = small_dataset.gains if kind is PolicyKind.AIR_MPRNN else small_dataset.gains[:, 0]
    loss = batch_loss(model, gains, noise_var)
    assert loss.size == 1
    assert np.isfinite(loss.item()) and loss.item() < 0


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_training_produces_learning_curve(kind, small_dataset, small_config, tmp_path):
    cfg = small_config.model_copy(
        update={"train": small_config.train.model_copy(update={"checkpoint_interval": 2})}
    )
    seen = []
    result = train(kind, small_dataset, cfg, checkpoint_dir=tmp_path, on_iteration=lambda step, rate: seen.append(step))
    assert [point.iteration for point in result.curve] == [1, 2, 3]
    assert seen == [1, 2, 3]
    assert [point.lr for point in result.curve] == pytest.approx([0.002, 0.0018, 0.00162])
    assert all(np.isfinite(point.validation_sum_rate) for point in result.curve)
    assert (tmp_path / f"{kind.value}-iter00002.agck").exists()

    path = write_learning_curve(tmp_path / "curve.csv", result.curve)
    assert path.read_text().splitlines()[0] == "iteration,train_loss,validation_sum_rate,lr"


def test_training_is_reproducible(small_dataset, small_config):
    a = train("air-mpnn", small_dataset, small_config)
    b = train("air-mpnn", small_dataset, small_config)
    for x, y in zip(a.model.parameters(), b.model.parameters()):
        np.testing.assert_array_equal(x.values, y.values)


def test_evaluate_baselines(small_dataset, small_config):
    epa = evaluate("epa", small_dataset, small_config)
    wmmse = evaluate("wmmse", small_dataset, small_config, chunk_size=2)
    assert epa.overhead_symbols == 0 and epa.overhead_ratio == 0.0
    assert len(epa.layouts) == len(small_dataset)
    assert wmmse.overhead_symbols == 9
    assert wmmse.mean_sum_rate > 0


def test_evaluate_rejects_misuse(small_dataset, small_config):
    with pytest.raises(UsageError):
        evaluate("mpnn", small_dataset, small_config)
    with pytest.raises(UsageError):
        evaluate("wmmse", small_dataset, small_config, mode="physical")
    model = build_model(PolicyKind.AIR_MPNN, norm_stats=compute_norm_stats(small_dataset))
    with pytest.raises(UsageError):
        evaluate(model, small_dataset, small_config, warm_start=model)


def test_evaluate_uses_model_depth_for_overhead(small_dataset, small_config):
    cfg = small_config.model_copy(update={"model": small_config.model.model_copy(update={"air_mpnn_layers": 2})})
    model = build_model(PolicyKind.AIR_MPNN, cfg.model, compute_norm_stats(small_dataset), cfg.channel.max_tx_power_mw)
    result = evaluate(model, small_dataset, small_config)
    assert result.overhead_symbols == (2 + 1) * 3


def test_noiseless_physical_evaluation_matches_ideal(small_dataset, small_config):
    model = build_model(
        PolicyKind.AIR_MPRNN, norm_stats=compute_norm_stats(small_dataset), max_power=small_config.channel.max_tx_power_mw
    )
    ideal = evaluate(model, small_dataset, small_config)
    physical = evaluate(model, small_dataset, small_config, mode="physical", pilot_noise=False)
    assert physical.mean_sum_rate == pytest.approx(ideal.mean_sum_rate, rel=1e-6)


def test_physical_evaluation_writes_pilot_trace(small_dataset, small_config, tmp_path):
    model = build_model(
        PolicyKind.AIR_MPNN, norm_stats=compute_norm_stats(small_dataset), max_power=small_config.channel.max_tx_power_mw
    )
    trace = tmp_path / "trace.csv"
    evaluate(model, small_dataset, small_config, mode="physical", seed=3, chunk_size=4, trace_path=trace)
    rows = trace.read_text().splitlines()
    layouts, frames, k = len(small_dataset), small_dataset.frames, small_dataset.n_links
    assert len(rows) == 1 + layouts * frames * model.layers * k


def test_warm_start_pays_air_mpnn_price_once(small_config):
    assert frame_overheads("air-mprnn", 3, 4, small_config, warm_start_layers=3) == [12, 3, 3, 3]
    assert frame_overheads("air-mprnn", 3, 2, small_config, warm_start_layers=1) == [6, 3]
    assert frame_overheads("air-mprnn", 3, 2, small_config) == [3, 3]


def test_evaluate_charges_warm_start_depth_in_first_frame(small_dataset, small_config):
    stats = compute_norm_stats(small_dataset)
    power = small_config.channel.max_tx_power_mw
    recurrent = build_model(PolicyKind.AIR_MPRNN, small_config.model, stats, power)
    warm = build_model(PolicyKind.AIR_MPNN, small_config.model, stats, power)
    cfg = small_config.model_copy(
        update={"overhead": small_config.overhead.model_copy(update={"symbols_per_frame": 20})}
    )
    result = evaluate(recurrent, small_dataset, cfg, warm_start=warm)
    assert warm.layers == 3
    assert result.frame_overheads == [12, 3]
    assert result.overhead_symbols == 3

    noise_var = noise_power(cfg.channel.noise_psd_dbm_hz, cfg.channel.bandwidth)
    rates = policy_frame_rates(recurrent, small_dataset.gains, noise_var, warm_start=warm)
    expected = (rates * np.array([8 / 20, 17 / 20])).mean()
    assert result.mean_sum_rate == pytest.approx(expected, rel=1e-9)


def _single_frame(small_config, **train_updates):
    channel = small_config.channel.model_copy(update={"frames": 1})
    train_cfg = small_config.train.model_copy(update={"validation_fraction": 0.0, **train_updates})
    cfg = small_config.model_copy(update={"channel": channel, "train": train_cfg})
    return cfg, generate_dataset(channel, 6, seed=7)


def test_training_lowers_the_loss(small_config):
    cfg, dataset = _single_frame(small_config, iterations=40, batch_size=6, learning_rate=0.01, decay_interval=100)
    noise_var = noise_power(cfg.channel.noise_psd_dbm_hz, cfg.channel.bandwidth)
    initial = build_model(PolicyKind.MPNN, cfg.model, compute_norm_stats(dataset), cfg.channel.max_tx_power_mw)
    trained = train("mpnn", dataset, cfg).model
    gains = dataset.gains[:, 0]
    assert batch_loss(trained, gains, noise_var).item() < batch_loss(initial, gains, noise_var).item()


def test_zero_iterations_leave_the_initial_model(small_config):
    cfg, dataset = _single_frame(small_config, iterations=0)
    initial = build_model(PolicyKind.AIR_MPNN, cfg.model, compute_norm_stats(dataset), cfg.channel.max_tx_power_mw)
    result = train("air-mpnn", dataset, cfg)
    assert result.curve == []
    for x, y in zip(result.model.parameters(), initial.parameters()):
        np.testing.assert_array_equal(x.values, y.values)


def test_validation_rate_pays_the_scheme_overhead(small_dataset, small_config):
    result = train("mpnn", small_dataset, small_config)
    noise_var = noise_power(small_config.channel.noise_psd_dbm_hz, small_config.channel.bandwidth)
    _, held = small_dataset.split(small_config.train.validation_fraction, seed=small_config.train.seed)
    gross = policy_frame_rates(result.model, held.gains[:, :1], noise_var).mean()
    # K^2 d_csi + N K d_mp = 9 + 45 symbols out of 3000
    assert result.curve[-1].validation_sum_rate == pytest.approx((1 - 54 / 3000) * gross, rel=1e-9)

    choked = small_config.model_copy(
        update={"overhead": small_config.overhead.model_copy(update={"symbols_per_frame": 54})}
    )
    assert all(point.validation_sum_rate == 0.0 for point in train("mpnn", small_dataset, choked).curve)


def test_ideal_evaluation_skips_pilot_trace(small_dataset, small_config, tmp_path, caplog):
    trace = tmp_path / "trace.csv"
    with caplog.at_level(logging.WARNING, logger="train.evaluate"):
        evaluate("epa", small_dataset, small_config, trace_path=trace)
    assert not trace.exists()
    assert "pilot trace needs physical mode" in caplog.text
