import numpy as np
import pytest

from airphy import PilotChannel, make_pilot_bank
from config import ModelConfig
from diffmath import Activation, MlpParams, Tensor, backward, grad_tape, ops
from gnn import (
    NormStats,
    PolicyKind,
    PolicyModel,
    aggregate,
    airmpnn_forward,
    build_model,
    forward_frame,
    load_checkpoint,
    mpnn_forward,
    normalize_gain,
    parameter_report,
    policy_output,
    run_episode,
    save_checkpoint,
    structure,
)
from utils.exceptions import CheckpointError, ConfigurationError, UsageError


def _stats(gains: np.ndarray) -> NormStats:
    mask = np.eye(gains.shape[-1], dtype=bool)
    return NormStats(
        direct_mean=float(gains[..., mask].mean()),
        direct_std=float(gains[..., mask].std()),
        interference_mean=float(gains[..., ~mask].mean()),
        interference_std=float(gains[..., ~mask].std()),
    )


def _episode(rng, make_channels, k=4, frames=3):
    h = make_channels(rng, k, batch=frames)
    return np.abs(h) ** 2, h


@pytest.mark.parametrize(
    "kind,count", [(PolicyKind.MPNN, 2377), (PolicyKind.AIR_MPNN, 1882), (PolicyKind.AIR_MPRNN, 2186)]
)
def test_parameter_counts(kind, count):
    assert build_model(kind).parameter_count == count


def test_parameter_report_flags_air_mprnn():
    rows = {row.kind: row for row in parameter_report()}
    assert rows["mpnn"].discrepancy == 0
    assert rows["air-mpnn"].discrepancy == 0
    assert rows["air-mprnn"].published == 2258
    assert rows["air-mprnn"].discrepancy == 2186 - 2258


def test_structure_follows_embedding_width():
    dims = structure(PolicyKind.AIR_MPNN, embed_dim=4)
    assert dims == {"phi": [5, 32, 32, 1], "update": [6, 16, 4], "omega": [4, 16, 1]}


def test_air_mprnn_has_one_layer():
    model = build_model(PolicyKind.AIR_MPRNN)
    with pytest.raises(ConfigurationError):
        PolicyModel(PolicyKind.AIR_MPRNN, model.phi, model.update, model.omega, layers=2)


def test_output_head_must_be_sigmoid(rng):
    model = build_model(PolicyKind.MPNN)
    linear_omega = MlpParams.initialize([8, 16, 1], rng, Activation.LINEAR)
    with pytest.raises(ConfigurationError):
        PolicyModel(PolicyKind.MPNN, model.phi, model.update, linear_omega, layers=3)


def test_normalize_gain_needs_positive_std():
    assert normalize_gain(3.0, 1.0, 2.0) == 1.0
    with pytest.raises(ConfigurationError):
        normalize_gain(3.0, 1.0, 0.0)


def test_zero_output_mlp_gives_half_power():
    omega = MlpParams.zeros([8, 16, 1], Activation.SIGMOID)
    p = policy_output(Tensor(np.zeros((2, 3, 8))), omega)
    assert p.shape == [2, 3]
    np.testing.assert_allclose(p.values, 0.5)


def test_aggregate_excludes_self():
    incoming = np.arange(9, dtype=float).reshape(1, 3, 3)
    total = aggregate(Tensor(incoming), "sum").values
    # receiver 0 hears senders 1 and 2: entries [1, 0] and [2, 0]
    np.testing.assert_allclose(total, [[3.0 + 6.0, 1.0 + 7.0, 2.0 + 5.0]])
    np.testing.assert_allclose(aggregate(Tensor(incoming), "mean").values, total / 3.0)
    np.testing.assert_allclose(aggregate(Tensor(incoming), "max").values, [[6.0, 7.0, 5.0]])


def test_single_link_aggregate_is_zero():
    np.testing.assert_array_equal(aggregate(Tensor(np.ones((2, 1, 1, 4))), "max").values, np.zeros((2, 1, 4)))


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_powers_lie_in_unit_interval(kind, rng, make_channels):
    gains, _ = _episode(rng, make_channels, k=5, frames=4)
    model = build_model(kind, norm_stats=_stats(gains), max_power=10.0, seed=3)
    powers = run_episode(model, gains)
    assert len(powers) == 4
    for p in powers:
        assert p.shape == [1, 5]
        assert np.all((p.values >= 0.0) & (p.values <= 1.0))


@pytest.mark.parametrize("kind", list(PolicyKind))
@pytest.mark.parametrize("aggregation", ["sum", "mean", "max"])
def test_relabeling_nodes_permutes_powers(kind, aggregation, rng, make_channels):
    gains, _ = _episode(rng, make_channels, k=5, frames=3)
    cfg = ModelConfig(aggregation=aggregation)
    model = build_model(kind, cfg, norm_stats=_stats(gains), max_power=10.0, seed=1)
    perm = rng.permutation(5)
    permuted = gains[:, perm][:, :, perm]
    p = np.stack([t.values[0] for t in run_episode(model, gains)])
    q = np.stack([t.values[0] for t in run_episode(model, permuted)])
    np.testing.assert_allclose(q, p[:, perm], rtol=1e-9, atol=1e-12)


def test_forward_checks_model_kind(rng, make_channels):
    gains, _ = _episode(rng, make_channels)
    with pytest.raises(UsageError):
        mpnn_forward(build_model(PolicyKind.AIR_MPNN), gains[0])


def test_physical_mode_needs_pilot_channel(rng, make_channels):
    gains, _ = _episode(rng, make_channels)
    model = build_model(PolicyKind.AIR_MPNN, norm_stats=_stats(gains))
    with pytest.raises(UsageError):
        airmpnn_forward(model, gains[0], mode="physical")
    with pytest.raises(UsageError):
        airmpnn_forward(model, gains[0], mode="radio")


@pytest.mark.parametrize("kind", [PolicyKind.AIR_MPNN, PolicyKind.AIR_MPRNN])
def test_noiseless_physical_mode_matches_ideal(kind, rng, make_channels):
    gains, h = _episode(rng, make_channels, k=4, frames=3)
    model = build_model(kind, norm_stats=_stats(gains), max_power=10.0, seed=2)
    channel = PilotChannel(make_pilot_bank(4, seed=0))
    ideal = np.stack([p.values for p in run_episode(model, gains)])
    physical = np.stack([p.values for p in run_episode(model, gains, mode="physical", channels=h, pilot_channel=channel)])
    np.testing.assert_allclose(physical, ideal, rtol=1e-7, atol=1e-10)


def test_broadcast_counts_per_policy(rng, make_channels):
    gains, h = _episode(rng, make_channels, k=4, frames=5)
    stats = _stats(gains)

    channel = PilotChannel(make_pilot_bank(4, seed=0))
    run_episode(build_model(PolicyKind.AIR_MPRNN, norm_stats=stats), gains, mode="physical", channels=h, pilot_channel=channel)
    assert channel.broadcasts == 5

    channel = PilotChannel(make_pilot_bank(4, seed=0))
    run_episode(build_model(PolicyKind.AIR_MPNN, norm_stats=stats), gains, mode="physical", channels=h, pilot_channel=channel)
    assert channel.broadcasts == 3 * 5


def test_warm_start_drives_first_frame(rng, make_channels):
    gains, h = _episode(rng, make_channels, k=4, frames=4)
    stats = _stats(gains)
    recurrent = build_model(PolicyKind.AIR_MPRNN, norm_stats=stats, seed=1)
    warm = build_model(PolicyKind.AIR_MPNN, norm_stats=stats, seed=2)

    powers = run_episode(recurrent, gains, warm_start=warm)
    np.testing.assert_allclose(powers[0].values, airmpnn_forward(warm, gains[0]).values)

    channel = PilotChannel(make_pilot_bank(4, seed=0))
    run_episode(recurrent, gains, mode="physical", channels=h, pilot_channel=channel, warm_start=warm)
    assert channel.broadcasts == warm.layers + 3

    with pytest.raises(UsageError):
        run_episode(recurrent, gains, warm_start=recurrent)


def test_checkpoint_restores_identical_policy(tmp_path, rng, make_channels):
    gains, _ = _episode(rng, make_channels)
    model = build_model(PolicyKind.MPNN, norm_stats=_stats(gains), max_power=100.0, seed=4)
    path = tmp_path / "mpnn.agck"
    save_checkpoint(path, model)
    restored = load_checkpoint(path)
    assert restored.kind is PolicyKind.MPNN
    assert restored.norm_stats == model.norm_stats
    assert restored.max_power == 100.0
    assert restored.training_seconds is None
    np.testing.assert_array_equal(mpnn_forward(restored, gains[0]).values, mpnn_forward(model, gains[0]).values)


def test_checkpoint_keeps_training_time(tmp_path):
    model = build_model(PolicyKind.AIR_MPRNN)
    model.training_seconds = 12.5
    path = tmp_path / "air-mprnn.agck"
    save_checkpoint(path, model)
    assert load_checkpoint(path).training_seconds == 12.5


def test_missing_checkpoint_is_reported(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nothing.agck")


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_policy_gradient_matches_central_differences(kind, rng, make_channels):
    gains, _ = _episode(rng, make_channels, k=4, frames=2)
    model = build_model(kind, norm_stats=_stats(gains), max_power=1.0, seed=5)

    def objective():
        return ops.sum(forward_frame(model, gains))

    with grad_tape():
        grads = backward(objective())

    eps = 1e-6
    for param in model.parameters():
        analytic = grads.get(param, np.zeros_like(param.values))
        for flat in (0, param.size - 1):
            index = np.unravel_index(flat, param.values.shape)
            original = param.values[index]
            param.values[index] = original + eps
            upper = objective().item()
            param.values[index] = original - eps
            lower = objective().item()
            param.values[index] = original
            assert analytic[index] == pytest.approx((upper - lower) / (2 * eps), rel=1e-4, abs=1e-7)


def test_last_frame_gradient_reaches_back_to_first_frame(rng, make_channels):
    gains, _ = _episode(rng, make_channels, k=4, frames=10)
    model = build_model(PolicyKind.AIR_MPRNN, norm_stats=_stats(gains), max_power=1.0, seed=2)

    def last_frame_grads(episode):
        with grad_tape():
            powers = run_episode(model, episode)
            return backward(ops.sum(powers[-1]))

    silenced = gains.copy()
    silenced[0] = 0.0
    original, changed = last_frame_grads(gains), last_frame_grads(silenced)
    assert any(
        not np.allclose(original.get(p, np.zeros_like(p.values)), changed.get(p, np.zeros_like(p.values)))
        for p in model.parameters()
    )
