import numpy as np
import pytest

from airphy import (
    PilotChannel,
    air_local_gain,
    air_max_estimate,
    air_sum_estimate,
    exact_aggregate,
    make_pilot_bank,
    receive_pilots,
)
from utils.exceptions import ConfigurationError, DomainError, EstimationError


@pytest.mark.parametrize("k,length", [(1, 1), (4, 4), (6, 9)])
def test_pilots_are_orthonormal(k, length):
    bank = make_pilot_bank(k, length, seed=0)
    assert bank.sequences.shape == (length, k)
    np.testing.assert_allclose(bank.gram(), np.eye(k), atol=1e-12)


def test_short_pilots_are_rejected():
    with pytest.raises(ConfigurationError):
        make_pilot_bank(5, 4)


def test_noiseless_receiver_recovers_exact_values(rng, make_channels):
    k = 6
    h = make_channels(rng, k)
    g = np.abs(h) ** 2
    powers = rng.uniform(0.1, 1.0, size=k)
    bank = make_pilot_bank(k, seed=1)
    for i in range(k):
        y = receive_pilots(i, powers, h[:, i], bank)
        assert air_sum_estimate(y, bank.pilot(i)) == pytest.approx(exact_aggregate(powers, g[:, i], i), rel=1e-10)
        assert air_max_estimate(y, bank, i) == pytest.approx(exact_aggregate(powers, g[:, i], i, "max"), rel=1e-10)
        assert air_local_gain(y, bank.pilot(i), powers[i]) == pytest.approx(g[i, i], rel=1e-10)


def test_exact_aggregate_modes():
    powers = np.array([1.0, 2.0, 3.0])
    column = np.array([1.0, 1.0, 2.0])
    assert exact_aggregate(powers, column, 0, "sum") == 8.0
    assert exact_aggregate(powers, column, 0, "mean") == pytest.approx(8.0 / 3.0)
    assert exact_aggregate(powers, column, 0, "max") == 6.0
    assert exact_aggregate(np.array([2.0]), np.array([1.0]), 0, "max") == 0.0


def test_negative_pilot_power_is_rejected(make_channels, rng):
    bank = make_pilot_bank(3, seed=0)
    h = make_channels(rng, 3)
    with pytest.raises(DomainError):
        receive_pilots(0, np.array([1.0, -0.1, 1.0]), h[:, 0], bank)
    with pytest.raises(DomainError):
        PilotChannel(bank).broadcast(np.array([[1.0, -0.1, 1.0]]), h[None])


def test_silent_node_cannot_learn_its_direct_gain(make_channels, rng):
    bank = make_pilot_bank(3, seed=0)
    h = make_channels(rng, 3)
    y = receive_pilots(1, np.array([1.0, 0.0, 1.0]), h[:, 1], bank)
    with pytest.raises(EstimationError):
        air_local_gain(y, bank.pilot(1), 0.0)
    observation = PilotChannel(bank).broadcast(np.array([[1.0, 0.0, 1.0]]), h[None])
    with pytest.raises(EstimationError):
        observation.local_gain()


def test_batched_broadcast_matches_single_receiver(rng, make_channels):
    k, b = 5, 3
    h = make_channels(rng, k, batch=b)
    powers = rng.uniform(0.1, 1.0, size=(b, k))
    bank = make_pilot_bank(k, seed=2)
    channel = PilotChannel(bank)
    observation = channel.broadcast(powers, h)
    for n in range(b):
        for i in range(k):
            y = receive_pilots(i, powers[n], h[n, :, i], bank)
            assert observation.sum_estimate()[n, i] == pytest.approx(air_sum_estimate(y, bank.pilot(i)), rel=1e-10)
    np.testing.assert_allclose(observation.local_gain(), np.abs(np.diagonal(h, axis1=1, axis2=2)) ** 2, rtol=1e-10)
    assert channel.broadcasts == 1


def test_bias_correction_removes_noise_floor():
    k = 4
    bank = make_pilot_bank(k, seed=0)
    h = np.zeros((2000, k, k), dtype=complex)
    channel = PilotChannel(bank, noise_var=0.5, seed=3, bias_correction=True)
    observation = channel.broadcast(np.ones((2000, k)), h)
    # pure noise: ||y||^2 - |y^H s_i|^2 averages (L_p - 1) sigma^2
    assert observation.sum_estimate().mean() == pytest.approx((k - 1) * 0.5, rel=0.05)
    assert np.all(observation.sum_estimate(bias_correction=True) >= 0.0)


def test_trace_rows_need_tracing(tmp_path, rng, make_channels):
    bank = make_pilot_bank(2, seed=0)
    with pytest.raises(ConfigurationError):
        PilotChannel(bank).trace_rows
    channel = PilotChannel(bank, trace=True)
    channel.broadcast(np.ones((1, 2)), make_channels(rng, 2, batch=1))
    assert len(channel.trace_rows) == 2
    channel.dump_trace(tmp_path / "trace.csv")
    assert (tmp_path / "trace.csv").read_text().splitlines()[0].startswith("broadcast,network,node")
