import numpy as np
import pytest

from config import OverheadConfig
from diffmath import Tensor
from evalmetrics import (
    Scheme,
    as_scheme,
    format_ratio,
    overhead_ratio,
    overhead_symbols,
    rate_prefactor,
    sinr,
    weighted_sum_rate,
    weighted_sum_rate_tensor,
)
from utils.exceptions import UsageError


def test_sinr_of_symmetric_pair():
    gains = np.array([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(sinr(np.ones(2), gains, 0.0), [2.0, 2.0])
    assert weighted_sum_rate(np.ones(2), gains, None, 0.0) == pytest.approx(2.0 * np.log2(3.0))


def test_sinr_uses_max_power():
    gains = np.array([[1.0, 0.5], [0.5, 1.0]])
    xi = sinr(np.array([1.0, 0.0]), gains, noise_var=1.0, max_power=10.0)
    np.testing.assert_allclose(xi, [10.0, 0.0])


def test_weights_and_overhead_scale_the_rate():
    gains = np.array([[1.0, 0.0], [0.0, 1.0]])
    base = weighted_sum_rate(np.ones(2), gains, np.array([2.0, 0.0]), 1.0)
    assert base == pytest.approx(2.0)
    discounted = weighted_sum_rate(np.ones(2), gains, None, 1.0, overhead=300, symbols_per_frame=3000)
    assert discounted == pytest.approx(0.9 * 2.0)


def test_batched_rate_shape(rng):
    gains = rng.uniform(0.1, 1.0, size=(6, 4, 4))
    rates = weighted_sum_rate(rng.uniform(size=(6, 4)), gains, None, 0.1)
    assert rates.shape == (6,)


def test_tensor_rate_matches_numpy(rng):
    gains = rng.uniform(0.1, 1.0, size=(3, 4, 4))
    p = rng.uniform(size=(3, 4))
    np.testing.assert_allclose(
        weighted_sum_rate_tensor(Tensor(p), gains, None, 0.1, max_power=2.0).values,
        weighted_sum_rate(p, gains, None, 0.1, max_power=2.0),
    )


@pytest.mark.parametrize(
    "scheme,symbols,ratio",
    [
        (Scheme.EPA, 0, "0"),
        (Scheme.WMMSE, 400, "13.3%"),
        (Scheme.AIR_WMMSE, 60, "2.0%"),
        (Scheme.MPNN, 700, "23.3%"),
        (Scheme.AIR_MPNN, 80, "2.7%"),
        (Scheme.AIR_MPRNN, 20, "0.7%"),
    ],
)
def test_overhead_at_twenty_links(scheme, symbols, ratio):
    cfg = OverheadConfig()
    assert overhead_symbols(scheme, 20, cfg) == symbols
    assert format_ratio(overhead_ratio(scheme, 20, cfg)) == ratio


def test_overhead_can_exceed_the_frame():
    cfg = OverheadConfig(delta_csi=2, delta_mp=20)
    symbols = overhead_symbols("mpnn", 30, cfg)
    assert symbols == 2 * 900 + 3 * 30 * 20
    assert rate_prefactor(symbols, 3000) == 0.0
    assert rate_prefactor(0, 3000) == 1.0


def test_zero_estimation_cost_is_free():
    cfg = OverheadConfig(delta_csi=0, delta_mp=0)
    assert all(overhead_symbols(s, 50, cfg) == 0 for s in Scheme)


def test_unknown_scheme():
    assert as_scheme("air-mpnn") is Scheme.AIR_MPNN
    with pytest.raises(UsageError):
        as_scheme("oracle")


def test_sinr_is_invariant_to_joint_power_and_noise_scaling(rng):
    gains = rng.uniform(0.1, 1.0, size=(5, 5))
    p = rng.uniform(0.1, 1.0, size=5)
    np.testing.assert_allclose(
        sinr(p, gains, 0.3, max_power=2.0), sinr(p, gains, 3.0, max_power=20.0), rtol=1e-12
    )


def test_raising_one_power_helps_its_link_and_hurts_the_others(rng):
    gains = rng.uniform(0.1, 1.0, size=(4, 4))
    p = rng.uniform(0.2, 0.8, size=4)
    louder = p.copy()
    louder[1] += 0.1
    before, after = sinr(p, gains, 0.1), sinr(louder, gains, 0.1)
    assert after[1] > before[1]
    assert np.all(np.delete(after, 1) < np.delete(before, 1))
