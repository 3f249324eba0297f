import numpy as np
import pytest

from diffmath import Activation, AdamState, MlpParams, Tensor, adam_step, backward, grad_tape, mlp_apply, ops
from diffmath import decode_checkpoint, encode_checkpoint
from utils.exceptions import CheckpointError, ConfigurationError, NonFiniteError, UsageError


def test_square_gradient():
    x = Tensor.parameter([1.0, -2.0, 3.0])
    with grad_tape():
        loss = ops.sum(x * x)
        grads = backward(loss)
    np.testing.assert_allclose(grads[x], [2.0, -4.0, 6.0])


def test_broadcast_gradient_is_summed():
    w = Tensor.parameter([[1.0, 2.0]])
    x = Tensor(np.ones((3, 2)))
    with grad_tape():
        grads = backward(ops.sum(x * w))
    np.testing.assert_allclose(grads[w], [[3.0, 3.0]])


def test_max_splits_gradient_between_ties():
    x = Tensor.parameter([[1.0, 3.0, 3.0]])
    with grad_tape():
        grads = backward(ops.sum(ops.max(x, axis=1)))
    np.testing.assert_allclose(grads[x], [[0.0, 0.5, 0.5]])


def test_take_scatters_gradient():
    x = Tensor.parameter([1.0, 2.0, 3.0])
    with grad_tape():
        grads = backward(ops.sum(x[np.array([0, 0, 2])]))
    np.testing.assert_allclose(grads[x], [2.0, 0.0, 1.0])


def test_backward_needs_scalar_taped_loss():
    x = Tensor.parameter([1.0, 2.0])
    with pytest.raises(UsageError):
        backward(ops.sum(x))
    with grad_tape():
        with pytest.raises(UsageError):
            backward(x * 2.0)


def test_non_finite_forward_raises():
    with pytest.raises(NonFiniteError):
        ops.log(Tensor([0.0]))
    with pytest.raises(NonFiniteError):
        Tensor([1.0]) / Tensor([0.0])


def test_matmul_shape_mismatch():
    with pytest.raises(ConfigurationError):
        Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))


def test_mlp_gradient_matches_central_differences(rng):
    params = MlpParams.initialize([3, 5, 1], rng, Activation.SIGMOID)
    x = Tensor(rng.standard_normal((4, 3)))

    def loss_value():
        return ops.sum(mlp_apply(params, x)).item()

    with grad_tape():
        grads = backward(ops.sum(mlp_apply(params, x)))

    eps = 1e-6
    for p in params.parameters():
        for index in np.ndindex(p.values.shape):
            original = p.values[index]
            p.values[index] = original + eps
            upper = loss_value()
            p.values[index] = original - eps
            lower = loss_value()
            p.values[index] = original
            assert grads[p][index] == pytest.approx((upper - lower) / (2 * eps), rel=1e-4, abs=1e-7)


def test_glorot_bounds_and_zero_biases(rng):
    params = MlpParams.initialize([10, 32, 1], rng)
    limit = np.sqrt(6.0 / 42.0)
    assert np.all(np.abs(params.weights[0].values) <= limit)
    assert all(np.all(b.values == 0) for b in params.biases)
    assert params.parameter_count == 10 * 32 + 32 + 32 + 1


def test_mlp_rejects_wrong_width(rng):
    params = MlpParams.initialize([3, 4, 2], rng)
    with pytest.raises(ConfigurationError):
        mlp_apply(params, Tensor(np.ones((2, 5))))


def test_adam_first_step_moves_by_learning_rate():
    p = Tensor.parameter([1.0, -1.0])
    state = AdamState.for_parameters([p])
    with grad_tape():
        grads = backward(ops.sum(p * p))
    adam_step([p], grads, state, lr=0.1)
    np.testing.assert_allclose(p.values, [0.9, -0.9], atol=1e-6)
    assert state.step == 1


def test_sigmoid_slope_at_zero_is_a_quarter():
    x = Tensor.parameter([0.0])
    with grad_tape():
        y = ops.sigmoid(x)
        grads = backward(ops.sum(y))
    np.testing.assert_allclose(y.values, [0.5])
    np.testing.assert_allclose(grads[x], [0.25])


def test_adam_with_zero_gradient_leaves_parameters():
    p = Tensor.parameter([1.0, -2.0])
    q = Tensor.parameter([[0.5]])
    state = AdamState.for_parameters([p, q])
    adam_step([p, q], {p: np.zeros(2)}, state, lr=0.1)
    np.testing.assert_array_equal(p.values, [1.0, -2.0])
    np.testing.assert_array_equal(q.values, [[0.5]])
    assert state.step == 1


def test_adam_rejects_mismatched_state():
    p = Tensor.parameter([1.0])
    state = AdamState.for_parameters([p, Tensor.parameter([2.0])])
    with pytest.raises(ConfigurationError):
        adam_step([p], {}, state, lr=0.1)


def test_checkpoint_keeps_weights_and_activation(rng):
    mlp = MlpParams.initialize([2, 4, 1], rng, Activation.SIGMOID)
    header, mlps = decode_checkpoint(encode_checkpoint({"kind": "demo"}, {"omega": mlp}))
    assert header["kind"] == "demo"
    assert mlps["omega"].output_activation is Activation.SIGMOID
    np.testing.assert_array_equal(mlps["omega"].weights[1].values, mlp.weights[1].values)


def test_checkpoint_corruption_is_detected(rng):
    data = encode_checkpoint({}, {"phi": MlpParams.initialize([2, 3], rng)})
    with pytest.raises(CheckpointError):
        decode_checkpoint(b"XXXX" + data[4:])
    with pytest.raises(CheckpointError):
        decode_checkpoint(data[:-3])
    with pytest.raises(CheckpointError):
        decode_checkpoint(data + b"\x00")
