import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lukegraph.errors import DimensionError, DomainError, UsageError
from lukegraph.numerics import (
    LayerNorm,
    Linear,
    Module,
    OptimizerState,
    Tensor,
    adamw_step,
    backward,
    bce_with_logits,
    bmm,
    concat,
    elu,
    exp,
    gelu,
    getitem,
    grad_check,
    layer_norm,
    leaky_relu,
    log,
    linear_schedule,
    matmul,
    mean,
    no_grad,
    relative_error,
    sigmoid,
    softmax,
    stack,
    tanh,
    tsum,
    warmup_steps_for,
)
from lukegraph.numerics.tensor import _make, as_tensor, dropout


def param(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


finite = st.floats(-30, 30, allow_nan=False, allow_infinity=False)


# -- forward values against closed forms -------------------------------------


def test_softmax_rows_sum_to_one_and_are_shift_invariant():
    x = np.array([[1.0, 2.0, 3.0], [1000.0, 1000.0, 1000.0]])
    out = softmax(Tensor(x), axis=-1).data
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-15)
    np.testing.assert_allclose(out[1], [1 / 3] * 3, atol=1e-15)
    e = np.exp([1.0, 2.0, 3.0])
    np.testing.assert_allclose(out[0], e / e.sum(), rtol=1e-14)


@given(arrays(np.float64, (3, 5), elements=finite), st.floats(-100, 100))
def test_softmax_is_a_distribution(x, shift):
    out = softmax(Tensor(x), axis=1).data
    assert np.all(out >= 0)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(softmax(Tensor(x + shift), axis=1).data, out, atol=1e-12)


def test_softmax_empty_axis_is_a_domain_error():
    with pytest.raises(DomainError):
        softmax(Tensor(np.zeros((2, 0))), axis=1)


def test_activation_values():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    np.testing.assert_allclose(elu(Tensor(x)).data, np.where(x > 0, x, np.expm1(x)))
    np.testing.assert_allclose(leaky_relu(Tensor(x)).data, np.where(x > 0, x, 0.2 * x))
    np.testing.assert_allclose(sigmoid(Tensor(x)).data, 1 / (1 + np.exp(-x)))
    np.testing.assert_allclose(tanh(Tensor(x)).data, np.tanh(x))
    erf = np.vectorize(math.erf)
    np.testing.assert_allclose(gelu(Tensor(x)).data, 0.5 * x * (1 + erf(x / math.sqrt(2))), rtol=1e-14)


def test_sigmoid_saturates_without_overflow():
    with np.errstate(over="raise"):
        out = sigmoid(Tensor(np.array([-800.0, 800.0]))).data
    np.testing.assert_array_equal(out, [0.0, 1.0])


def test_bce_matches_naive_form_and_is_stable():
    z = np.array([-3.0, 0.0, 2.5])
    y = np.array([0.0, 1.0, 1.0])
    p = 1 / (1 + np.exp(-z))
    naive = -(y * np.log(p) + (1 - y) * np.log(1 - p)).mean()
    assert bce_with_logits(Tensor(z), y).item() == pytest.approx(naive, rel=1e-14)
    big = bce_with_logits(Tensor(np.array([1000.0, -1000.0])), np.array([0.0, 1.0])).item()
    assert big == pytest.approx(1000.0)


def test_bce_on_zero_candidates_is_a_domain_error():
    with pytest.raises(DomainError):
        bce_with_logits(Tensor(np.zeros(0)), np.zeros(0))


def test_bce_shape_mismatch():
    with pytest.raises(DimensionError):
        bce_with_logits(Tensor(np.zeros(3)), np.zeros(2))


def test_layer_norm_output_moments():
    rng = np.random.default_rng(0)
    x = rng.normal(3.0, 5.0, size=(4, 16))
    out = layer_norm(Tensor(x), Tensor(np.ones(16)), Tensor(np.zeros(16))).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, rtol=1e-5)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(4, 5\)"):
        matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))


def test_matmul_rejects_non_matrices():
    with pytest.raises(DimensionError):
        matmul(Tensor(np.zeros(3)), Tensor(np.zeros((3, 2))))


# -- reverse mode -------------------------------------------------------------


def test_backward_requires_scalar():
    with pytest.raises(UsageError):
        backward(Tensor(np.ones(3), requires_grad=True) * 2.0)


def test_gradients_accumulate_across_backward_calls():
    w = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    backward(tsum(w * 3.0))
    backward(tsum(w * 3.0))
    np.testing.assert_array_equal(w.grad, [6.0, 6.0])


def test_shared_subexpression_gets_both_paths():
    x = Tensor(np.array(2.0), requires_grad=True)
    y = x * x
    backward(y + y)
    assert x.grad == pytest.approx(8.0)


def test_no_grad_builds_no_tape():
    w = Tensor(np.ones(2), requires_grad=True)
    with no_grad():
        out = tsum(w * 2.0)
    assert not out.requires_grad


def test_getitem_scatters_repeated_indices():
    w = Tensor(np.arange(4.0), requires_grad=True)
    backward(tsum(getitem(w, np.array([0, 0, 3]))))
    np.testing.assert_array_equal(w.grad, [2.0, 0.0, 0.0, 1.0])


def test_deep_chain_does_not_recurse():
    x = Tensor(np.array(1.0), requires_grad=True)
    y = x
    for _ in range(5000):
        y = y * 1.0
    backward(y)
    assert x.grad == 1.0


OPS = {
    "add_broadcast": lambda a, b: tsum((a + b[0]) ** 2),
    "sub_div": lambda a, b: tsum((a - b) / (b * b + 1.0)),
    "matmul": lambda a, b: tsum(tanh(matmul(a, b.T))),
    "bmm": lambda a, b: tsum(bmm(a.reshape(1, 3, 4), b.reshape(1, 4, 3)) ** 2),
    "softmax": lambda a, b: tsum(softmax(a, axis=0) * b),
    "elu": lambda a, b: tsum(elu(a) * b),
    "leaky_relu": lambda a, b: tsum(leaky_relu(a) * b),
    "gelu": lambda a, b: tsum(gelu(a) * b),
    "sigmoid": lambda a, b: tsum(sigmoid(a) * b),
    "layer_norm": lambda a, b: tsum(layer_norm(a, b[0], b[1]) ** 3),
    "concat_stack": lambda a, b: tsum(stack([concat([a, b], 0), concat([b, a], 0)], 1) ** 2),
    "transpose": lambda a, b: tsum(a.transpose(1, 0) @ b),
    "mean_exp_log": lambda a, b: mean(log(exp(a) + 1.0)) * tsum(b),
    "bce": lambda a, b: bce_with_logits(a, (b.data > 0).astype(float)),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradients(name):
    rng = np.random.default_rng(hash(name) % 2**32)
    a, b = param(rng, 3, 4), param(rng, 3, 4)
    result = grad_check(lambda: OPS[name](a, b), [a, b], step=1e-6)
    assert result.passes(1e-6), result


def test_linear_module_gradients():
    rng = np.random.default_rng(0)
    lin = Linear(rng, 5, 3)
    x = Tensor(rng.normal(size=(4, 5)))
    result = grad_check(lambda: tsum(tanh(lin(x))), lin.parameters(), step=1e-6)
    assert result.passes(1e-7)


# -- the checker must catch a wrong backward ---------------------------------


def bad_square(x):
    x = as_tensor(x)
    return _make(x.data**2, (x,), lambda g: (g * 2.0 * x.data * 1.1,))


def test_gradcheck_detects_a_mutated_backward():
    rng = np.random.default_rng(0)
    w = param(rng, 6)
    result = grad_check(lambda: tsum(bad_square(w)), [w])
    assert result.max_rel_error > 1e-2
    assert result.max_rel_error == pytest.approx(0.1 / 2.1, rel=1e-3)


def test_gradcheck_reports_nonfinite_losses():
    w = Tensor(np.array([0.0]), requires_grad=True)
    with np.errstate(divide="ignore"):
        result = grad_check(lambda: tsum(log(w)), [w])
    assert not result.ok


def test_relative_error_floor():
    assert relative_error(np.array(0.0), np.array(0.0)) == 0.0
    assert relative_error(np.array(1.0), np.array(1.0 + 1e-9)) < 1e-9


def test_gradcheck_subsampling_is_seeded():
    rng = np.random.default_rng(0)
    w = param(rng, 50)
    r1 = grad_check(lambda: tsum(w * w), [w], max_entries=5, rng=np.random.default_rng(3))
    r2 = grad_check(lambda: tsum(w * w), [w], max_entries=5, rng=np.random.default_rng(3))
    assert r1.checked == r2.checked == 5
    assert r1.worst_index == r2.worst_index


# -- dropout -----------------------------------------------------------------


def test_dropout_is_identity_without_rng_and_scales_kept_units():
    x = Tensor(np.ones(1000))
    assert dropout(x, 0.5, None) is x
    out = dropout(x, 0.5, np.random.default_rng(0)).data
    assert set(np.unique(out)) <= {0.0, 2.0}
    assert 400 < (out > 0).sum() < 600


# -- optimizer ---------------------------------------------------------------


def test_linear_schedule_shape():
    assert warmup_steps_for(100, 0.06) == 6
    assert linear_schedule(0, 6, 100) == 0.0
    assert linear_schedule(3, 6, 100) == 0.5
    assert linear_schedule(6, 6, 100) == 1.0
    assert linear_schedule(53, 6, 100) == pytest.approx(0.5)
    assert linear_schedule(100, 6, 100) == 0.0
    assert linear_schedule(0, 0, 10) == 1.0


def test_adamw_single_step_by_hand():
    p = {"w": np.array([1.0, -2.0]), "b": np.array([0.5])}
    g = {"w": np.array([0.1, -0.3]), "b": np.array([2.0])}
    state = OptimizerState(lr=0.1, total_steps=10, warmup_ratio=0.0, weight_decay=0.5)
    lr = adamw_step(p, g, state, no_decay=frozenset({"b"}))
    assert lr == 0.1 and state.step == 1
    # first step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps)
    for name, decay in (("w", 0.5), ("b", 0.0)):
        orig = {"w": np.array([1.0, -2.0]), "b": np.array([0.5])}[name]
        expected = orig * (1 - 0.1 * decay) - 0.1 * g[name] / (np.abs(g[name]) + 1e-6)
        np.testing.assert_allclose(p[name], expected, rtol=1e-15)


def test_adamw_second_step_by_hand():
    p = {"w": np.array([1.0])}
    state = OptimizerState(lr=0.01, total_steps=4, warmup_ratio=0.0, weight_decay=0.0, eps=0.0)
    adamw_step(p, {"w": np.array([1.0])}, state)
    adamw_step(p, {"w": np.array([3.0])}, state)
    m = (0.9 * 0.1 * 1.0 + 0.1 * 3.0) / (1 - 0.9**2)
    v = (0.98 * 0.02 * 1.0 + 0.02 * 9.0) / (1 - 0.98**2)
    lr2 = 0.01 * (4 - 1) / 4
    np.testing.assert_allclose(p["w"], [1.0 - 0.01 - lr2 * m / math.sqrt(v)], rtol=1e-14)


def test_adamw_warmup_first_update_is_a_no_op():
    p = {"w": np.array([1.0])}
    state = OptimizerState(lr=0.1, total_steps=100)
    assert adamw_step(p, {"w": np.array([1.0])}, state) == 0.0
    assert p["w"][0] == 1.0


def test_adamw_shape_mismatch():
    with pytest.raises(DimensionError):
        adamw_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, OptimizerState(lr=0.1, total_steps=1))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 5.0), st.integers(0, 2**31))
def test_adamw_minimizes_a_quadratic(target, seed):
    rng = np.random.default_rng(seed)
    p = {"x": rng.normal(size=3)}
    state = OptimizerState(lr=0.1, total_steps=500, warmup_ratio=0.0, weight_decay=0.0)
    for _ in range(500):
        adamw_step(p, {"x": 2 * (p["x"] - target)}, state)
    np.testing.assert_allclose(p["x"], target, atol=0.05)


def test_module_parameter_names_follow_definition_order():
    rng = np.random.default_rng(0)

    class Two(Module):
        def __init__(self):
            self.first = Linear(rng, 2, 2)
            self.norm = LayerNorm(2)
            self.stack = [Linear(rng, 2, 1, bias=False)]

    names = [n for n, _ in Two().named_parameters()]
    assert names == ["first.weight", "first.bias", "norm.gain", "norm.bias", "stack.0.weight"]


# -- closed-form spot values ------------------------------------------------


def test_activation_spot_values():
    assert elu(Tensor(np.array(1.0))).item() == 1.0
    assert elu(Tensor(np.array(-50.0))).item() == pytest.approx(-1.0)
    assert leaky_relu(Tensor(np.array(-1.0)), 0.2).item() == pytest.approx(-0.2)
    assert sigmoid(Tensor(np.array(0.0))).item() == 0.5
    assert tanh(Tensor(np.array(0.0))).item() == 0.0


def test_bce_spot_values():
    assert bce_with_logits(Tensor(np.array([0.0])), [1.0]).item() == pytest.approx(math.log(2), rel=1e-15)
    with np.errstate(over="raise"):
        assert bce_with_logits(Tensor(np.array([50.0])), [1.0]).item() == pytest.approx(0.0, abs=1e-20)
    assert bce_with_logits(Tensor(np.zeros(2)), [1.0, 0.0]).item() == pytest.approx(math.log(2), rel=1e-15)


def test_sum_of_squares_gradient_and_unused_parameter():
    p = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    unused = Tensor(np.ones(2), requires_grad=True)
    backward(tsum(p * p))
    np.testing.assert_array_equal(p.grad, 2 * p.data)
    assert unused.grad is None  # never reached: treated as zero by the optimizer and grad_check


def test_backward_is_linear_in_the_loss():
    rng = np.random.default_rng(5)
    w = param(rng, 3, 3)
    x = Tensor(rng.normal(size=(2, 3)))

    def loss_a():
        return tsum(tanh(matmul(x, w)))

    def loss_b():
        return tsum(sigmoid(matmul(x, w)) ** 2)

    backward(loss_a() + loss_b())
    joint = w.grad.copy()
    w.grad = None
    backward(loss_a())
    backward(loss_b())
    np.testing.assert_allclose(w.grad, joint, rtol=1e-14, atol=1e-15)


def test_gradcheck_quadratic_form():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4))
    w = param(rng, 4, 1)
    result = grad_check(lambda: tsum(w * matmul(Tensor(a), w)), [w])
    assert result.max_rel_error < 1e-8


def test_gradcheck_softmax_cross_entropy():
    rng = np.random.default_rng(1)
    w = param(rng, 5, 3)
    x = Tensor(rng.normal(size=(4, 5)))
    target = np.eye(3)[[0, 2, 1, 2]]
    result = grad_check(lambda: -tsum(log(softmax(matmul(x, w), axis=1)) * target) * 0.25, [w])
    assert result.max_rel_error < 1e-6


def test_adamw_first_step_unit_gradient():
    p = {"w": np.array([0.5])}
    state = OptimizerState(lr=1e-3, total_steps=10, warmup_ratio=0.0, weight_decay=0.0, beta1=0.9, beta2=0.98)
    adamw_step(p, {"w": np.array([1.0])}, state)
    m_hat = 0.1 / (1 - 0.9)
    v_hat = 0.02 / (1 - 0.98)
    assert p["w"][0] == pytest.approx(0.5 - 1e-3 * m_hat / (math.sqrt(v_hat) + 1e-6), rel=1e-15)


def test_adamw_zero_gradient_zero_decay_is_a_fixed_point():
    p = {"w": np.array([0.3, -0.7])}
    state = OptimizerState(lr=0.1, total_steps=5, warmup_ratio=0.0, weight_decay=0.0)
    for _ in range(3):
        adamw_step(p, {"w": np.zeros(2)}, state)
    np.testing.assert_array_equal(p["w"], [0.3, -0.7])


def test_schedule_reaches_peak_at_the_end_of_warmup():
    state = OptimizerState(lr=0.5, total_steps=50)
    state.step = state.warmup_steps
    assert state.current_lr() == 0.5


def test_initialization_is_seeded():
    a = Linear(np.random.default_rng(2**63 - 1), 3, 2)
    b = Linear(np.random.default_rng(2**63 - 1), 3, 2)
    np.testing.assert_array_equal(a.weight.data, b.weight.data)
    assert np.all(np.abs(a.weight.data) <= 1 / math.sqrt(3))
