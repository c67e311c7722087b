"""Tests for tape-recorded operations."""

import numpy as np
import pytest

from src.gradcore import ops
from src.gradcore.tensor import ComputationTape, Tensor, backward
from src.utils.errors import ContractError, DimensionError, DomainError


def numeric_grad(fn, values, eps=1e-6):
    """Central differences of a scalar function of one array."""
    grad = np.zeros_like(values)
    for idx in np.ndindex(values.shape):
        up, down = values.copy(), values.copy()
        up[idx] += eps
        down[idx] -= eps
        grad[idx] = (fn(up) - fn(down)) / (2 * eps)
    return grad


def tape_grad(fn, values):
    x = Tensor(values, requires_grad=True)
    with ComputationTape() as tape:
        loss = fn(x)
        tape.backward(loss)
    return x.grad


UNARY_CASES = [
    ("square", lambda x: ops.sum(ops.square(x))),
    ("exp", lambda x: ops.sum(ops.exp(x))),
    ("softplus", lambda x: ops.sum(ops.softplus(x))),
    ("sigmoid", lambda x: ops.sum(ops.sigmoid(x))),
    ("elu", lambda x: ops.sum(ops.elu(x))),
    ("neg", lambda x: ops.sum(ops.mul(ops.neg(x), x))),
    ("mean", lambda x: ops.mean(ops.square(x))),
    ("row_norm", lambda x: ops.sum(ops.row_norm(x))),
    ("reshape", lambda x: ops.sum(ops.square(ops.reshape(x, (2, 6))))),
    ("sum_axis", lambda x: ops.sum(ops.square(ops.sum(x, axis=0)))),
]


class TestGradients:
    """Tape gradients against central finite differences."""

    @pytest.mark.parametrize("name,fn", UNARY_CASES, ids=[c[0] for c in UNARY_CASES])
    def test_unary_ops(self, name, fn):
        values = np.random.default_rng(1).normal(size=(3, 4))

        analytic = tape_grad(fn, values)
        numeric = numeric_grad(lambda v: fn(Tensor(v)).item(), values)

        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)

    def test_log_and_sqrt(self):
        values = np.random.default_rng(2).uniform(0.5, 2.0, size=(2, 3))

        def fn(x):
            return ops.sum(ops.add(ops.log(x), ops.sqrt(x)))

        np.testing.assert_allclose(
            tape_grad(fn, values),
            numeric_grad(lambda v: fn(Tensor(v)).item(), values),
            rtol=1e-5,
        )

    def test_binary_ops_and_matmul(self):
        rng = np.random.default_rng(3)
        a_values = rng.normal(size=(3, 2))
        b = Tensor(rng.normal(size=(2, 4)))
        c = Tensor(rng.uniform(1.0, 2.0, size=(3, 4)))

        def fn(a):
            prod = ops.matmul(a, b)
            return ops.sum(ops.div(ops.sub(ops.mul(prod, prod), 1.0), c))

        np.testing.assert_allclose(
            tape_grad(fn, a_values),
            numeric_grad(lambda v: fn(Tensor(v)).item(), a_values),
            rtol=1e-5,
            atol=1e-8,
        )

    def test_concat_splits_adjoint(self):
        left = Tensor(np.ones((2, 1)), requires_grad=True)
        right = Tensor(np.full((2, 2), 2.0), requires_grad=True)
        weights = Tensor(np.arange(6.0).reshape(2, 3))

        with ComputationTape() as tape:
            loss = ops.sum(ops.mul(ops.concat(left, right, axis=1), weights))
            tape.backward(loss)

        np.testing.assert_array_equal(left.grad, [[0.0], [3.0]])
        np.testing.assert_array_equal(right.grad, [[1.0, 2.0], [4.0, 5.0]])

    def test_broadcast_rows_sums_rows(self):
        bias = Tensor(np.zeros((1, 3)), requires_grad=True)

        with ComputationTape() as tape:
            loss = ops.sum(ops.broadcast_rows(bias, 4))
            tape.backward(loss)

        np.testing.assert_array_equal(bias.grad, [[4.0, 4.0, 4.0]])

    def test_row_norm_zero_row_has_zero_gradient(self):
        x = Tensor(np.array([[0.0, 0.0], [3.0, 4.0]]), requires_grad=True)

        with ComputationTape() as tape:
            loss = ops.sum(ops.row_norm(x))
            tape.backward(loss)

        np.testing.assert_allclose(x.grad, [[0.0, 0.0], [0.6, 0.8]])

    def test_scalar_broadcast_accumulates(self):
        scale = Tensor(2.0, requires_grad=True)
        x = Tensor(np.ones((2, 2)))

        with ComputationTape() as tape:
            loss = ops.sum(ops.mul(x, scale))
            tape.backward(loss)

        assert float(scale.grad) == pytest.approx(4.0)

    def test_gradient_accumulates_over_reuse(self):
        x = Tensor(np.array([1.5]), requires_grad=True)

        with ComputationTape() as tape:
            loss = ops.sum(ops.add(ops.mul(x, x), x))
            tape.backward(loss)

        np.testing.assert_allclose(x.grad, [4.0])


class TestTape:
    """Recording rules of the computation tape."""

    def test_no_tape_records_nothing(self):
        x = Tensor(np.ones(3), requires_grad=True)
        out = ops.square(x)
        assert out.requires_grad is False

    def test_constants_are_not_recorded(self):
        with ComputationTape() as tape:
            ops.exp(Tensor(np.ones(3)))
        assert len(tape) == 0

    def test_tape_can_only_be_consumed_once(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with ComputationTape() as tape:
            loss = ops.sum(ops.square(x))
            tape.backward(loss)
            with pytest.raises(ContractError):
                tape.backward(loss)

    def test_backward_needs_scalar(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with ComputationTape() as tape:
            out = ops.square(x)
            with pytest.raises(ContractError, match="scalar"):
                tape.backward(out)

    def test_backward_without_tape(self):
        with pytest.raises(ContractError):
            backward(Tensor(1.0))

    def test_nested_tapes_record_innermost(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with ComputationTape() as outer:
            with ComputationTape() as inner:
                ops.square(x)
        assert len(inner) == 1
        assert len(outer) == 0


class TestErrors:
    """Shape and domain errors."""

    def test_mismatched_shapes(self):
        with pytest.raises(DimensionError):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))

    def test_matmul_shapes(self):
        with pytest.raises(DimensionError, match="matmul"):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_concat_off_axis(self):
        with pytest.raises(DimensionError):
            ops.concat(Tensor(np.ones((2, 1))), Tensor(np.ones((3, 1))), axis=1)

    def test_reshape_size(self):
        with pytest.raises(DimensionError):
            ops.reshape(Tensor(np.ones(5)), (2, 2))

    @pytest.mark.parametrize(
        "fn",
        [
            lambda: ops.log(Tensor([0.0, 1.0])),
            lambda: ops.sqrt(Tensor([-1.0])),
            lambda: ops.div(Tensor([1.0]), Tensor([0.0])),
        ],
        ids=["log", "sqrt", "div"],
    )
    def test_domain_errors(self, fn):
        with pytest.raises(DomainError):
            fn()

    def test_unknown_elementwise(self):
        with pytest.raises(ContractError, match="Unknown"):
            ops.elementwise("tanh", Tensor([1.0]))

    def test_elementwise_dispatch(self):
        out = ops.elementwise("sub", Tensor([3.0]), Tensor([1.0]))
        np.testing.assert_array_equal(out.values, [2.0])

    def test_softplus_is_stable(self):
        out = ops.softplus(Tensor([-800.0, 0.0, 800.0]))
        np.testing.assert_allclose(out.values, [0.0, np.log(2.0), 800.0])
        assert np.all(np.isfinite(out.values))
