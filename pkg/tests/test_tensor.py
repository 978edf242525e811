import numpy as np
import pytest

from conftest import gradcheck
from regforge import tensor as T
from regforge.tensor import Parameter, Tensor


class TestMatmul:
    def test_identity(self, rng):
        m = rng.standard_normal((3, 3))
        out = T.matmul(Tensor(np.eye(3)), Tensor(m))
        assert np.array_equal(out.data, m)

    def test_hand_case(self):
        out = T.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[0.0], [1.0]]))
        assert np.array_equal(out.data, [[2.0], [4.0]])

    def test_against_triple_loop(self, rng):
        a = rng.standard_normal((5, 7))
        b = rng.standard_normal((7, 2))
        expected = np.zeros((5, 2))
        for i in range(5):
            for j in range(2):
                for k in range(7):
                    expected[i, j] += a[i, k] * b[k, j]
        out = T.matmul(Tensor(a), Tensor(b))
        assert np.abs(out.data - expected).max() < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            T.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))

    def test_batched(self, rng):
        a = rng.standard_normal((4, 2, 3, 5))
        b = rng.standard_normal((4, 2, 5, 6))
        out = T.matmul(Tensor(a), Tensor(b))
        assert np.allclose(out.data, a @ b)


class TestSoftmax:
    def test_uniform(self):
        out = T.softmax(Tensor([0.0, 0.0, 0.0]), axis=0)
        assert np.abs(out.data - 1 / 3).max() < 1e-15

    def test_masked_key(self):
        out = T.softmax(Tensor([0.0, -1e9]), axis=0)
        assert abs(out.data[0] - 1.0) < 1e-12
        assert out.data[1] < 1e-12

    def test_against_exp_sum(self, rng):
        x = rng.standard_normal(4)
        expected = np.exp(x) / np.exp(x).sum()
        out = T.softmax(Tensor(x), axis=0)
        assert np.abs(out.data - expected).max() < 1e-14

    def test_sums_to_one(self, rng):
        x = rng.standard_normal((6, 9)) * 10
        out = T.softmax(Tensor(x), axis=1)
        assert np.abs(out.data.sum(axis=1) - 1.0).max() < 1e-12

    def test_shift_invariance(self, rng):
        x = rng.standard_normal(5)
        a = T.softmax(Tensor(x), axis=0).data
        b = T.softmax(Tensor(x + 7.25), axis=0).data
        assert np.abs(a - b).max() < 1e-12


class TestBackward:
    def test_sum_gives_ones(self):
        p = Tensor(np.array([3.0, -1.0, 2.0]), requires_grad=True)
        p.sum().backward()
        assert np.array_equal(p.grad, np.ones(3))

    def test_quadratic(self):
        p = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        (p * p).sum().backward()
        assert np.allclose(p.grad, [2.0, 4.0])

    def test_non_scalar_loss_rejected(self):
        p = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ValueError):
            (p * 2).backward()

    def test_grad_accumulates_through_reuse(self):
        p = Tensor(np.array([2.0]), requires_grad=True)
        (p * p + p).sum().backward()  # d/dp (p^2 + p) = 2p + 1
        assert np.allclose(p.grad, [5.0])

    def test_no_grad_blocks_tape(self):
        p = Tensor(np.ones(2), requires_grad=True)
        with T.no_grad():
            out = (p * 3).sum()
        assert not out.requires_grad


class TestGradOracle:
    """Central finite differences (h=1e-5) against every exported op."""

    def test_arithmetic(self, rng):
        a = rng.standard_normal((4, 5))
        b = rng.standard_normal((4, 5)) + 3.0
        gradcheck(lambda t: ((t[0] + t[1]) * t[0] - t[1] * 0.37).sum(), [a, b])
        gradcheck(lambda t: (t[0] * t[1]).sum(), [a, b])
        gradcheck(lambda t: (t[0] / t[1]).sum(), [a, b])
        gradcheck(lambda t: (t[0] ** 3).sum(), [a])

    def test_broadcasting(self, rng):
        a = rng.standard_normal((4, 5))
        b = rng.standard_normal((5,))
        gradcheck(lambda t: (t[0] * t[1] + t[1]).sum(), [a, b])

    def test_matmul(self, rng):
        a = rng.standard_normal((4, 6))
        b = rng.standard_normal((6, 3))
        gradcheck(lambda t: T.matmul(t[0], t[1]).sum(), [a, b])

    def test_matmul_batched(self, rng):
        a = rng.standard_normal((3, 4, 5))
        b = rng.standard_normal((3, 5, 2))
        gradcheck(lambda t: (T.matmul(t[0], t[1]) ** 2).sum(), [a, b])

    def test_matmul_broadcast_weight(self, rng):
        a = rng.standard_normal((3, 4, 5))
        w = rng.standard_normal((5, 2))
        gradcheck(lambda t: (T.matmul(t[0], t[1]) ** 2).sum(), [a, w])

    def test_unary(self, rng):
        x = rng.standard_normal((3, 7))
        pos = np.abs(x) + 0.5
        gradcheck(lambda t: T.exp(t[0]).sum(), [x])
        gradcheck(lambda t: T.log(t[0]).sum(), [pos])
        gradcheck(lambda t: T.sqrt(t[0]).sum(), [pos])
        gradcheck(lambda t: T.absolute(t[0]).sum(), [x])
        gradcheck(lambda t: T.tanh(t[0]).sum(), [x])
        gradcheck(lambda t: T.gelu(t[0]).sum(), [x])
        gradcheck(lambda t: T.leaky_relu(t[0]).sum(), [x])
        gradcheck(lambda t: T.clip_min(t[0], 0.25).sum(), [pos])

    def test_softmax(self, rng):
        x = rng.standard_normal((5, 6))
        gradcheck(lambda t: (T.softmax(t[0], axis=1) * np.arange(6)).sum(), [x])

    def test_reductions(self, rng):
        x = rng.standard_normal((4, 6))
        gradcheck(lambda t: (t[0].sum(axis=0) ** 2).sum(), [x])
        gradcheck(lambda t: (t[0].mean(axis=1) ** 2).sum(), [x])
        gradcheck(lambda t: (t[0].max(axis=1) ** 2).sum(), [x])
        gradcheck(lambda t: (t[0].max(axis=0, keepdims=True) * t[0]).sum(), [x])

    def test_shaping(self, rng):
        x = rng.standard_normal((4, 6))
        gradcheck(lambda t: (t[0].reshape((2, 12)) ** 2).sum(), [x])
        gradcheck(lambda t: (t[0].transpose((1, 0)) * np.arange(4)).sum(), [x])
        gradcheck(lambda t: (T.roll(t[0], (1, 2), (0, 1)) * np.arange(6)).sum(), [x])
        gradcheck(lambda t: (t[0][1:3, ::2] ** 2).sum(), [x])

    def test_concat_stack_gather(self, rng):
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((2, 4))
        gradcheck(lambda t: (T.concat([t[0], t[1]], axis=0) ** 2).sum(), [a, b])
        gradcheck(lambda t: (T.stack([t[0], t[0] * 2], axis=0) ** 2).sum(), [a])
        idx = np.array([[0, 2], [1, 1]])
        gradcheck(lambda t: (T.gather(t[0], idx) ** 3).sum(), [a])

    def test_where_mask(self, rng):
        x = rng.standard_normal((4, 4))
        m = (rng.random((4, 4)) > 0.5).astype(float)
        gradcheck(lambda t: (T.where_mask(m, t[0]) * x).sum(), [x])


class TestDeterminism:
    def test_same_inputs_same_outputs(self, rng):
        x = rng.standard_normal((8, 8))
        a = T.softmax(T.matmul(Tensor(x), Tensor(x.T)), axis=1).data
        b = T.softmax(T.matmul(Tensor(x), Tensor(x.T)), axis=1).data
        assert np.array_equal(a, b)

    def test_dropout_eval_identity(self, rng):
        x = Tensor(rng.standard_normal((5, 5)))
        out = T.dropout(x, 0.5, rng, training=False)
        assert out is x

    def test_dropout_scales(self):
        x = Tensor(np.ones((1000,)))
        out = T.dropout(x, 0.25, np.random.default_rng(0), training=True)
        kept = out.data[out.data > 0]
        assert np.allclose(kept, 1 / 0.75)


class TestParameter:
    def test_grad_flows(self):
        p = Parameter("w", np.array([1.0, 2.0]))
        (p.tensor * p.tensor).sum().backward()
        assert np.allclose(p.grad, [2.0, 4.0])
