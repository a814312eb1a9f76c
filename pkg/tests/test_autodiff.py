import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svdd_engine import autodiff as ad
from svdd_engine.autodiff import Tensor
from svdd_engine.errors import (
    ConfigError,
    ContractError,
    DegenerateInputError,
    DimensionError,
)

from gradcheck import check_op_grad

RNG = np.random.default_rng(1234)


def uniform(shape, lo=-1.0, hi=1.0, rng=RNG):
    return rng.uniform(lo, hi, size=shape)


class TestMatmul:
    def test_identity(self):
        eye = np.eye(2)
        out = ad.matmul(Tensor(eye), Tensor(eye))
        np.testing.assert_array_equal(out.data, eye)

    def test_hand_multiplication(self):
        out = ad.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[0.0], [1.0]]))
        np.testing.assert_array_equal(out.data, [[2.0], [4.0]])

    def test_zero_annihilator(self):
        out = ad.matmul(Tensor(np.zeros((3, 2))), Tensor(uniform((2, 4))))
        np.testing.assert_array_equal(out.data, np.zeros((3, 4)))

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
            ad.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


class TestConv1d:
    def test_sliding_window_sum(self):
        x = np.ones((1, 5, 1))
        w = np.ones((3, 1, 1))
        out = ad.conv1d(Tensor(x), Tensor(w), Tensor(np.zeros(1)))
        np.testing.assert_array_equal(out.data[0, :, 0], [3.0, 3.0, 3.0])

    def test_delta_kernel_crops(self):
        x = uniform((2, 7, 1))
        w = np.zeros((3, 1, 1))
        w[1, 0, 0] = 1.0  # identity filter
        out = ad.conv1d(Tensor(x), Tensor(w), Tensor(np.zeros(1)))
        np.testing.assert_allclose(out.data, x[:, 1:-1, :])

    def test_bias_only(self):
        x = uniform((1, 6, 2))
        w = np.zeros((3, 2, 4))
        out = ad.conv1d(Tensor(x), Tensor(w), Tensor(np.full(4, 5.0)))
        np.testing.assert_array_equal(out.data, np.full((1, 4, 4), 5.0))

    def test_too_short_input(self):
        with pytest.raises(DegenerateInputError):
            ad.conv1d(Tensor(np.zeros((1, 2, 1))), Tensor(np.zeros((3, 1, 1))),
                      Tensor(np.zeros(1)))


class TestMaxpool:
    def test_pairwise_max(self):
        x = np.array([1.0, 3.0, 2.0, 5.0]).reshape(1, 4, 1)
        out = ad.maxpool1d(Tensor(x))
        np.testing.assert_array_equal(out.data[0, :, 0], [3.0, 5.0])

    def test_tie_routes_gradient_to_first(self):
        x = Tensor(np.full((1, 4, 1), 2.0), requires_grad=True)
        out = ad.sum_all(ad.maxpool1d(x))
        out.backward()
        np.testing.assert_array_equal(x.grad[0, :, 0], [1.0, 0.0, 1.0, 0.0])

    def test_odd_length_truncation(self):
        x = np.array([9.0, 0.0, 0.0, 0.0, 7.0]).reshape(1, 5, 1)
        out = ad.maxpool1d(Tensor(x))
        np.testing.assert_array_equal(out.data[0, :, 0], [9.0, 0.0])

    def test_degenerate_length(self):
        with pytest.raises(DegenerateInputError):
            ad.maxpool1d(Tensor(np.zeros((1, 1, 1))))


class TestDense:
    def test_identity_weights(self):
        x = uniform((3, 4))
        out = ad.dense(Tensor(x), Tensor(np.eye(4)), Tensor(np.zeros(4)))
        np.testing.assert_allclose(out.data, x)

    def test_bias_passthrough(self):
        b = uniform((5,))
        out = ad.dense(Tensor(np.zeros((3, 2))), Tensor(np.zeros((2, 5))), Tensor(b))
        np.testing.assert_allclose(out.data, np.tile(b, (3, 1)))

    def test_hand_oracle(self):
        x = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]])
        w = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        b = np.array([0.1, -0.2])
        out = ad.dense(Tensor(x), Tensor(w), Tensor(b))
        np.testing.assert_allclose(out.data, x @ w + b)


class TestActivations:
    def test_sigmoid_symmetry_point(self):
        assert ad.sigmoid(Tensor(0.0)).item() == 0.5

    def test_softmax_uniform(self):
        out = ad.softmax(Tensor([[3.7, 3.7]]))
        np.testing.assert_allclose(out.data, [[0.5, 0.5]])

    def test_dropout_zero_rate_is_identity(self):
        x = Tensor(uniform((4, 5)))
        assert ad.dropout(x, 0.0, training=True) is x

    def test_dropout_inference_is_identity(self):
        x = Tensor(uniform((4, 5)))
        assert ad.dropout(x, 0.5, training=False) is x

    def test_dropout_bad_rate(self):
        with pytest.raises(ConfigError):
            ad.dropout(Tensor(uniform((2, 2))), 1.0, training=True)

    def test_dropout_scaling(self):
        rng = np.random.default_rng(7)
        x = Tensor(np.ones((1000, 10)))
        out = ad.dropout(x, 0.4, training=True, rng=rng)
        survivors = out.data[out.data != 0.0]
        np.testing.assert_allclose(survivors, 1.0 / 0.6)
        assert abs(survivors.size / out.data.size - 0.6) < 0.05


class TestBackward:
    def test_sum_gives_ones(self):
        x = Tensor(uniform((3, 4)), requires_grad=True)
        ad.sum_all(x).backward()
        np.testing.assert_array_equal(x.grad, np.ones((3, 4)))

    def test_quadratic(self):
        x = Tensor(uniform((5,)), requires_grad=True)
        ad.sum_all(ad.mul(x, x)).backward()
        np.testing.assert_allclose(x.grad, 2.0 * x.data)

    def test_non_scalar_loss_rejected(self):
        with pytest.raises(ContractError):
            Tensor(uniform((2, 2)), requires_grad=True).backward()

    def test_unused_parameter_grad_stays_none(self):
        x = Tensor(uniform((3,)), requires_grad=True)
        unused = Tensor(uniform((3,)), requires_grad=True)
        ad.sum_all(x).backward()
        assert unused.grad is None  # treated as zero by the optimizer


GRAD_TRIALS = 10  # per op; x ops below ensures > 100 primitive checks overall


class TestGradients:
    """Analytic gradients vs central finite differences, rel error < 1e-6."""

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_matmul(self, trial):
        rng = np.random.default_rng(trial)
        n, k, m = rng.integers(1, 5, size=3)
        check_op_grad(ad.matmul, [uniform((n, k), rng=rng), uniform((k, m), rng=rng)], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_dense(self, trial):
        rng = np.random.default_rng(100 + trial)
        n, d, u = rng.integers(1, 5, size=3)
        check_op_grad(ad.dense,
                      [uniform((n, d), rng=rng), uniform((d, u), rng=rng),
                       uniform((u,), rng=rng)], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_conv1d(self, trial):
        rng = np.random.default_rng(200 + trial)
        n = int(rng.integers(1, 3))
        length = int(rng.integers(3, 8))
        ci, co = rng.integers(1, 4, size=2)
        check_op_grad(ad.conv1d,
                      [uniform((n, length, ci), rng=rng),
                       uniform((3, ci, co), rng=rng),
                       uniform((co,), rng=rng)], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_maxpool(self, trial):
        rng = np.random.default_rng(300 + trial)
        n = int(rng.integers(1, 3))
        length = int(rng.integers(2, 9))
        c = int(rng.integers(1, 4))
        # distinct values keep the argmax stable under the FD perturbation
        vals = rng.permutation(n * length * c) / (n * length * c) * 2.0 - 1.0
        check_op_grad(ad.maxpool1d, [vals.reshape(n, length, c)], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_relu(self, trial):
        rng = np.random.default_rng(400 + trial)
        x = uniform((4, 5), rng=rng)
        x[np.abs(x) < 0.05] = 0.1  # keep clear of the kink
        check_op_grad(ad.relu, [x], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_sigmoid(self, trial):
        rng = np.random.default_rng(500 + trial)
        check_op_grad(ad.sigmoid, [uniform((4, 5), rng=rng)], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_softmax(self, trial):
        rng = np.random.default_rng(600 + trial)
        check_op_grad(ad.softmax, [uniform((4, 5), rng=rng)], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_elementwise_and_reductions(self, trial):
        rng = np.random.default_rng(700 + trial)
        a = uniform((3, 4), rng=rng)
        b = uniform((3, 4), rng=rng) + 2.0  # away from zero for div
        check_op_grad(ad.add, [a, b], rng)
        check_op_grad(ad.sub, [a, b], rng)
        check_op_grad(ad.mul, [a, b], rng)
        check_op_grad(ad.div, [a, b], rng)
        check_op_grad(ad.log, [b], rng)
        check_op_grad(ad.sqrt, [b], rng)
        check_op_grad(lambda t: ad.sum_axis(t, axis=0), [a], rng)
        check_op_grad(lambda t: ad.sum_axis(t, axis=1, keepdims=False), [a], rng)
        check_op_grad(ad.transpose, [a], rng)
        check_op_grad(ad.flatten, [uniform((2, 3, 2), rng=rng)], rng)
        check_op_grad(ad.concat, [a, uniform((3, 2), rng=rng)], rng)

    @pytest.mark.parametrize("trial", range(GRAD_TRIALS))
    def test_broadcast_add(self, trial):
        rng = np.random.default_rng(800 + trial)
        check_op_grad(ad.add, [uniform((4, 3), rng=rng), uniform((3,), rng=rng)], rng)

    def test_composite_fcn_loss(self):
        # tiny dense->relu->dense->softmax->nll chain vs finite differences
        rng = np.random.default_rng(42)

        def network(x, w1, b1, w2, b2):
            h = ad.relu(ad.dense(x, w1, b1))
            p = ad.softmax(ad.dense(h, w2, b2))
            picks = ad.mul(p, Tensor(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])))
            return ad.sum_all(ad.log(ad.sum_axis(picks, axis=1))) * (-1.0 / 3.0)

        arrays = [uniform((3, 4), rng=rng), uniform((4, 6), rng=rng),
                  uniform((6,), rng=rng), uniform((6, 2), rng=rng),
                  uniform((2,), rng=rng)]
        from gradcheck import numerical_grad, rel_error
        tensors = [Tensor(a, requires_grad=True) for a in arrays]
        network(*tensors).backward()

        def as_scalar(*arrs):
            return network(*[Tensor(a) for a in arrs]).item()

        for i, t in enumerate(tensors):
            err = rel_error(t.grad, numerical_grad(as_scalar, arrays, i))
            assert err < 1e-6


class TestDeterminismAndShapes:
    def test_dropout_same_seed_bitwise_identical(self):
        x = uniform((8, 8))
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(99)
            t = Tensor(x, requires_grad=True)
            out = ad.dropout(t, 0.3, training=True, rng=rng)
            ad.sum_all(out).backward()
            runs.append((out.data.copy(), t.grad.copy()))
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        np.testing.assert_array_equal(runs[0][1], runs[1][1])

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 6), k=st.integers(1, 6), m=st.integers(1, 6))
    def test_matmul_shape(self, n, k, m):
        out = ad.matmul(Tensor(np.zeros((n, k))), Tensor(np.zeros((k, m))))
        assert out.shape == (n, m)

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 4), length=st.integers(3, 16),
           ci=st.integers(1, 3), co=st.integers(1, 3))
    def test_conv_and_pool_shapes(self, n, length, ci, co):
        out = ad.conv1d(Tensor(np.zeros((n, length, ci))),
                        Tensor(np.zeros((3, ci, co))), Tensor(np.zeros(co)))
        assert out.shape == (n, length - 2, ci and co)
        if length >= 2:
            pooled = ad.maxpool1d(Tensor(np.zeros((n, length, ci))))
            assert pooled.shape == (n, length // 2, ci)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 5), d=st.integers(1, 5), u=st.integers(1, 5))
    def test_dense_shape(self, n, d, u):
        out = ad.dense(Tensor(np.zeros((n, d))), Tensor(np.zeros((d, u))),
                       Tensor(np.zeros(u)))
        assert out.shape == (n, u)
