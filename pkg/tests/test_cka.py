import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from svdd_engine import cka as cka_mod
from svdd_engine.autodiff import Tensor
from svdd_engine.cka import (
    GramMatrix,
    center_gram,
    cka,
    cka_loss,
    cka_t,
    gram_matrix,
    hsic,
)
from svdd_engine.errors import (
    ContractError,
    DegenerateBatchError,
    DimensionError,
    NumericError,
)

from gradcheck import numerical_grad, rel_error


def explicit_hkh(k: np.ndarray) -> np.ndarray:
    """From-definition centering via the H K H triple product."""
    n = k.shape[0]
    h = np.eye(n) - np.ones((n, n)) / n
    return h @ k @ h


def cka_from_definition(x: np.ndarray, y: np.ndarray) -> float:
    """Oracle built directly from the defining equations with explicit H."""
    kc = explicit_hkh(x @ x.T)
    lc = explicit_hkh(y @ y.T)
    hxy = np.trace(kc @ lc)
    hxx = np.trace(kc @ kc)
    hyy = np.trace(lc @ lc)
    return hxy / np.sqrt(hxx * hyy)


class TestGram:
    def test_orthonormal_rows(self):
        out = gram_matrix(np.eye(2))
        np.testing.assert_array_equal(out.values, np.eye(2))
        assert not out.centered

    def test_zeros(self):
        np.testing.assert_array_equal(gram_matrix(np.zeros((3, 2))).values,
                                      np.zeros((3, 3)))

    def test_hand_dot_products(self):
        out = gram_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_array_equal(out.values, [[5.0, 11.0], [11.0, 25.0]])

    def test_nonfinite_rejected(self):
        with pytest.raises(NumericError):
            gram_matrix(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_psd_rayleigh_quotients(self):
        rng = np.random.default_rng(5)
        k = gram_matrix(rng.standard_normal((6, 4))).values
        for _ in range(20):
            v = rng.standard_normal(6)
            assert v @ k @ v >= -1e-9


class TestCenterGram:
    def test_constant_kernel_centers_to_zero(self):
        out = center_gram(GramMatrix(np.ones((3, 3))))
        np.testing.assert_allclose(out.values, np.zeros((3, 3)), atol=1e-12)

    def test_already_centered_unchanged(self):
        k = explicit_hkh(np.array([[2.0, 1.0], [1.0, 3.0]]))
        out = center_gram(GramMatrix(k))
        np.testing.assert_allclose(out.values, k, atol=1e-12)

    def test_matches_triple_product(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 4))
        k = a + a.T
        out = center_gram(GramMatrix(k))
        np.testing.assert_allclose(out.values, explicit_hkh(k), atol=1e-12)

    def test_row_col_sums_near_zero(self):
        rng = np.random.default_rng(4)
        k = gram_matrix(rng.standard_normal((8, 3))).values
        out = center_gram(GramMatrix(k))
        assert np.abs(out.values.sum(axis=0)).max() < 1e-6
        assert np.abs(out.values.sum(axis=1)).max() < 1e-6

    def test_asymmetric_rejected(self):
        bad = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ContractError):
            center_gram(GramMatrix(bad))


class TestHsic:
    def test_zero_matrix(self):
        z = GramMatrix(np.zeros((3, 3)), centered=True)
        k = center_gram(gram_matrix(np.random.default_rng(0).standard_normal((3, 2))))
        assert hsic(z, k) == 0.0

    def test_self_is_squared_frobenius(self):
        k = center_gram(gram_matrix(np.random.default_rng(1).standard_normal((5, 3))))
        assert hsic(k, k) == pytest.approx(np.linalg.norm(k.values, "fro") ** 2)

    def test_trace_of_product_oracle(self):
        rng = np.random.default_rng(2)
        k = center_gram(gram_matrix(rng.standard_normal((6, 3))))
        l = center_gram(gram_matrix(rng.standard_normal((6, 5))))
        assert hsic(k, l) == pytest.approx(np.trace(k.values @ l.values), rel=1e-12)

    def test_size_mismatch(self):
        k = GramMatrix(np.zeros((3, 3)), centered=True)
        l = GramMatrix(np.zeros((4, 4)), centered=True)
        with pytest.raises(DimensionError):
            hsic(k, l)

    def test_uncentered_rejected(self):
        k = GramMatrix(np.eye(3), centered=False)
        with pytest.raises(ContractError):
            hsic(k, k)


class TestCka:
    def test_self_similarity(self):
        x = np.random.default_rng(0).standard_normal((8, 3))
        assert cka(x, x) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((8, 5))
        q = ortho_group.rvs(5, random_state=rng)
        assert cka(x, x @ q) == pytest.approx(1.0, abs=1e-9)

    def test_scaling_invariance(self):
        x = np.random.default_rng(2).standard_normal((6, 4))
        assert cka(x, -3.7 * x) == pytest.approx(1.0, abs=1e-9)

    def test_against_definition_oracle(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((8, 3))
        y = rng.standard_normal((8, 5))
        assert cka(x, y) == pytest.approx(cka_from_definition(x, y), abs=1e-12)

    def test_degenerate_constant_features(self):
        x = np.ones((4, 3))
        y = np.random.default_rng(4).standard_normal((4, 3))
        with pytest.raises(DegenerateBatchError) as exc:
            cka(x, y)
        assert exc.value.side == "x"
        with pytest.raises(DegenerateBatchError) as exc:
            cka(y, x)
        assert exc.value.side == "y"

    def test_batch_size_mismatch(self):
        with pytest.raises(DimensionError):
            cka(np.zeros((4, 2)) + np.eye(4, 2), np.eye(5, 2))

    def test_single_row_rejected(self):
        with pytest.raises(DegenerateBatchError):
            cka(np.ones((1, 3)), np.ones((1, 3)))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 12),
           dx=st.integers(1, 6), dy=st.integers(1, 6))
    def test_symmetry_and_range(self, seed, n, dx, dy):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, dx))
        y = rng.standard_normal((n, dy))
        a, b = cka(x, y), cka(y, x)
        assert abs(a - b) < 1e-12
        assert 0.0 <= a <= 1.0 + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(3, 10))
    def test_permutation_equivariance(self, seed, n):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, 4))
        y = rng.standard_normal((n, 3))
        perm = rng.permutation(n)
        assert cka(x[perm], y[perm]) == pytest.approx(cka(x, y), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 64))
    def test_fast_centering_equals_explicit_hkh(self, seed, n):
        rng = np.random.default_rng(seed)
        k = gram_matrix(rng.standard_normal((n, 3))).values
        np.testing.assert_allclose(center_gram(GramMatrix(k)).values,
                                   explicit_hkh(k), atol=1e-10)


class TestCkaLoss:
    def test_self_loss_zero(self):
        x = np.random.default_rng(0).standard_normal((6, 4))
        assert cka_loss(Tensor(x), Tensor(x)).item() == pytest.approx(0.0, abs=1e-12)

    def test_matches_numpy_path(self):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal((8, 3)), rng.standard_normal((8, 5))
        assert cka_t(Tensor(x), Tensor(y)).item() == pytest.approx(cka(x, y), abs=1e-12)

    def test_orthogonal_centered_grams_give_loss_one(self):
        # features varying on disjoint sample pairs: the centered Gram of x
        # lives on rows {0,1}, that of y on rows {2,3}; trace(Kc Lc) = 0
        x = np.array([[1.0], [-1.0], [0.0], [0.0]])
        y = np.array([[0.0], [0.0], [1.0], [-1.0]])
        kc = explicit_hkh(x @ x.T)
        lc = explicit_hkh(y @ y.T)
        assert np.trace(kc @ lc) == pytest.approx(0.0, abs=1e-12)
        oracle = 1.0 - cka_from_definition(x, y)
        loss = cka_loss(Tensor(x), Tensor(y)).item()
        assert loss == pytest.approx(oracle, abs=1e-12)
        assert loss == pytest.approx(1.0, abs=1e-9)

    def test_gradient_vs_finite_differences(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((5, 3))
        y = rng.standard_normal((5, 4))
        tx, ty = Tensor(x, requires_grad=True), Tensor(y, requires_grad=True)
        cka_loss(tx, ty).backward()

        def as_scalar(xa, ya):
            return cka_loss(Tensor(xa), Tensor(ya)).item()

        assert rel_error(tx.grad, numerical_grad(as_scalar, [x, y], 0)) < 1e-5
        assert rel_error(ty.grad, numerical_grad(as_scalar, [x, y], 1)) < 1e-5

    def test_degenerate_propagates(self):
        with pytest.raises(DegenerateBatchError):
            cka_loss(Tensor(np.ones((4, 2))), Tensor(np.eye(4, 2)))
