"""Centered Kernel Alignment with a linear kernel.

Provides a plain numpy path (standalone similarity measure) and a
differentiable alignment loss built from autodiff primitives. Centering is the
O(n^2) double mean subtraction, equivalent to the H K H triple product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import (
    ContractError,
    DegenerateBatchError,
    DimensionError,
    NumericError,
)

SYMMETRY_TOL = 1e-9
DEFAULT_EPSILON = 1e-12


@dataclass
class GramMatrix:
    """n x n symmetric kernel matrix with a centering flag."""

    values: np.ndarray
    centered: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _check_features(x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d feature matrix, got {x.shape}")
    if x.shape[0] < 2:
        raise DegenerateBatchError(
            f"{name} needs at least 2 rows for centering, got {x.shape[0]}", side=name
        )
    if not np.isfinite(x).all():
        raise NumericError(f"{name} contains non-finite values")
    return x


def gram_matrix(x: np.ndarray) -> GramMatrix:
    """Linear-kernel Gram matrix K = X X^T."""
    x = _check_features(x, "x")
    return GramMatrix(values=x @ x.T, centered=False)


def center_gram(k: GramMatrix) -> GramMatrix:
    """Remove row, column and grand means (equals H K H for symmetric K)."""
    if k.centered:
        raise ContractError("gram matrix is already centered")
    v = k.values
    if not np.allclose(v, v.T, atol=SYMMETRY_TOL, rtol=0.0):
        raise ContractError("gram matrix is not symmetric within tolerance")
    row_means = v.mean(axis=0, keepdims=True)
    col_means = v.mean(axis=1, keepdims=True)
    grand = v.mean()
    return GramMatrix(values=v - row_means - col_means + grand, centered=True)


def hsic(kc: GramMatrix, lc: GramMatrix) -> float:
    """trace(K~ L~), computed as the elementwise dot of the symmetric matrices."""
    if not (kc.centered and lc.centered):
        raise ContractError("hsic expects centered gram matrices")
    if kc.values.shape != lc.values.shape:
        raise DimensionError(
            f"hsic size mismatch: {kc.values.shape} vs {lc.values.shape}"
        )
    return float(np.sum(kc.values * lc.values))


def cka(x: np.ndarray, y: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> float:
    """Normalized HSIC similarity in [0, 1]; symmetric in its arguments."""
    x = _check_features(x, "x")
    y = _check_features(y, "y")
    if x.shape[0] != y.shape[0]:
        raise DimensionError(
            f"cka batch mismatch: {x.shape[0]} vs {y.shape[0]} rows"
        )
    kc = center_gram(gram_matrix(x))
    lc = center_gram(gram_matrix(y))
    hxx = hsic(kc, kc)
    hyy = hsic(lc, lc)
    _guard_degenerate(hxx, hyy, epsilon)
    return hsic(kc, lc) / np.sqrt(hxx * hyy)


def _guard_degenerate(hxx: float, hyy: float, epsilon: float):
    bad_x, bad_y = hxx <= epsilon, hyy <= epsilon
    if bad_x or bad_y:
        side = "both" if (bad_x and bad_y) else ("x" if bad_x else "y")
        raise DegenerateBatchError(
            f"constant features make CKA undefined (side={side}, "
            f"self-HSIC x={hxx:.3e}, y={hyy:.3e})",
            side=side,
        )


def _centered_gram_t(x: Tensor) -> Tensor:
    n = x.shape[0]
    k = ad.matmul(x, ad.transpose(x))
    row = ad.sum_axis(k, axis=0, keepdims=True) * (1.0 / n)
    col = ad.sum_axis(k, axis=1, keepdims=True) * (1.0 / n)
    grand = ad.sum_all(k) * (1.0 / (n * n))
    return k - row - col + grand


def cka_t(x: Tensor, y: Tensor, epsilon: float = DEFAULT_EPSILON) -> Tensor:
    """Differentiable CKA; gradients flow to both feature matrices."""
    _check_features(x.data, "x")
    _check_features(y.data, "y")
    if x.shape[0] != y.shape[0]:
        raise DimensionError(
            f"cka batch mismatch: {x.shape[0]} vs {y.shape[0]} rows"
        )
    kc = _centered_gram_t(x)
    lc = _centered_gram_t(y)
    hxy = ad.sum_all(ad.mul(kc, lc))
    hxx = ad.sum_all(ad.mul(kc, kc))
    hyy = ad.sum_all(ad.mul(lc, lc))
    _guard_degenerate(hxx.item(), hyy.item(), epsilon)
    return hxy / ad.sqrt(hxx * hyy)


def cka_loss(x: Tensor, y: Tensor, epsilon: float = DEFAULT_EPSILON) -> Tensor:
    """Alignment loss 1 - CKA(X, Y), in [0, 1]."""
    return 1.0 - cka_t(x, y, epsilon)
