"""The product space X^m and the operators acting on it.

A product vector is stored as an ``(m, n)`` float array: row ``i`` is the
block ``x_i``.  The inner product is the Frobenius one, so ``np.vdot`` and
``np.linalg.norm`` give the product-space geometry directly.

The linear maps R, R*, R_k never materialize an ``(mn) x (mn)`` matrix; they
apply the small ``m x m`` coefficient matrix ``K`` (``K[i, j] = lam_j / mu_i``
off the diagonal, zero on it) across blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .operators import (
    AveragedResolvent,
    DimensionError,
    NormalConeHyperplane,
    OperatorModel,
    Weights,
    as_vector,
    model_from_json,
)


def as_product(x, m: int | None = None, n: int | None = None) -> np.ndarray:
    """Coerce ``x`` to an ``(m, n)`` float array and check its shape."""
    X = np.array(x, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.size == 0:
        raise DimensionError(f"product vector must be (m, n), got shape {X.shape}")
    if m is not None and X.shape[0] != m:
        raise DimensionError(f"expected {m} blocks, got {X.shape[0]}")
    if n is not None and X.shape[1] != n:
        raise DimensionError(f"expected block dimension {n}, got {X.shape[1]}")
    return X


def coefficient_matrix(w: Weights) -> np.ndarray:
    """The ``m x m`` matrix through which R acts on blocks."""
    K = w.lam[None, :] / w.mu[:, None]
    np.fill_diagonal(K, 0.0)
    return K


@dataclass(frozen=True, eq=False)
class ProductProblem:
    """Operators ``A_1..A_m`` on R^n together with their weights."""

    models: tuple[OperatorModel, ...]
    weights: Weights
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if len(self.models) != self.weights.m:
            raise DimensionError(
                f"{len(self.models)} models but {self.weights.m} weights")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        for model in self.models:
            if model.dim is not None and model.dim != self.dim:
                raise DimensionError(
                    f"{model.variant} acts on dimension {model.dim}, not {self.dim}")

    @property
    def m(self) -> int:
        return self.weights.m

    @cached_property
    def K(self) -> np.ndarray:
        return coefficient_matrix(self.weights)

    @cached_property
    def J_A(self) -> AveragedResolvent:
        return AveragedResolvent(self.models, self.weights)

    @cached_property
    def _hyperplanes(self):
        if not all(type(mo) is NormalConeHyperplane for mo in self.models):
            return None
        A = np.array([mo.a for mo in self.models])
        b = np.array([mo.b for mo in self.models])
        aa = np.einsum("ij,ij->i", A, A)
        return A, b, aa

    def check(self, x) -> np.ndarray:
        return as_product(x, self.m, self.dim)

    def to_json(self) -> dict:
        return {
            "weights": self.weights.to_list(),
            "models": [mo.to_json() for mo in self.models],
            "dim": self.dim,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ProductProblem":
        return cls(
            models=tuple(model_from_json(mo) for mo in obj["models"]),
            weights=Weights(obj["weights"]),
            dim=int(obj["dim"]),
        )


def product_to_json(x) -> list[list[float]]:
    return as_product(x).tolist()


def product_from_json(obj) -> np.ndarray:
    return as_product(obj)


def _weights_and_vector(w: Weights, x) -> np.ndarray:
    X = as_product(x)
    if X.shape[0] != w.m:
        raise DimensionError(f"{w.m} weights but {X.shape[0]} blocks")
    return X


# --------------------------------------------------------------------------
# Linear maps
# --------------------------------------------------------------------------

def apply_R(w: Weights, x) -> np.ndarray:
    """``(R x)_i = sum_{j != i} (lam_j / mu_i) x_j``."""
    X = _weights_and_vector(w, x)
    return coefficient_matrix(w) @ X


def apply_R_adjoint(w: Weights, x) -> np.ndarray:
    """``(R* x)_i = sum_{j != i} (lam_i / mu_j) x_j``."""
    X = _weights_and_vector(w, x)
    return coefficient_matrix(w).T @ X


def apply_R_k(w: Weights, k: int, x) -> np.ndarray:
    """Replace block ``k`` (0-based) by the weighted combination of the others."""
    X = _weights_and_vector(w, x).copy()
    X[k] = coefficient_matrix(w)[k] @ X
    return X


def operator_norm_R(w: Weights, tol: float = 1e-12) -> float:
    """Spectral norm of R.

    R acts as ``K (x) Id_n``, so its norm is the largest singular value of the
    ``m x m`` matrix ``K`` whatever ``n`` is.  The SVD is accurate to machine
    precision, which meets any ``tol`` not below ~1e-15.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return float(np.linalg.norm(coefficient_matrix(w), 2))


def _require_equal_weights(w: Weights):
    if w.m < 3:
        raise ValueError("the isometry decomposition needs m >= 3")
    if not w.is_equal:
        raise ValueError("the isometry decomposition is only valid for equal weights")


def averagedness_constant_R(m: int) -> float:
    return m / (2 * m - 2)


def averagedness_constant_JR(m: int) -> float:
    return 2 * m / (3 * m - 2)


def decompose_N(w: Weights, x) -> np.ndarray:
    """Isometry ``N = -Id + (2/m) L*L`` in ``R = (1 - alpha) Id + alpha N``."""
    _require_equal_weights(w)
    X = _weights_and_vector(w, x)
    s = X.sum(axis=0)
    return -X + (2.0 / w.m) * s[None, :]


# --------------------------------------------------------------------------
# Nonlinear maps
# --------------------------------------------------------------------------

def _apply_J(p: ProductProblem, X: np.ndarray) -> np.ndarray:
    hp = p._hyperplanes
    if hp is not None:
        A, b, aa = hp
        t = (b - np.einsum("ij,ij->i", A, X)) / aa
        return X + t[:, None] * A
    out = np.empty_like(X)
    for i, (model, mu) in enumerate(zip(p.models, p.weights.mu)):
        out[i] = model.resolve(1.0 / mu, X[i])
    return out


def apply_J(p: ProductProblem, x) -> np.ndarray:
    """Blockwise ``J_{mu_i^{-1} A_i}``."""
    return _apply_J(p, p.check(x))


def apply_JR(p: ProductProblem, x) -> np.ndarray:
    return _apply_J(p, p.K @ p.check(x))


def _apply_T(p: ProductProblem, X: np.ndarray) -> np.ndarray:
    X = X.copy()
    K, mu = p.K, p.weights.mu
    # Block updates are sequential: step k sees blocks already updated by 1..k-1.
    for k, model in enumerate(p.models):
        X[k] = model.resolve(1.0 / mu[k], K[k] @ X)
    return X


def apply_T(p: ProductProblem, x) -> np.ndarray:
    """``J_m R_m ... J_1 R_1``, updating blocks in index order."""
    return _apply_T(p, p.check(x))


def apply_J_k_R_k(p: ProductProblem, k: int, x) -> np.ndarray:
    X = p.check(x).copy()
    X[k] = p.models[k].resolve(1.0 / p.weights.mu[k], p.K[k] @ X)
    return X


# --------------------------------------------------------------------------
# Correspondence between S and Fix J_A
# --------------------------------------------------------------------------

def combine_L(w: Weights, x) -> np.ndarray:
    """``sum_i lam_i x_i``."""
    X = _weights_and_vector(w, x)
    return w.lam @ X


def split_L_inverse(p: ProductProblem, x) -> np.ndarray:
    """``(J_{A_i} x)_i``; lands in S whenever ``x`` is a fixed point of J_A."""
    x = as_vector(x, p.dim)
    return np.stack([model.resolve(1.0, x) for model in p.models])


def s_residual(p: ProductProblem, x) -> float:
    """Distance ``||x - (J o R) x||``; zero exactly on S."""
    X = p.check(x)
    return float(np.linalg.norm(X - _apply_J(p, p.K @ X)))


def expansion_witness(m: int, n: int, k: int = 0) -> np.ndarray:
    """Product vector with block ``k`` zero and every other block ``e_1``.

    ``R_k`` maps it onto the diagonal, raising its squared norm from
    ``m - 1`` to ``m``.
    """
    X = np.zeros((m, n))
    X[:, 0] = 1.0
    X[k] = 0.0
    return X


def diagonal(x, m: int) -> np.ndarray:
    return np.tile(as_vector(x), (m, 1))


def make_problem(models: Sequence[OperatorModel], w: Weights, dim: int | None = None) -> ProductProblem:
    if dim is None:
        dims = {mo.dim for mo in models if mo.dim is not None}
        if len(dims) != 1:
            raise DimensionError("cannot infer a single dimension from the models")
        dim = dims.pop()
    return ProductProblem(tuple(models), w, dim)
