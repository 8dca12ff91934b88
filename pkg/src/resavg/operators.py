"""Closed-form maximally monotone operators and their resolvents.

Every model here can evaluate ``J_{gamma A}(x) = (Id + gamma A)^{-1}(x)``
exactly.  The weighted average of resolvents ``J_A = sum_i lam_i J_{A_i}``
is evaluated directly; the operator ``A`` itself is never formed.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

SUM_TOL = 1e-12
SYM_TOL = 1e-12
PSD_TOL = 1e-10
FIRM_SLACK = 1e-10


class DimensionError(ValueError):
    """Raised when vector or operator dimensions do not agree."""


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float array, optionally checking its length."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a nonempty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {v.size}")
    return v


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


# --------------------------------------------------------------------------
# Weights
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Weights:
    """Convex coefficients ``lam`` in ]0,1[ summing to one, with ``mu = 1 - lam``."""

    lam: np.ndarray
    mu: np.ndarray = field(init=False)

    def __post_init__(self):
        lam = _frozen(np.atleast_1d(self.lam))
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("need at least two weights")
        if not np.all((lam > 0) & (lam < 1)):
            raise ValueError("every weight must lie strictly between 0 and 1")
        if abs(lam.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"weights sum to {lam.sum()!r}, not 1")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", _frozen(1.0 - lam))

    @classmethod
    def equal(cls, m: int) -> "Weights":
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def parse(cls, text: str) -> "Weights":
        """Parse ``"0.5,0.25,0.25"`` or ``"1/3,2/3"``."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        return cls([float(Fraction(p)) for p in parts])

    @property
    def m(self) -> int:
        return self.lam.size

    @property
    def is_equal(self) -> bool:
        return bool(np.all(np.abs(self.lam - 1.0 / self.m) <= 1e-15))

    def to_list(self) -> list[float]:
        return self.lam.tolist()

    def __eq__(self, other):
        return isinstance(other, Weights) and np.array_equal(self.lam, other.lam)

    def __repr__(self):
        return f"Weights({self.lam.tolist()})"


# --------------------------------------------------------------------------
# Operator models
# --------------------------------------------------------------------------

class OperatorModel:
    """Base class for maximally monotone operators with exact resolvents."""

    variant: str = ""
    dim: int | None = None  # None means "any dimension"

    def resolve(self, gamma: float, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @property
    def is_normal_cone(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class Zero(OperatorModel):
    variant = "Zero"

    def resolve(self, gamma, x):
        return np.array(x, dtype=float)

    def to_json(self):
        return {"variant": self.variant}


@dataclass(frozen=True, eq=False)
class Translation(OperatorModel):
    """The constant operator ``A x = {c}``."""

    c: np.ndarray
    variant = "Translation"

    def __post_init__(self):
        object.__setattr__(self, "c", _frozen(as_vector(self.c)))

    @property
    def dim(self):
        return self.c.size

    def resolve(self, gamma, x):
        return x - gamma * self.c

    def to_json(self):
        return {"variant": self.variant, "c": self.c.tolist()}


@dataclass(frozen=True, eq=False)
class _HalfSpaceLike(OperatorModel):
    a: np.ndarray
    b: float

    def __post_init__(self):
        a = _frozen(as_vector(self.a))
        if not np.any(a):
            raise ValueError("normal vector a must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "_aa", float(a @ a))

    @property
    def dim(self):
        return self.a.size

    @property
    def is_normal_cone(self):
        return True

    def to_json(self):
        return {"variant": self.variant, "a": self.a.tolist(), "b": self.b}


class NormalConeHyperplane(_HalfSpaceLike):
    """Normal cone of ``{x : <a,x> = b}``; the resolvent is the projection."""

    variant = "NormalConeHyperplane"

    def resolve(self, gamma, x):
        return x + ((self.b - self.a @ x) / self._aa) * self.a


class NormalConeHalfspace(_HalfSpaceLike):
    """Normal cone of ``{x : <a,x> <= b}``."""

    variant = "NormalConeHalfspace"

    def resolve(self, gamma, x):
        excess = self.a @ x - self.b
        if excess <= 0:
            return np.array(x, dtype=float)
        return x - (excess / self._aa) * self.a


@dataclass(frozen=True, eq=False)
class NormalConeBox(OperatorModel):
    lo: np.ndarray
    hi: np.ndarray
    variant = "NormalConeBox"

    def __post_init__(self):
        lo, hi = _frozen(as_vector(self.lo)), _frozen(as_vector(self.hi))
        if lo.shape != hi.shape:
            raise DimensionError("box bounds differ in dimension")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    @property
    def is_normal_cone(self):
        return True

    def resolve(self, gamma, x):
        return np.clip(x, self.lo, self.hi)

    def to_json(self):
        return {"variant": self.variant, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class LinearPSD(OperatorModel):
    """Linear monotone operator ``x -> M x`` with ``M`` symmetric PSD.

    Cholesky factors of ``I + gamma M`` are cached per ``gamma``.
    """

    M: np.ndarray
    variant = "LinearPSD"

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
            raise DimensionError(f"M must be square, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("M must be finite")
        if np.max(np.abs(M - M.T)) > SYM_TOL:
            raise ValueError("M is not symmetric")
        if np.linalg.eigvalsh(M).min() < -PSD_TOL:
            raise ValueError("M is not positive semidefinite")
        object.__setattr__(self, "M", _frozen(M))
        object.__setattr__(self, "_factors", {})
        object.__setattr__(self, "_lock", threading.Lock())

    @property
    def dim(self):
        return self.M.shape[0]

    def _factor(self, gamma):
        with self._lock:
            fac = self._factors.get(gamma)
            if fac is None:
                try:
                    fac = sla.cho_factor(np.eye(self.dim) + gamma * self.M)
                except np.linalg.LinAlgError as exc:
                    raise ValueError("I + gamma*M is not positive definite") from exc
                self._factors[gamma] = fac
            return fac

    def resolve(self, gamma, x):
        return sla.cho_solve(self._factor(float(gamma)), x)

    def to_json(self):
        return {"variant": self.variant, "M": self.M.tolist()}


VARIANTS: dict[str, type[OperatorModel]] = {
    cls.variant: cls
    for cls in (Zero, Translation, NormalConeHyperplane, NormalConeHalfspace,
                NormalConeBox, LinearPSD)
}


def model_from_json(obj: dict) -> OperatorModel:
    obj = dict(obj)
    try:
        cls = VARIANTS[obj.pop("variant")]
    except KeyError as exc:
        raise ValueError(f"unknown or missing operator variant: {exc}") from None
    return cls(**obj)


def model_to_json(model: OperatorModel) -> dict:
    return model.to_json()


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------

def _check_model_dim(model: OperatorModel, n: int):
    if model.dim is not None and model.dim != n:
        raise DimensionError(f"{model.variant} acts on dimension {model.dim}, got {n}")


def resolve(model: OperatorModel, gamma: float, x) -> np.ndarray:
    """Return ``J_{gamma A}(x)``, the unique ``y`` with ``x in y + gamma A(y)``."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    x = as_vector(x)
    _check_model_dim(model, x.size)
    return model.resolve(gamma, x)


def _stack_hyperplanes(models):
    A = np.array([m.a for m in models])
    b = np.array([m.b for m in models])
    return A, b, np.einsum("ij,ij->i", A, A)


class AveragedResolvent:
    """Callable ``J_A = sum_i lam_i J_{A_i}`` with the model list fixed.

    When every model is a hyperplane normal cone the average is evaluated
    with two matrix-vector products instead of ``m`` separate projections.
    """

    def __init__(self, models: Sequence[OperatorModel], w: Weights):
        models = tuple(models)
        if len(models) != w.m:
            raise DimensionError(f"{len(models)} models but {w.m} weights")
        dims = {m.dim for m in models if m.dim is not None}
        if len(dims) > 1:
            raise DimensionError(f"models act on different dimensions {sorted(dims)}")
        self.models = models
        self.weights = w
        self.dim = dims.pop() if dims else None
        self._stack = None
        if all(type(m) is NormalConeHyperplane for m in models):
            A, b, aa = _stack_hyperplanes(models)
            self._stack = (A, w.lam * b / aa, w.lam / aa)

    def __call__(self, x) -> np.ndarray:
        return self.apply(as_vector(x, self.dim))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Evaluate without validating ``x`` (hot loops)."""
        if self._stack is not None:
            A, lb, la = self._stack
            return x + A.T @ (lb - la * (A @ x))
        out = np.zeros_like(x)
        for lam, model in zip(self.weights.lam, self.models):
            out += lam * model.resolve(1.0, x)
        return out


def averaged_resolvent(models: Sequence[OperatorModel], w: Weights, x) -> np.ndarray:
    """Evaluate ``sum_i lam_i J_{A_i}(x)``."""
    return AveragedResolvent(models, w)(x)


@dataclass(frozen=True)
class FirmReport:
    violations: int
    worst_margin: float


def firm_margins(T: Callable[[np.ndarray], np.ndarray], pairs) -> np.ndarray:
    """Slack ``<x-y, Tx-Ty> - ||Tx-Ty||^2`` for each pair; nonnegative if firm."""
    out = []
    for x, y in pairs:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise DimensionError("pair members differ in shape")
        d = T(x) - T(y)
        out.append(np.vdot(x - y, d) - np.vdot(d, d))
    return np.array(out)


def check_firm_nonexpansive(model: OperatorModel, gamma: float, pairs) -> FirmReport:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one pair")
    margins = firm_margins(lambda v: resolve(model, gamma, v), pairs)
    return FirmReport(
        violations=int(np.sum(margins < -FIRM_SLACK)),
        worst_margin=float(margins.min()),
    )
