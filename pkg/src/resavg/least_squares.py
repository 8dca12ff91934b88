"""Hyperplane systems and their least-squares / averaged-projection duality.

For unit-norm rows, ``x`` is a fixed point of ``sum_i lam_i P_i`` exactly when
it solves the normal equation of ``D A x = D b`` with ``D = diag(sqrt(lam))``.
With equal weights this is the ordinary normal equation ``A^T A x = A^T b``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .operators import DimensionError, NormalConeHyperplane, Weights, as_vector

NORM_TOL = 1e-12
AGREE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HyperplaneSystem:
    """Hyperplanes ``<a_i, x> = b_i``; ``rows`` is ``(m, n)``, ``rhs`` is ``(m,)``."""

    rows: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        A = np.array(self.rows, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        b = np.atleast_1d(np.array(self.rhs, dtype=float))
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.size or A.size == 0:
            raise DimensionError(f"rows {A.shape} and rhs {b.shape} do not match")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("system entries must be finite")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise ValueError("zero row: a_i must be nonzero")
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "rows", A)
        object.__setattr__(self, "rhs", b)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    @property
    def normalized(self) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.rows, axis=1) - 1.0) <= NORM_TOL))

    def models(self) -> list[NormalConeHyperplane]:
        return [NormalConeHyperplane(a, b) for a, b in zip(self.rows, self.rhs)]

    def project(self, i: int, x) -> np.ndarray:
        a = self.rows[i]
        return x + ((self.rhs[i] - a @ x) / (a @ a)) * a

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {"rows": self.rows.tolist(), "rhs": self.rhs.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "HyperplaneSystem":
        return cls(obj["rows"], obj["rhs"])

    def to_text(self) -> str:
        """One line ``a_1 ... a_n b`` per hyperplane."""
        return "".join(
            " ".join(repr(float(v)) for v in (*a, b)) + "\n"
            for a, b in zip(self.rows, self.rhs))

    @classmethod
    def from_text(cls, text: str) -> "HyperplaneSystem":
        data = [list(map(float, ln.split())) for ln in text.splitlines()
                if ln.strip() and not ln.lstrip().startswith("#")]
        if not data or len({len(r) for r in data}) != 1 or len(data[0]) < 2:
            raise ValueError("each line needs the same number (>= 2) of fields")
        M = np.array(data)
        return cls(M[:, :-1], M[:, -1])

    @classmethod
    def load(cls, path) -> "HyperplaneSystem":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json":
            return cls.from_json(json.loads(text))
        return cls.from_text(text)


def normalize_rows(sys: HyperplaneSystem) -> HyperplaneSystem:
    """Rescale each ``(a_i, b_i)`` by ``1 / ||a_i||``; the hyperplanes are unchanged."""
    norms = np.linalg.norm(sys.rows, axis=1)
    return HyperplaneSystem(sys.rows / norms[:, None], sys.rhs / norms)


def _require_normalized(sys: HyperplaneSystem):
    if not sys.normalized:
        raise ValueError("system rows must have unit norm (see normalize_rows)")


def _min_norm_lstsq(A, b) -> np.ndarray:
    # SVD-based LAPACK driver; returns the minimum-norm solution when rank deficient.
    return np.linalg.lstsq(A, b, rcond=None)[0]


def normal_equation_solve(sys: HyperplaneSystem) -> np.ndarray:
    """Minimum-norm solution of ``A^T A x = A^T b``."""
    return _min_norm_lstsq(sys.rows, sys.rhs)


def weighted_normal_equation_solve(sys: HyperplaneSystem, w: Weights) -> np.ndarray:
    """Minimum-norm fixed point of ``sum_i lam_i P_i`` (rows must be unit norm)."""
    _require_normalized(sys)
    if w.m != sys.m:
        raise DimensionError(f"{w.m} weights for {sys.m} hyperplanes")
    d = np.sqrt(w.lam)
    return _min_norm_lstsq(d[:, None] * sys.rows, d * sys.rhs)


@dataclass(frozen=True)
class EquivalenceReport:
    fp_residual: float
    ne_residual: float
    tol: float = AGREE_TOL

    @property
    def agree(self) -> bool:
        """Both residuals vanish, or neither does."""
        return (self.fp_residual <= self.tol) == (self.ne_residual <= self.tol)


def fixed_point_residual(sys: HyperplaneSystem, w: Weights, x) -> float:
    """``||x - sum_i lam_i P_i x||``."""
    x = as_vector(x, sys.n)
    avg = sum(lam * sys.project(i, x) for i, lam in enumerate(w.lam))
    return float(np.linalg.norm(x - avg))


def verify_fixed_point_equivalence(sys: HyperplaneSystem, w: Weights, x,
                                   tol: float = AGREE_TOL) -> EquivalenceReport:
    _require_normalized(sys)
    if w.m != sys.m:
        raise DimensionError(f"{w.m} weights for {sys.m} hyperplanes")
    x = as_vector(x, sys.n)
    DA = np.sqrt(w.lam)[:, None] * sys.rows
    Db = np.sqrt(w.lam) * sys.rhs
    ne = DA.T @ (DA @ x) - DA.T @ Db
    return EquivalenceReport(fixed_point_residual(sys, w, x), float(np.linalg.norm(ne)), tol)
