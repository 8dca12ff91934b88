"""Fixed-point iteration drivers for J_A, J o R and the sequential map T."""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .operators import AveragedResolvent, DimensionError, OperatorModel, Weights, as_vector
from .product_space import ProductProblem, _apply_J, _apply_T

log = logging.getLogger(__name__)

HEURISTIC_TAG = "heuristic: no convergence guarantee"
UNPROVEN_TAG = "outside proven theory: unequal weights"
M2_TAG = "m=2 override: iterates may cycle without converging"


class MetricUndefinedError(ValueError):
    """The starting point is already fixed, so the dB error has no reference."""


class Outcome(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class StoppingRule:
    max_iters: int = 10_000
    step_tol: float = 1e-10
    divergence_threshold: float = 1e12

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.step_tol >= 0:
            raise ValueError("step_tol must be nonnegative")
        if not self.divergence_threshold > 0:
            raise ValueError("divergence_threshold must be positive")


class Record(NamedTuple):
    iter: int
    step_norm: float
    iterate_norm: float
    db_error: float


@dataclass
class IterationTrace:
    """Per-iteration diagnostics of one run.

    ``step_norm[0]`` is 0 by convention (no step precedes ``x_0``).  When the
    starting residual is zero the dB metric is undefined and every record
    after the first carries NaN.
    """

    step_norm: np.ndarray
    iterate_norm: np.ndarray
    db_error: np.ndarray
    outcome: Outcome
    final: np.ndarray
    tags: list[str] = field(default_factory=list)
    iterates: list[np.ndarray] | None = None

    @property
    def records(self) -> list[Record]:
        return [Record(i, float(s), float(r), float(d)) for i, (s, r, d) in
                enumerate(zip(self.step_norm, self.iterate_norm, self.db_error))]

    @property
    def iterations(self) -> int:
        return len(self.step_norm) - 1

    @property
    def heuristic(self) -> bool:
        return HEURISTIC_TAG in self.tags

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "step_norm", "iterate_norm", "db_error"])
        for r in self.records:
            w.writerow([r.iter, repr(r.step_norm), repr(r.iterate_norm), repr(r.db_error)])
        buf.write(f"# outcome={self.outcome.value}\n")
        for tag in self.tags:
            buf.write(f"# tag={tag}\n")
        return buf.getvalue()


def read_trace_csv(text: str) -> tuple[list[Record], Outcome, list[str]]:
    """Parse the output of :meth:`IterationTrace.to_csv`."""
    rows, outcome, tags = [], None, []
    lines = text.splitlines()
    if not lines or lines[0] != "iter,step_norm,iterate_norm,db_error":
        raise ValueError("missing trace header")
    for line in lines[1:]:
        if line.startswith("# outcome="):
            outcome = Outcome(line.split("=", 1)[1])
        elif line.startswith("# tag="):
            tags.append(line.split("=", 1)[1])
        elif line:
            i, s, r, d = line.split(",")
            rows.append(Record(int(i), float(s), float(r), float(d)))
    if outcome is None:
        raise ValueError("missing outcome footer")
    return rows, outcome, tags


# --------------------------------------------------------------------------
# dB error
# --------------------------------------------------------------------------

def relative_error_db(models: Sequence[OperatorModel], w: Weights, x0, xn) -> float:
    """``10 log10(||J_A xn - xn||^2 / ||J_A x0 - x0||^2)``."""
    J = AveragedResolvent(models, w)
    x0 = as_vector(x0, J.dim)
    xn = as_vector(xn, x0.size)
    r0 = J(x0) - x0
    r0_sq = float(r0 @ r0)
    if r0_sq == 0.0:
        raise MetricUndefinedError("x0 is already a fixed point of J_A")
    rn = J(xn) - xn
    rn_sq = float(rn @ rn)
    if rn_sq == 0.0:
        return -math.inf
    return 10.0 * math.log10(rn_sq / r0_sq)


# --------------------------------------------------------------------------
# Drivers
# --------------------------------------------------------------------------

def _norm(v: np.ndarray) -> float:
    return math.sqrt(float(np.vdot(v, v)))


def _run(step: Callable[[np.ndarray], np.ndarray],
         residual_sq: Callable[[np.ndarray], float] | None,
         x0: np.ndarray,
         rule: StoppingRule,
         keep_iterates: bool,
         on_iterate: Callable[[np.ndarray], None] | None = None) -> IterationTrace:
    """Shared iteration loop.

    ``residual_sq=None`` means the residual at ``x_n`` is the next step
    ``x_{n+1} - x_n`` itself (true when iterating J_A), which saves one
    evaluation per iteration.
    """
    x = x0
    steps, norms = [0.0], [_norm(x)]
    res = [] if residual_sq is None else [residual_sq(x)]
    iterates = [x] if keep_iterates else None
    if on_iterate:
        on_iterate(x)
    outcome = Outcome.MAX_ITERS
    for _ in range(rule.max_iters):
        x_new = step(x)
        s = _norm(x_new - x)
        nrm = _norm(x_new)
        x = x_new
        steps.append(s)
        norms.append(nrm)
        diverged = not math.isfinite(nrm) or nrm >= rule.divergence_threshold
        if residual_sq is None:
            res.append(s * s)
        elif diverged:
            res.append(math.nan)
        else:
            res.append(residual_sq(x))
        if keep_iterates:
            iterates.append(x)
        if on_iterate:
            on_iterate(x)
        if diverged:
            outcome = Outcome.DIVERGED
            break
        if s <= rule.step_tol:
            outcome = Outcome.CONVERGED
            break
    if residual_sq is None:
        if outcome is Outcome.DIVERGED:
            res.append(math.nan)
        else:
            r = step(x) - x
            res.append(float(np.vdot(r, r)))
    res = np.array(res)
    r0 = res[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 10.0 * np.log10(res / r0) if r0 > 0 else np.full_like(res, np.nan)
    db[0] = 0.0
    log.debug("run finished: %s after %d iterations", outcome.value, len(steps) - 1)
    return IterationTrace(np.array(steps), np.array(norms), db, outcome, x,
                          iterates=iterates)


def iterate_averaged_resolvent(models: Sequence[OperatorModel], w: Weights, x0,
                               rule: StoppingRule = StoppingRule(),
                               keep_iterates: bool = False) -> IterationTrace:
    """Iterate ``x_{n+1} = J_A x_n``."""
    J = AveragedResolvent(models, w)
    x0 = as_vector(x0, J.dim)
    return _run(J.apply, None, x0, rule, keep_iterates)


def _check_product_start(p: ProductProblem, x0) -> np.ndarray:
    X = p.check(x0)
    if not np.all(np.isfinite(X)):
        raise ValueError("starting point must be finite")
    return X


def _product_run(p, X0, step, rule, keep_iterates):
    J_A, lam = p.J_A, p.weights.lam
    projected = []

    def residual_sq(X):
        y = lam @ X
        r = J_A.apply(y) - y
        return float(r @ r)

    trace = _run(step, residual_sq, X0, rule, keep_iterates,
                 on_iterate=lambda X: projected.append(lam @ X))
    return trace, projected


def iterate_product(p: ProductProblem, x0, rule: StoppingRule = StoppingRule(),
                    allow_m2: bool = False,
                    keep_iterates: bool = False) -> tuple[IterationTrace, list[np.ndarray]]:
    """Iterate ``x_{n+1} = (J o R) x_n`` in the product space.

    Also returns the projected sequence ``sum_i lam_i x_{n,i}``.  With
    ``m = 2`` the map R is a block swap and the iteration can cycle forever,
    so it is refused unless ``allow_m2`` is set.
    """
    if p.m < 3 and not allow_m2:
        raise ValueError("iterate_product needs m >= 3 (pass allow_m2=True to override)")
    X0 = _check_product_start(p, x0)
    K = p.K
    trace, projected = _product_run(p, X0, lambda X: _apply_J(p, K @ X), rule, keep_iterates)
    if p.m < 3:
        trace.tags.append(M2_TAG)
    if not p.weights.is_equal:
        trace.tags.append(UNPROVEN_TAG)
    return trace, projected


def iterate_heuristic(p: ProductProblem, x0, rule: StoppingRule = StoppingRule(),
                      keep_iterates: bool = False) -> tuple[IterationTrace, list[np.ndarray]]:
    """Iterate the sequential map ``T = J_m R_m ... J_1 R_1``."""
    X0 = _check_product_start(p, x0)
    trace, projected = _product_run(p, X0, lambda X: _apply_T(p, X), rule, keep_iterates)
    trace.tags.append(HEURISTIC_TAG)
    return trace, projected


# --------------------------------------------------------------------------
# Lipschitz probe
# --------------------------------------------------------------------------

def lipschitz_probe(F: Callable[[np.ndarray], np.ndarray],
                    pairs: Iterable[tuple[np.ndarray, np.ndarray]]) -> float:
    """Largest observed ``||F x - F y|| / ||x - y||`` (a lower bound on Lip F)."""
    best = -math.inf
    for x, y in pairs:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise DimensionError("pair members differ in shape")
        d = float(np.linalg.norm(x - y))
        if d == 0.0:
            raise ValueError("coincident pair")
        best = max(best, float(np.linalg.norm(F(x) - F(y))) / d)
    if best == -math.inf:
        raise ValueError("no pairs given")
    return best
