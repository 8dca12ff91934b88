"""Benchmark harness: random hyperplane instances, averaged dB curves, plot data.

Each instance ``k`` draws its hyperplanes from a SplitMix64 stream seeded
with ``seed + k``.  Every algorithm starts from zero and runs exactly
``iters`` steps; product-space iterates are measured after projecting them
back to R^n with the weights.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .algorithms import (
    HEURISTIC_TAG,
    M2_TAG,
    UNPROVEN_TAG,
    MetricUndefinedError,
    StoppingRule,
    iterate_averaged_resolvent,
    iterate_heuristic,
    iterate_product,
)
from .least_squares import HyperplaneSystem, normalize_rows
from .operators import Weights
from .product_space import ProductProblem
from .rng import MASK64, SplitMix64

log = logging.getLogger(__name__)

ALGORITHMS = ("jA", "jR", "T")
CSV_HEADER = "iter,alg,mean_db"


class ConfigError(ValueError):
    pass


def generate_random_hyperplanes(n: int, m: int, seed: int) -> HyperplaneSystem:
    """Standard-normal rows (then unit-normalized) and standard-normal rhs.

    Draw order: the ``m * n`` row entries row-major, then the ``m`` rhs values,
    all from one normal stream.
    """
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    z = SplitMix64(seed).normals(m * n + m)
    return normalize_rows(HyperplaneSystem(z[: m * n].reshape(m, n), z[m * n:]))


@dataclass
class ExperimentConfig:
    dim: int = 50
    num_sets: int = 55
    weights: str | list[float] = "equal"
    seed: int = 0
    instances: int = 5
    iters: int = 100
    algorithms: tuple[str, ...] = ALGORITHMS
    output_path: str | None = None

    def __post_init__(self):
        self.algorithms = tuple(self.algorithms)
        if isinstance(self.weights, str) and self.weights != "equal":
            self.weights = self.weights.strip()
        self.validate()

    def validate(self):
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        if self.num_sets < 2:
            raise ConfigError("num_sets must be at least 2")
        if self.instances < 1:
            raise ConfigError("instances must be at least 1")
        if self.iters < 0:
            raise ConfigError("iters must be nonnegative")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.algorithms:
            raise ConfigError("select at least one algorithm")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm")
        w = self.make_weights()
        if w.m != self.num_sets:
            raise ConfigError(f"{w.m} weights given for {self.num_sets} sets")

    def make_weights(self) -> Weights:
        try:
            if self.weights == "equal":
                return Weights.equal(self.num_sets)
            if isinstance(self.weights, str):
                return Weights.parse(self.weights)
            return Weights(list(self.weights))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"invalid weights: {exc}") from exc

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)

    def to_json(self) -> dict:
        return {
            "dim": self.dim, "num_sets": self.num_sets, "weights": self.weights,
            "seed": self.seed, "instances": self.instances, "iters": self.iters,
            "algorithms": list(self.algorithms), "output_path": self.output_path,
        }


@dataclass
class CurveTable:
    """Mean dB error per algorithm and iteration (``iters + 1`` rows)."""

    algorithms: tuple[str, ...]
    curves: dict[str, np.ndarray]
    instances_used: list[int] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)
    tags: dict[str, list[str]] = field(default_factory=dict)

    @property
    def iters(self) -> int:
        return len(next(iter(self.curves.values()))) - 1

    def final(self, alg: str) -> float:
        return float(self.curves[alg][-1])


def _pad(db: np.ndarray, length: int) -> np.ndarray:
    # An exact fixed point was hit early; the sequence stays constant from there.
    if db.size >= length:
        return db[:length]
    return np.concatenate([db, np.full(length - db.size, db[-1])])


def algorithm_tags(w: Weights, algorithms: Sequence[str] = ALGORITHMS) -> dict[str, list[str]]:
    """Theory status of each algorithm for the given weights."""
    tags = {"jA": [], "jR": [], "T": [HEURISTIC_TAG]}
    if w.m < 3:
        tags["jR"].append(M2_TAG)
    if not w.is_equal:
        tags["jR"].append(UNPROVEN_TAG)
    return {a: tags[a] for a in algorithms}


def run_instance(sys: HyperplaneSystem, w: Weights, iters: int,
                 algorithms: Sequence[str] = ALGORITHMS) -> tuple[dict[str, np.ndarray], dict[str, list[str]]]:
    """dB curves of the selected algorithms on one instance, started from zero.

    Raises ``MetricUndefinedError`` if zero is already a fixed point.
    """
    models = sys.models()
    p = ProductProblem(tuple(models), w, sys.n)
    x0 = np.zeros(sys.n)
    r0 = p.J_A(x0) - x0
    if not np.any(r0):
        raise MetricUndefinedError("zero is already a fixed point; dB error undefined")
    curves, tags = {}, {}
    if iters == 0:
        return {a: np.zeros(1) for a in algorithms}, algorithm_tags(w, algorithms)
    rule = StoppingRule(max_iters=iters, step_tol=0.0, divergence_threshold=math.inf)
    X0 = np.zeros((w.m, sys.n))
    for alg in algorithms:
        if alg == "jA":
            tr = iterate_averaged_resolvent(models, w, x0, rule)
        elif alg == "jR":
            tr, _ = iterate_product(p, X0, rule, allow_m2=True)
        else:
            tr, _ = iterate_heuristic(p, X0, rule)
        curves[alg] = _pad(tr.db_error, iters + 1)
        tags[alg] = list(tr.tags)
    return curves, tags


def run_experiment(config: ExperimentConfig) -> CurveTable:
    config.validate()
    w = config.make_weights()
    sums = {a: np.zeros(config.iters + 1) for a in config.algorithms}
    used, skipped = [], []
    tags = algorithm_tags(w, config.algorithms)
    for k in range(config.instances):
        seed = (config.seed + k) & MASK64
        sys = generate_random_hyperplanes(config.dim, config.num_sets, seed)
        try:
            curves, _ = run_instance(sys, w, config.iters, config.algorithms)
        except MetricUndefinedError as exc:
            log.warning("instance %d (seed %d) skipped: %s", k, seed, exc)
            skipped.append(k)
            continue
        for a in config.algorithms:
            sums[a] += curves[a]
        used.append(k)
    if not used:
        return CurveTable(config.algorithms, {}, used, skipped, tags)
    means = {a: sums[a] / len(used) for a in config.algorithms}
    return CurveTable(config.algorithms, means, used, skipped, tags)


def _fmt(v: float) -> str:
    return repr(float(v))


def emit_plot_data(table: CurveTable, path) -> tuple[Path, Path]:
    """Write ``path`` (CSV ``iter,alg,mean_db``) and ``path.dat`` (columns).

    The columns file starts with ``#`` metadata lines, then a header
    ``iter <alg> ...`` and one whitespace-separated row per iteration.
    """
    if not table.curves:
        raise ValueError("empty curve table")
    path = Path(path)
    dat = path.with_suffix(".dat") if path.suffix != ".dat" else path.with_suffix(".cols.dat")
    algs = table.algorithms
    n_rows = table.iters + 1

    lines = [CSV_HEADER]
    for alg in algs:
        lines += [f"{i},{alg},{_fmt(v)}" for i, v in enumerate(table.curves[alg])]
    path.write_text("\n".join(lines) + "\n")

    meta = [f"# instances used: {' '.join(map(str, table.instances_used))}"]
    if table.skipped:
        meta.append(f"# instances skipped: {' '.join(map(str, table.skipped))}")
    for alg in algs:
        for tag in table.tags.get(alg, []):
            meta.append(f"# {alg}: {tag}")
    if "jR" in algs and not table.tags.get("jR"):
        meta.append("# jR: convergence proven (equal weights, m >= 3)")
    cols = ["iter " + " ".join(algs)]
    for i in range(n_rows):
        cols.append(" ".join([str(i)] + [_fmt(table.curves[a][i]) for a in algs]))
    dat.write_text("\n".join(meta + cols) + "\n")
    return path, dat


def load_config(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_json(obj)
