import numpy as np
import pytest

from resavg.operators import (
    LinearPSD,
    NormalConeBox,
    NormalConeHalfspace,
    NormalConeHyperplane,
    Translation,
    Zero,
)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20110207)


def random_psd(rng, n, rank=None):
    B = rng.standard_normal((n, rank or n))
    return B @ B.T


def random_models(rng, n):
    """One instance of every operator variant on R^n."""
    lo = rng.uniform(-1, 0, n)
    return [
        Zero(),
        Translation(rng.standard_normal(n)),
        NormalConeHyperplane(rng.standard_normal(n), rng.standard_normal()),
        NormalConeHalfspace(rng.standard_normal(n), rng.standard_normal()),
        NormalConeBox(lo, lo + rng.uniform(0, 2, n)),
        LinearPSD(random_psd(rng, n)),
        LinearPSD(random_psd(rng, n, rank=1)),
    ]


def random_pairs(rng, shape, count, scale=3.0):
    return [(scale * rng.standard_normal(shape), scale * rng.standard_normal(shape))
            for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
