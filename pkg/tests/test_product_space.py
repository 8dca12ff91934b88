import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resavg.operators import (
    DimensionError,
    LinearPSD,
    NormalConeHyperplane,
    Translation,
    Weights,
    Zero,
)
from resavg.product_space import (
    ProductProblem,
    apply_J,
    apply_J_k_R_k,
    apply_JR,
    apply_R,
    apply_R_adjoint,
    apply_R_k,
    apply_T,
    averagedness_constant_JR,
    averagedness_constant_R,
    combine_L,
    decompose_N,
    diagonal,
    expansion_witness,
    operator_norm_R,
    product_from_json,
    product_to_json,
    s_residual,
    split_L_inverse,
)

from conftest import random_models

# Largest singular value of K for weights (1/2, 1/4, 1/4), from power iteration
# on R*R with R evaluated by explicit rational loops (independent of SVD).
NORM_R_HALF_QUARTER = 1.0457495567621047


def loop_R(lam, X):
    mu = 1 - lam
    m = len(lam)
    return np.array([sum(lam[j] / mu[i] * X[j] for j in range(m) if j != i) for i in range(m)])


def loop_R_adjoint(lam, X):
    mu = 1 - lam
    m = len(lam)
    return np.array([sum(lam[i] / mu[j] * X[j] for j in range(m) if j != i) for i in range(m)])


def random_weights(rng, m):
    return Weights(rng.dirichlet(np.ones(m)))


def hyperplane_problem(rng, n, m, w=None):
    models = [NormalConeHyperplane(rng.standard_normal(n), rng.standard_normal()) for _ in range(m)]
    return ProductProblem(tuple(models), w or Weights.equal(m), n)


weights_st = st.integers(2, 8).flatmap(
    lambda m: st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m)
).map(lambda v: Weights(np.array(v) / np.sum(v)))


# -- R and R* -----------------------------------------------------------

def test_R_equal_weights_example():
    out = apply_R(Weights.equal(3), [[1.0], [2.0], [3.0]])
    np.testing.assert_allclose(out, [[2.5], [2.0], [1.5]], atol=1e-15)


def test_R_matches_loop_oracle(rng):
    for m in (2, 3, 7):
        w = random_weights(rng, m)
        X = rng.standard_normal((m, 4))
        np.testing.assert_allclose(apply_R(w, X), loop_R(w.lam, X), atol=1e-13)
        np.testing.assert_allclose(apply_R_adjoint(w, X), loop_R_adjoint(w.lam, X), atol=1e-13)


def test_R_fixes_diagonal(rng):
    w = random_weights(rng, 5)
    D = diagonal(rng.standard_normal(3), 5)
    np.testing.assert_allclose(apply_R(w, D), D, atol=1e-14)


def test_R_swaps_when_m_is_two(rng):
    w = Weights([0.3, 0.7])
    u, v = rng.standard_normal(3), rng.standard_normal(3)
    np.testing.assert_allclose(apply_R(w, [u, v]), [v, u], atol=1e-15)


def test_adjoint_equals_R_for_equal_weights(rng):
    X = rng.standard_normal((4, 3))
    np.testing.assert_allclose(apply_R_adjoint(Weights.equal(4), X), apply_R(Weights.equal(4), X),
                               atol=1e-15)


def test_adjoint_witness_example():
    w = Weights([0.5, 0.25, 0.25])
    u = np.array([0.6, 0.8])
    X = w.mu[:, None] * u
    out = apply_R_adjoint(w, X)
    np.testing.assert_allclose(out, (w.lam * 2)[:, None] * u, atol=1e-15)
    assert np.vdot(out, out) == pytest.approx(1.5, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(weights_st, st.integers(0, 2**32 - 1))
def test_adjoint_identity(w, seed):
    r = np.random.default_rng(seed)
    X, Y = r.standard_normal((w.m, 3)), r.standard_normal((w.m, 3))
    assert np.vdot(apply_R(w, X), Y) == pytest.approx(np.vdot(X, apply_R_adjoint(w, Y)), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(weights_st)
def test_rows_of_R_are_stochastic(w):
    from resavg.product_space import coefficient_matrix
    K = coefficient_matrix(w)
    np.testing.assert_allclose(K.sum(axis=1), 1.0, rtol=0, atol=1e-14)
    assert np.all(np.diag(K) == 0)


@settings(max_examples=100, deadline=None)
@given(weights_st)
def test_cauchy_schwarz_lemma(w):
    s = w.m * np.sum(w.lam ** 2)
    assert s >= 1 - 1e-14
    if not w.is_equal:
        assert s > 1


def test_cauchy_schwarz_equality_for_equal_weights():
    for m in (2, 3, 10, 55):
        assert m * np.sum(Weights.equal(m).lam ** 2) == pytest.approx(1.0, abs=1e-14)


def test_fix_R_is_exactly_the_diagonal(rng):
    for m in (2, 3, 6):
        w = random_weights(rng, m)
        X = rng.standard_normal((m, 2))
        assert not np.allclose(apply_R(w, X), X)


def test_R_k_witness_norm_grows():
    for m in (3, 10, 55):
        w = Weights.equal(m)
        for k in (0, m - 1):
            X = expansion_witness(m, 2, k)
            Y = apply_R_k(w, k, X)
            np.testing.assert_allclose(Y, diagonal([1.0, 0.0], m), atol=1e-14)
            assert np.vdot(X, X) == m - 1
            assert np.vdot(Y, Y) == pytest.approx(m, abs=1e-12)


# -- operator norm ---------------------------------------------------------

@pytest.mark.parametrize("m", [2, 3, 5, 55])
def test_norm_R_equal_weights(m):
    assert operator_norm_R(Weights.equal(m)) == pytest.approx(1.0, abs=1e-12)


def test_norm_R_m2_any_weights():
    assert operator_norm_R(Weights([0.1, 0.9])) == pytest.approx(1.0, abs=1e-12)


def test_norm_R_unequal_exceeds_one():
    val = operator_norm_R(Weights([0.5, 0.25, 0.25]))
    assert val > 1
    assert val == pytest.approx(NORM_R_HALF_QUARTER, abs=1e-12)


def test_norm_R_matches_kronecker_matrix(rng):
    w = random_weights(rng, 4)
    n = 3
    big = np.zeros((4 * n, 4 * n))
    for b in range(4 * n):
        e = np.zeros(4 * n)
        e[b] = 1
        big[:, b] = apply_R(w, e.reshape(4, n)).ravel()
    assert operator_norm_R(w) == pytest.approx(np.linalg.norm(big, 2), abs=1e-12)


# -- J, T --------------------------------------------------------------------

def test_J_zero_models_identity(rng):
    p = ProductProblem((Zero(),) * 3, Weights.equal(3), 2)
    X = rng.standard_normal((3, 2))
    np.testing.assert_array_equal(apply_J(p, X), X)


def test_J_hyperplanes_are_projections(rng):
    p = hyperplane_problem(rng, 3, 4, random_weights(rng, 4))
    X = rng.standard_normal((4, 3))
    expected = np.array([mo.resolve(1.0, X[i]) for i, mo in enumerate(p.models)])
    np.testing.assert_allclose(apply_J(p, X), expected, atol=1e-14)


def test_J_linear_identity_example():
    p = ProductProblem((LinearPSD(np.eye(1)),) * 3, Weights.equal(3), 1)
    # (1 + 1/mu) y = x with mu = 2/3
    np.testing.assert_allclose(apply_J(p, [[2.0]] * 3), [[0.8]] * 3, atol=1e-15)


def test_J_generic_path_scales_gamma(rng):
    w = Weights([0.2, 0.3, 0.5])
    M = np.diag([1.0, 3.0])
    p = ProductProblem((LinearPSD(M),) * 3, w, 2)
    X = rng.standard_normal((3, 2))
    for i in range(3):
        y = apply_J(p, X)[i]
        np.testing.assert_allclose(y + M @ y / w.mu[i], X[i], atol=1e-13)


def test_T_zero_models_fills_first_block():
    m, u = 4, np.array([1.0, -2.0])
    p = ProductProblem((Zero(),) * m, Weights.equal(m), 2)
    X = diagonal(u, m)
    X[0] = 0
    np.testing.assert_allclose(apply_T(p, X), diagonal(u, m), atol=1e-14)


def test_T_fixes_diagonal_for_zero_models(rng):
    p = ProductProblem((Zero(),) * 5, random_weights(rng, 5), 3)
    D = diagonal(rng.standard_normal(3), 5)
    np.testing.assert_allclose(apply_T(p, D), D, atol=1e-14)


def test_T_m2_closed_form(rng):
    w = Weights([0.3, 0.7])
    A1, A2 = LinearPSD(np.diag([1.0, 2.0])), Translation([0.5, -1.0])
    p = ProductProblem((A1, A2), w, 2)
    x1, x2 = rng.standard_normal(2), rng.standard_normal(2)
    first = A1.resolve(1 / w.lam[1], x2)
    second = A2.resolve(1 / w.lam[0], first)
    np.testing.assert_allclose(apply_T(p, [x1, x2]), [first, second], atol=1e-14)


def test_T_is_sequential_composition(rng):
    p = hyperplane_problem(rng, 3, 5, random_weights(rng, 5))
    X = rng.standard_normal((5, 3))
    Y = X
    for k in range(5):
        Y = apply_J_k_R_k(p, k, Y)
    np.testing.assert_allclose(apply_T(p, X), Y, atol=1e-14)
    # the input is not modified in place
    X0 = X.copy()
    apply_T(p, X)
    np.testing.assert_array_equal(X, X0)


# -- L and S -----------------------------------------------------------------

def test_combine_L_examples():
    np.testing.assert_allclose(combine_L(Weights.equal(3), [[1.0], [2.0], [3.0]]), [2.0], atol=1e-15)
    np.testing.assert_allclose(combine_L(Weights([0.5, 0.25, 0.25]), [[0.0], [4.0], [8.0]]), [3.0])
    np.testing.assert_allclose(combine_L(Weights([0.2, 0.8]), diagonal([7.0, 1.0], 2)), [7.0, 1.0],
                               atol=1e-15)


def two_point_problem(lam=(0.5, 0.5)):
    models = (NormalConeHyperplane([1.0], 1.0), NormalConeHyperplane([1.0], 2.0))
    return ProductProblem(models, Weights(list(lam)), 1)


def test_split_L_inverse_two_point():
    p = two_point_problem()
    X = split_L_inverse(p, [1.5])
    np.testing.assert_allclose(X, [[1.0], [2.0]], atol=1e-15)
    np.testing.assert_allclose(combine_L(p.weights, X), [1.5], atol=1e-15)
    assert s_residual(p, X) <= 1e-15


def test_split_L_inverse_zero_models(rng):
    p = ProductProblem((Zero(),) * 3, Weights.equal(3), 2)
    x = rng.standard_normal(2)
    np.testing.assert_array_equal(split_L_inverse(p, x), diagonal(x, 3))
    assert s_residual(p, diagonal(x, 3)) <= 1e-15


def test_s_residual_positive_off_S(rng):
    p = hyperplane_problem(rng, 2, 3)
    X = rng.standard_normal((3, 2))
    expected = np.linalg.norm(X - apply_JR(p, X))
    assert s_residual(p, X) == pytest.approx(expected) and expected > 0


def test_split_of_fixed_point_lies_in_S(rng):
    # For hyperplanes with weights lam, Fix J_A is the weighted least-squares point.
    n, m = 3, 6
    w = random_weights(rng, m)
    p = hyperplane_problem(rng, n, m, w)
    A = np.array([mo.a / np.linalg.norm(mo.a) for mo in p.models])
    b = np.array([mo.b / np.linalg.norm(mo.a) for mo in p.models])
    d = np.sqrt(w.lam)
    x_star = np.linalg.lstsq(d[:, None] * A, d * b, rcond=None)[0]
    X = split_L_inverse(p, x_star)
    assert s_residual(p, X) <= 1e-12
    np.testing.assert_allclose(combine_L(w, X), x_star, atol=1e-12)
    # points of S are also fixed by the sequential map T
    np.testing.assert_allclose(apply_T(p, X), X, atol=1e-11)


def test_L_lipschitz_bounds(rng):
    m, n = 4, 3
    p = hyperplane_problem(rng, n, m)
    for _ in range(100):
        X, Y = rng.standard_normal((m, n)), rng.standard_normal((m, n))
        assert np.linalg.norm(combine_L(p.weights, X) - combine_L(p.weights, Y)) \
            <= np.linalg.norm(X - Y) + 1e-12
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        assert np.linalg.norm(split_L_inverse(p, x) - split_L_inverse(p, y)) \
            <= math.sqrt(m) * np.linalg.norm(x - y) + 1e-12


# -- isometry decomposition -------------------------------------------------

def test_N_example():
    out = decompose_N(Weights.equal(3), [[1.0], [0.0], [0.0]])
    np.testing.assert_allclose(out, [[-1 / 3], [2 / 3], [2 / 3]], atol=1e-15)
    assert np.vdot(out, out) == pytest.approx(1.0, abs=1e-15)


def test_N_fixes_diagonal(rng):
    D = diagonal(rng.standard_normal(2), 4)
    np.testing.assert_allclose(decompose_N(Weights.equal(4), D), D, atol=1e-14)


@pytest.mark.parametrize("m", [3, 4, 9])
def test_N_isometry_involution_and_averaging(rng, m):
    w = Weights.equal(m)
    alpha = averagedness_constant_R(m)
    for _ in range(20):
        X = rng.standard_normal((m, 3))
        NX = decompose_N(w, X)
        assert np.linalg.norm(NX) == pytest.approx(np.linalg.norm(X), rel=1e-12)
        np.testing.assert_allclose(decompose_N(w, NX), X, atol=1e-12)
        np.testing.assert_allclose((1 - alpha) * X + alpha * NX, apply_R(w, X), atol=1e-12)


def test_N_rejects_bad_weights():
    with pytest.raises(ValueError):
        decompose_N(Weights([0.5, 0.25, 0.25]), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        decompose_N(Weights.equal(2), np.zeros((2, 1)))


@pytest.mark.parametrize("m", [3, 6])
def test_JR_averagedness(rng, m):
    p = ProductProblem(tuple(random_models(rng, 2)[:m] + [Zero()] * max(0, m - 7)),
                       Weights.equal(m), 2)
    a = averagedness_constant_JR(m)

    def Nprime(X):
        return (apply_JR(p, X) - (1 - a) * X) / a

    for _ in range(100):
        X, Y = 3 * rng.standard_normal((m, 2)), 3 * rng.standard_normal((m, 2))
        assert np.linalg.norm(Nprime(X) - Nprime(Y)) <= np.linalg.norm(X - Y) + 1e-10


# -- shapes and serialization -----------------------------------------------

def test_shape_errors():
    p = ProductProblem((Zero(),) * 3, Weights.equal(3), 2)
    with pytest.raises(DimensionError):
        apply_J(p, np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        apply_R(Weights.equal(3), np.zeros((4, 2)))
    with pytest.raises(DimensionError):
        split_L_inverse(p, [1.0, 2.0, 3.0])
    with pytest.raises(DimensionError):
        ProductProblem((NormalConeHyperplane([1, 2], 0),) * 2, Weights.equal(2), 3)
    with pytest.raises(DimensionError):
        ProductProblem((Zero(),) * 2, Weights.equal(3), 1)


def test_problem_json_roundtrip(rng):
    models = tuple(random_models(rng, 2))
    p = ProductProblem(models, random_weights(rng, len(models)), 2)
    obj = json.loads(json.dumps(p.to_json()))
    assert set(obj) == {"weights", "models", "dim"}
    q = ProductProblem.from_json(obj)
    X = rng.standard_normal((len(models), 2))
    np.testing.assert_array_equal(apply_T(q, X), apply_T(p, X))
    assert product_to_json(X) == json.loads(json.dumps(X.tolist()))
    np.testing.assert_array_equal(product_from_json(product_to_json(X)), X)
