import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from masta.objective import Agent, EvalBudget, evaluate, init_population, make_benchmark
from masta.rules import (CommPolicy, RatePolicy, closed_form_fixed, closed_form_varying,
                         communicate, communicate_rows, convex_step, elementwise_step, ma_rotate,
                         rate_step, sample_convex_coefficients, sample_rate, symmetry)

vec = hnp.arrays(float, 3, elements=st.floats(-1e3, 1e3))


def test_rate_step_examples():
    x, b = np.array([2.0, 2.0]), np.array([0.5, -1.0])
    np.testing.assert_array_equal(rate_step(x, b, 0.0), b)
    np.testing.assert_array_equal(rate_step(x, b, 1.0), x)
    np.testing.assert_array_equal(rate_step([2, 2], [0, 0], -0.5), [-1, -1])


def test_closed_form_examples():
    x0 = np.array([1.5, -2.0])
    np.testing.assert_array_equal(closed_form_fixed(x0, [0, 1], 0.3, 0), x0)
    np.testing.assert_array_equal(closed_form_fixed([1.0], [0.0], 0.5, 3), [0.125])
    with pytest.raises(ValueError):
        closed_form_fixed(x0, x0, 0.5, -1)


def test_fixed_rate_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = rng.integers(1, 20)
        x0, best = rng.uniform(-10, 10, n), rng.uniform(-10, 10, n)
        eta = rng.uniform(-0.99, 0.99)
        x = x0
        for _ in range(20):
            x = rate_step(x, best, eta)
        assert np.max(np.abs(x - closed_form_fixed(x0, best, eta, 20))) <= 1e-12


def test_varying_rate_oracle():
    rng = np.random.default_rng(1)
    policy = RatePolicy(kind="varying-linear", eta_start=-0.9, eta_end=-0.1)
    for _ in range(100):
        n = rng.integers(1, 20)
        x0, best = rng.uniform(-10, 10, n), rng.uniform(-10, 10, n)
        K = 50
        etas = [sample_rate(policy, k, K, rng) for k in range(K)]
        x = x0
        for eta in etas:
            x = rate_step(x, best, eta)
        assert np.max(np.abs(x - closed_form_varying(x0, best, etas))) <= 1e-12


def test_sample_rate_varying_midpoint():
    p = RatePolicy(kind="varying-linear", eta_start=-0.9, eta_end=-0.1)
    assert sample_rate(p, 50, 100, None) == pytest.approx(-0.5, abs=1e-15)
    assert sample_rate(p, 0, 100, None) == -0.9
    with pytest.raises(ValueError):
        sample_rate(p, 101, 100, None)


def test_sample_rate_uniform_statistics():
    p = RatePolicy(kind="stochastic-uniform", interval=(-2, 2), L=1)
    v = sample_rate(p, 0, 1, np.random.default_rng(2), size=(1_000_000,))
    assert np.all((v > -2) & (v < 2))
    se = 4 / np.sqrt(12) / np.sqrt(v.size)
    assert abs(v.mean()) < 3 * se


def test_sample_rate_gaussian_product():
    rng = np.random.default_rng(3)
    p = RatePolicy(kind="stochastic-gaussian", interval=(-2, 2), L=2)
    v = sample_rate(p, 0, 1, rng, size=(100_000,))
    assert np.all(np.abs(v) < 4)
    one = sample_rate(RatePolicy(kind="stochastic-gaussian", L=1), 0, 1, rng, size=(100_000,))
    assert np.all(np.abs(one) < 2)


def test_sample_rate_elementwise_shape():
    p = RatePolicy(kind="stochastic-uniform", elementwise=True)
    v = sample_rate(p, 0, 1, np.random.default_rng(4), n=3, size=(5,))
    assert v.shape == (5, 3)
    assert isinstance(sample_rate(RatePolicy(kind="fixed", eta=0.2), 0, 1, None), float)


@pytest.mark.parametrize("kwargs", [dict(kind="fixed", eta=1.0),
                                    dict(kind="varying-linear", eta_start=-1.0),
                                    dict(kind="stochastic-uniform", interval=(1, 1)),
                                    dict(L=0), dict(kind="nope")])
def test_rate_policy_validation(kwargs):
    with pytest.raises(ValueError):
        RatePolicy(**kwargs)


def test_symmetry_examples():
    b = np.array([1.0, 1.0])
    np.testing.assert_array_equal(symmetry(b, b), b)
    np.testing.assert_array_equal(symmetry([3, 1], b), [-1, 1])


@settings(max_examples=200)
@given(st.integers(-2 ** 40, 2 ** 40), st.integers(-2 ** 40, 2 ** 40))
def test_symmetry_involution_on_integers(x, b):
    # exactly representable inputs make the reflection exact
    xs, bs = np.array([float(x)]), np.array([float(b)])
    np.testing.assert_array_equal(symmetry(symmetry(xs, bs), bs), xs)


def test_convex_examples():
    xi, xj, b = np.array([1.0, 0.0]), np.array([0.0, 3.0]), np.array([-3.0, 0.0])
    np.testing.assert_array_equal(convex_step(xi, xj, b, 1.0, 0.0), xi)
    np.testing.assert_allclose(convex_step(xi, xj, b, 1 / 3, 1 / 3), (xi + xj + b) / 3,
                               atol=1e-15)
    with pytest.raises(ValueError):
        convex_step(xi, xj, b, 0.7, 0.5)
    with pytest.raises(ValueError):
        convex_step(xi, xj, b, -0.1, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_convex_barycentric(seed):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-5, 5, size=(3, 2))
    eta, zeta = sample_convex_coefficients(CommPolicy(), rng, ())
    y = convex_step(P[0], P[1], P[2], eta, zeta)
    A = np.vstack([P.T, np.ones(3)])
    if abs(np.linalg.det(A)) < 1e-3:
        return
    lam = np.linalg.solve(A, np.append(y, 1.0))
    assert np.all(lam >= -1e-12) and np.all(lam <= 1 + 1e-12)
    assert abs(lam.sum() - 1) <= 1e-12


def test_simplex_sampling():
    eta, zeta = sample_convex_coefficients(CommPolicy(), np.random.default_rng(0), (10_000,))
    assert np.all(eta >= 0) and np.all(zeta >= 0) and np.all(eta + zeta <= 1)
    # uniform on the triangle: each marginal has mean 1/3
    assert abs(eta.mean() - 1 / 3) < 0.01 and abs(zeta.mean() - 1 / 3) < 0.01


def test_elementwise_examples():
    np.testing.assert_array_equal(elementwise_step([5, 5], [1, 2], [1, 0]), [5, 2])
    with pytest.raises(ValueError):
        elementwise_step([1, 2, 3], [0, 0, 0], [0.5, 0.5])
    with pytest.raises(ValueError):
        elementwise_step([1, 2], [0, 0], [0.5, 0.5], x_j=[1, 1])
    y = elementwise_step([1.0, 1.0], [0.0, 0.0], [0.5, 0.25], x_j=[2.0, 4.0], zetas=[0.5, 0.5])
    np.testing.assert_array_equal(y, [1.5, 2.25])


@settings(max_examples=200)
@given(vec, vec, st.floats(-2, 2))
def test_elementwise_reduces_to_rate_step(x, b, eta):
    np.testing.assert_array_equal(elementwise_step(x, b, np.full(3, eta)), rate_step(x, b, eta))


def test_elementwise_rates_decorrelated():
    rng = np.random.default_rng(8)
    p = RatePolicy(kind="stochastic-uniform", elementwise=True)
    etas = sample_rate(p, 0, 1, rng, n=2, size=(10_000,))
    best = np.array([1.0, 2.0])
    Y = elementwise_step(np.array([3.0, 5.0]), best, etas)
    assert abs(np.corrcoef(etas.T)[0, 1]) < 0.05
    # the scatter fills a rectangle rather than a line through best
    D = (Y - best) / np.array([2.0, 3.0])
    assert abs(np.corrcoef(D.T)[0, 1]) < 0.05


def test_ma_rotate_fixed_point_and_1d():
    rng = np.random.default_rng(0)
    b = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(ma_rotate(b, b, 1.0, rng), b)
    for _ in range(100):
        y = ma_rotate(np.array([4.0]), np.array([1.0]), 0.5, rng)
        assert abs(y[0] - 1.0) == 1.5
    with pytest.raises(ValueError):
        ma_rotate(b, b, 0.0, rng)


@pytest.mark.parametrize("n", [2, 10, 50])
def test_ma_rotate_contraction(n):
    rng = np.random.default_rng(n)
    x = rng.normal(size=(10_000, n)) * 10
    b = rng.normal(size=(10_000, n))
    eta = 0.8
    y = ma_rotate(x, b, eta, rng)
    lhs = np.linalg.norm(y - b, axis=1)
    rhs = eta * np.linalg.norm(x - b, axis=1)
    assert np.all(lhs <= rhs * (1 + 1e-12))


def _population(spec, N, seed):
    return init_population(spec, N, np.random.default_rng(seed))


def test_communicate_identical_population_unchanged():
    spec = make_benchmark("spherical", 2)
    pop = [Agent(np.zeros(2), 0.0) for _ in range(5)]
    out = communicate(pop, pop[0], CommPolicy(), spec, np.random.default_rng(0))
    assert all(np.array_equal(a.x, np.zeros(2)) and a.fitness == 0.0 for a in out)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.booleans(), st.booleans(), st.booleans())
def test_communicate_greedy_and_elitist(seed, sym, convex, elementwise):
    spec = make_benchmark("rastrigin", 3)
    pop = _population(spec, 10, seed)
    best = min(pop, key=lambda a: a.fitness)
    policy = CommPolicy(rate=RatePolicy(elementwise=elementwise), use_symmetry=sym,
                        use_convex=convex)
    budget = EvalBudget()
    out = communicate(pop, best, policy, spec, np.random.default_rng(seed), budget)
    per_follower = 1 + sym + convex + 1
    assert budget.used == 9 * per_follower
    for before, after in zip(pop, out):
        assert after.fitness <= before.fitness
        assert after.fitness == evaluate(spec, after.x)
    i = next(k for k, a in enumerate(pop) if a is best)
    assert np.array_equal(out[i].x, best.x)
    assert min(a.fitness for a in out) <= best.fitness


def test_communicate_requires_best():
    spec = make_benchmark("spherical", 2)
    pop = _population(spec, 5, 0)
    worst = max(pop, key=lambda a: a.fitness)
    with pytest.raises(ValueError):
        communicate(pop, worst, CommPolicy(), spec, np.random.default_rng(0))
    with pytest.raises(ValueError):
        communicate(pop, Agent(np.ones(2) * 99, -1.0), CommPolicy(), spec,
                    np.random.default_rng(0))


def test_communicate_converges_on_quadratic_valley():
    spec = make_benchmark("paper-example", 2)
    hits = 0
    for seed in range(30):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-5, 5, size=(30, 2))
        F = spec.func(X)
        for _ in range(200):
            communicate_rows(X, F, int(np.argmin(F)), CommPolicy(), spec, rng)
        hits += F.min() < 1e-6
    assert hits >= 27


def test_policy_round_trip():
    p = CommPolicy(rate=RatePolicy(kind="stochastic-gaussian", interval=(-1.5, 2.5), L=3),
                   use_convex=True, zeta_source="fixed", convex_eta=0.2, convex_zeta=0.5,
                   ma_eta=0.75)
    assert CommPolicy.from_dict(p.to_dict()) == p


def test_comm_policy_validation():
    with pytest.raises(ValueError):
        CommPolicy(use_rate=False, use_convex=False, use_ma_rotation=False)
    with pytest.raises(ValueError):
        CommPolicy(ma_eta=1.5)
    with pytest.raises(ValueError):
        CommPolicy(zeta_source="fixed", convex_eta=0.8, convex_zeta=0.8)
