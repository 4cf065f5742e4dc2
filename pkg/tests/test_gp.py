import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import dense_gp, gauss_jordan_inverse

from gpisx import gp
from gpisx.errors import DimensionMismatch, EmptyTrainingSet, NotPositiveDefinite
from gpisx.gp import GpTrainingSet, SquaredExponentialKernel, extend, fit, kernel_eval, predict


def random_problem(rng, n, d, noise=None):
    X = rng.uniform(0, 1, (n, d))
    y = rng.normal(size=n)
    k = SquaredExponentialKernel(rng.uniform(0.5, 2.0), rng.uniform(0.05, 0.5))
    noise = rng.uniform(1e-3, 1e-1) if noise is None else noise
    return k, GpTrainingSet(X, y, noise)


# kernel ----------------------------------------------------------------------


def test_kernel_zero_distance():
    assert kernel_eval(SquaredExponentialKernel(1.0, 1.0), [1, 2], [1, 2]) == 1.0


def test_kernel_unit_distance():
    assert kernel_eval(SquaredExponentialKernel(1.0, 1.0), [0, 0], [1, 0]) == pytest.approx(0.367879, abs=1e-6)


def test_kernel_hand_value():
    # 2 * exp(-0.01 / 0.01), evaluated by hand
    v = kernel_eval(SquaredExponentialKernel(2.0, 0.01), [0, 0], [0.1, 0])
    assert v == pytest.approx(0.7357588823428847, rel=1e-12)


def test_kernel_dimension_mismatch():
    k = SquaredExponentialKernel(1.0, 1.0)
    with pytest.raises(DimensionMismatch):
        kernel_eval(k, [0, 0], [0, 0, 0])
    with pytest.raises(DimensionMismatch):
        k(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize("e2, w2", [(0, 1), (1, 0), (-1, 1)])
def test_kernel_rejects_nonpositive(e2, w2):
    with pytest.raises(ValueError):
        SquaredExponentialKernel(e2, w2)


# fit -------------------------------------------------------------------------


def test_fit_single_point():
    m = fit(SquaredExponentialKernel(1.0, 1.0), GpTrainingSet([[0.3, 0.4]], [2.5], 0.0))
    np.testing.assert_allclose(m.chol, [[1.0]], atol=1e-9)
    np.testing.assert_allclose(m.alpha, [2.5], rtol=1e-9)


def test_fit_factor_reproduces_gram(rng):
    k, tr = random_problem(rng, 5, 2, noise=0.01)
    m = fit(k, tr)
    A = k(tr.inputs, tr.inputs) + (tr.noise_var + m.jitter[0]) * np.eye(5)
    np.testing.assert_allclose(m.chol @ m.chol.T, A, atol=1e-10)
    assert np.allclose(m.chol, np.tril(m.chol))


def test_fit_duplicate_points_rescued_by_jitter():
    k = SquaredExponentialKernel(1.0, 0.1)
    X = [[0.0, 0.0], [0.0, 0.0], [0.5, 0.5]]
    y = [1.0, 1.0, -1.0]
    m = fit(k, GpTrainingSet(X, y, 0.0))
    assert m.jitter[0] > 0
    K = k(np.array(X), np.array(X)) + m.jitter[0] * np.eye(3)
    assert np.linalg.norm(K @ m.alpha - y) < 1e-6


def test_fit_empty():
    with pytest.raises(EmptyTrainingSet):
        fit(SquaredExponentialKernel(1, 1), GpTrainingSet(np.empty((0, 2)), [], 0.0))


def test_fit_gives_up_when_jitter_is_exhausted(monkeypatch):
    # an all-ones Gram matrix stays singular in float64 under a 1e-20 shift
    monkeypatch.setattr(gp, "JITTER_START", 1e-20)
    monkeypatch.setattr(gp, "JITTER_MAX", 1e-19)
    X = np.zeros((4, 2))
    with pytest.raises(NotPositiveDefinite):
        fit(SquaredExponentialKernel(1.0, 1.0), GpTrainingSet(X, np.arange(4.0), 0.0))


def test_training_set_validation():
    with pytest.raises(ValueError):
        GpTrainingSet([[0, 0]], [1, 2])
    with pytest.raises(ValueError):
        GpTrainingSet([[0, 0]], [1], -1.0)
    with pytest.raises(ValueError):
        GpTrainingSet([[0, np.inf]], [1])


# predict ---------------------------------------------------------------------


def test_predict_interpolates_noiseless():
    k = SquaredExponentialKernel(1.0, 0.1)
    X = np.array([[0.0, 0.0], [0.4, 0.1], [0.9, 0.8]])
    m = fit(k, GpTrainingSet(X, [0.3, -1.0, 2.0], 0.0))
    p = predict(m, X[:1])
    assert p.mean[0] == pytest.approx(0.3, abs=1e-8)
    assert p.variance[0] <= 1e-8


def test_predict_far_away_is_prior():
    k = SquaredExponentialKernel(1.5, 0.01)
    m = fit(k, GpTrainingSet([[0.0, 0.0]], [3.0], 1e-4))
    p = predict(m, [[10.0, 10.0]])
    assert abs(p.mean[0]) < 1e-6
    assert p.variance[0] == pytest.approx(1.5, abs=1e-6)


def test_predict_three_points_matches_dense_inversion():
    k = SquaredExponentialKernel(1.0, 0.2)
    X = np.array([[0.0, 0.0], [0.3, 0.2], [0.7, 0.9]])
    y = np.array([1.0, -0.5, 0.25])
    m = fit(k, GpTrainingSet(X, y, 0.01))
    Q = np.array([[0.1, 0.1], [0.5, 0.5]])
    p = predict(m, Q)
    mean, var = dense_gp(X, y, Q, 1.0, 0.2, 0.01 + m.jitter)
    np.testing.assert_allclose(p.mean, mean, atol=1e-8)
    np.testing.assert_allclose(p.variance, var, atol=1e-8)


def test_predict_chunks_agree(monkeypatch, rng):
    k, tr = random_problem(rng, 30, 3)
    m = fit(k, tr)
    Q = rng.uniform(0, 1, (50, 3))
    full = predict(m, Q)
    monkeypatch.setattr(gp, "PREDICT_CHUNK", 7)
    chunked = predict(m, Q)
    np.testing.assert_allclose(chunked.mean, full.mean, atol=1e-14)
    np.testing.assert_allclose(chunked.variance, full.variance, atol=1e-14)


def test_predict_dimension_mismatch(rng):
    k, tr = random_problem(rng, 4, 2)
    with pytest.raises(DimensionMismatch):
        predict(fit(k, tr), np.zeros((1, 3)))


def test_predict_without_variance(rng):
    k, tr = random_problem(rng, 4, 2)
    p = predict(fit(k, tr), np.zeros((2, 2)), return_variance=False)
    assert p.variance is None and len(p) == 2


def test_gauss_jordan_oracle_is_an_inverse(rng):
    A = rng.normal(size=(6, 6)) + 6 * np.eye(6)
    np.testing.assert_allclose(gauss_jordan_inverse(A) @ A, np.eye(6), atol=1e-12)


# extend ----------------------------------------------------------------------


def test_extend_with_nothing_is_identity(rng):
    k, tr = random_problem(rng, 10, 2)
    m = fit(k, tr)
    m2 = extend(m, np.empty((0, 2)), [])
    Q = rng.uniform(0, 1, (5, 2))
    np.testing.assert_array_equal(predict(m, Q).mean, predict(m2, Q).mean)


def test_extend_matches_refit_20_plus_7(rng):
    k, tr = random_problem(rng, 27, 3)
    base = fit(k, GpTrainingSet(tr.inputs[:20], tr.targets[:20], tr.noise_var))
    ext = extend(base, tr.inputs[20:], tr.targets[20:])
    ref = fit(k, tr)
    Q = rng.uniform(0, 1, (40, 3))
    a, b = predict(ext, Q), predict(ref, Q)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-8)
    np.testing.assert_allclose(a.variance, b.variance, atol=1e-8)


def test_extend_at_existing_location_reduces_variance():
    k = SquaredExponentialKernel(1.0, 0.05)
    m = fit(k, GpTrainingSet([[0.2, 0.2], [0.6, 0.6]], [0.0, 1.0], 0.01))
    before = predict(m, [[0.2, 0.2]]).variance[0]
    after = predict(extend(m, [[0.2, 0.2]], [0.0]), [[0.2, 0.2]]).variance[0]
    assert after < before


def test_extend_leaves_old_model_untouched(rng):
    k, tr = random_problem(rng, 8, 2)
    m = fit(k, tr)
    chol = m.chol.copy()
    extend(m, [[0.5, 0.5]], [1.0])
    np.testing.assert_array_equal(m.chol, chol)
    assert m.n == 8


def test_extend_dimension_mismatch(rng):
    k, tr = random_problem(rng, 4, 2)
    with pytest.raises(DimensionMismatch):
        extend(fit(k, tr), np.zeros((1, 3)), [0.0])


# properties ------------------------------------------------------------------

pts2 = arrays(float, st.tuples(st.integers(1, 20), st.just(2)), elements=st.floats(-1, 1))


@given(pts2, pts2)
def test_kernel_symmetry(A, B):
    k = SquaredExponentialKernel(1.3, 0.2)
    for a in A[:5]:
        for b in B[:5]:
            assert kernel_eval(k, a, b) == kernel_eval(k, b, a)
    np.testing.assert_array_equal(k(A, B), k(B, A).T)


@given(pts2)
def test_gram_is_psd(X):
    K = SquaredExponentialKernel(1.0, 0.3)(X, X)
    assert np.linalg.eigvalsh(K).min() >= -1e-8


@given(st.integers(0, 2**32 - 1), st.integers(1, 25), st.sampled_from([2, 3]))
def test_posterior_variance_never_exceeds_prior(seed, n, d):
    rng = np.random.default_rng(seed)
    k, tr = random_problem(rng, n, d)
    p = predict(fit(k, tr), rng.uniform(-0.5, 1.5, (30, d)))
    assert np.all(p.variance <= k.sigma_e2 + 1e-9)
    assert np.all(p.variance >= 0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.sampled_from([2, 3]))
def test_information_is_monotone(seed, n, d):
    rng = np.random.default_rng(seed)
    k, tr = random_problem(rng, n + 1, d)
    m = fit(k, GpTrainingSet(tr.inputs[:n], tr.targets[:n], tr.noise_var))
    Q = rng.uniform(0, 1, (30, d))
    before = predict(m, Q).variance
    after = predict(extend(m, tr.inputs[n:], tr.targets[n:]), Q).variance
    assert np.all(after <= before + 1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(1, 50), st.sampled_from([2, 3]))
def test_predict_matches_oracle(seed, n, d):
    rng = np.random.default_rng(seed)
    k, tr = random_problem(rng, n, d)
    m = fit(k, tr)
    Q = rng.uniform(0, 1, (4, d))
    p = predict(m, Q)
    mean, var = dense_gp(tr.inputs, tr.targets, Q, k.sigma_e2, k.sigma_w2, tr.noise_var + m.jitter)
    np.testing.assert_allclose(p.mean, mean, atol=1e-8)
    np.testing.assert_allclose(p.variance, var, atol=1e-8)


@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 15), st.sampled_from([2, 3]))
def test_extend_equals_refit(seed, n, m_new, d):
    rng = np.random.default_rng(seed)
    k, tr = random_problem(rng, n + m_new, d)
    base = fit(k, GpTrainingSet(tr.inputs[:n], tr.targets[:n], tr.noise_var))
    ext = extend(base, tr.inputs[n:], tr.targets[n:])
    ref = fit(k, tr)
    Q = rng.uniform(0, 1, (20, d))
    a, b = predict(ext, Q), predict(ref, Q)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-8)
    np.testing.assert_allclose(a.variance, b.variance, atol=1e-8)
