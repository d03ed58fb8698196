import numpy as np
import pytest

from ccsica import datagen
from ccsica.density import ParzenMultivariate, ParzenUnivariate, silverman_bandwidth
from ccsica.divergence import ccs_div_samples, cs_div_samples
from ccsica.errors import DivergenceError, RankDeficientError, SingularDemixerError
from ccsica.evaluation import polar_demixer
from ccsica.ica import (
    Contrast,
    IcaConfig,
    center_whiten,
    contrast,
    demix,
    gradient,
    run,
    standardize,
)


def _cov(X):
    Xc = X - X.mean(axis=1, keepdims=True)
    return Xc @ Xc.T / X.shape[1]


def _sources(T=300, seed=0):
    return datagen.gen_sources(datagen.TWO_SOURCES, T, seed)


def fd_gradient(obj, W, step=1e-6):
    G = np.empty_like(W)
    for m in range(W.shape[0]):
        for l in range(W.shape[1]):
            Wp, Wm = W.copy(), W.copy()
            Wp[m, l] += step
            Wm[m, l] -= step
            G[m, l] = (obj.value(Wp) - obj.value(Wm)) / (2 * step)
    return G


def test_whitening_identity_covariance():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((2, 2000))
    Xw, wt = center_whiten(np.diag([2.0, 3.0]) @ Z + 5.0)
    assert np.max(np.abs(_cov(Xw) - np.eye(2))) < 1e-8
    np.testing.assert_allclose(wt.apply(np.diag([2.0, 3.0]) @ Z + 5.0), Xw, atol=1e-12)


def test_whitening_of_white_data_is_orthogonal():
    Xw0, _ = center_whiten(np.random.default_rng(1).standard_normal((3, 500)))
    Xw, wt = center_whiten(Xw0)
    np.testing.assert_allclose(wt.matrix @ wt.matrix.T, np.eye(3), atol=1e-8)
    assert np.max(np.abs(_cov(Xw) - np.eye(3))) < 1e-8


@pytest.mark.parametrize("M", [2, 4, 8])
def test_whitening_random_mixtures(M):
    rng = np.random.default_rng(M)
    X = rng.standard_normal((M, M)) @ rng.laplace(size=(M, 1000))
    Xw, _ = center_whiten(X)
    assert np.max(np.abs(_cov(Xw) - np.eye(M))) < 1e-8


def test_whitening_rank_deficient():
    X = np.random.default_rng(2).standard_normal((3, 100))
    X[2] = X[0]
    with pytest.raises(RankDeficientError, match="eigen-direction 2 of 3"):
        center_whiten(X)


def test_standardize_unit_variance():
    X = np.array([[1.0, 2.0, 3.0, 4.0], [10.0, 0.0, 10.0, 0.0]])
    Z = standardize(X)
    np.testing.assert_allclose(Z.mean(axis=1), 0.0, atol=1e-15)
    np.testing.assert_allclose(np.mean(Z * Z, axis=1), 1.0)
    with pytest.raises(RankDeficientError):
        standardize(np.ones((2, 5)))


def test_demix_examples():
    X = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(demix(X, np.eye(2)), X)
    np.testing.assert_array_equal(demix(X, [[0, 1], [1, 0]]), X[::-1])
    W = np.array([[2.0, -1.0], [0.5, 3.0]])
    # by hand: row0 = 2*[0,1,2] - [3,4,5], row1 = 0.5*[0,1,2] + 3*[3,4,5]
    np.testing.assert_allclose(demix(X, W), [[-3.0, -2.0, -1.0], [9.0, 12.5, 16.0]])
    with pytest.raises(ValueError):
        demix(X, np.eye(3))


def test_contrast_single_sample_is_zero():
    assert contrast(np.array([[0.3], [-1.0]]), np.eye(2), IcaConfig(bandwidth=1.0)) == 0.0


@pytest.mark.parametrize("objective", ["ccs", "cs"])
def test_contrast_matches_explicit_densities(objective):
    rng = np.random.default_rng(3)
    Xw, _ = center_whiten(rng.laplace(size=(2, 80)))
    W = np.array([[0.9, 0.4], [-0.2, 1.1]])
    cfg = IcaConfig(alpha=0.5, objective=objective)
    h = silverman_bandwidth(80)
    pj = ParzenMultivariate(Xw, h).pdf(Xw) / abs(np.linalg.det(W))
    Y = W @ Xw
    qm = ParzenUnivariate(Y[0], h).pdf(Y[0]) * ParzenUnivariate(Y[1], h).pdf(Y[1])
    ref = ccs_div_samples(pj, qm, 0.5) if objective == "ccs" else cs_div_samples(pj, qm)
    assert contrast(Xw, W, cfg) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_contrast_separating_beats_rotation():
    Xw = standardize(_sources(400))
    obj = Contrast(Xw, IcaConfig(alpha=-1.0))
    d0 = obj.value(np.eye(2))
    for sign in (1, -1):
        assert obj.value(polar_demixer(sign * np.pi / 8, np.pi / 2 + sign * np.pi / 8)) > d0


def test_separating_point_is_local_minimum():
    Xw = standardize(_sources(400, seed=1))
    obj = Contrast(Xw, IcaConfig(alpha=-1.0))
    d0 = obj.value(polar_demixer(0.0, np.pi / 2))
    for dt1, dt2 in [(0.1, 0), (-0.1, 0), (0, 0.1), (0, -0.1)]:
        assert obj.value(polar_demixer(dt1, np.pi / 2 + dt2)) > d0


def test_singular_demixer():
    Xw = standardize(_sources(50))
    with pytest.raises(SingularDemixerError):
        contrast(Xw, np.array([[1.0, 0.0], [1.0, 0.0]]))


@pytest.mark.parametrize("alpha", [1.0, -1.0, 0.5, -0.99999])
@pytest.mark.parametrize("objective", ["ccs", "cs"])
def test_gradient_matches_finite_difference(alpha, objective):
    rng = np.random.default_rng(11)
    for _ in range(3):
        Xw, _ = center_whiten(rng.standard_normal((2, 2)) @ rng.laplace(size=(2, 64)))
        W = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
        obj = Contrast(Xw, IcaConfig(alpha=alpha, objective=objective))
        G, fd = obj.gradient(W), fd_gradient(obj, W)
        assert np.max(np.abs(G - fd)) / np.max(np.abs(fd)) < 1e-4


def test_gradient_terms_assemble():
    Xw, _ = center_whiten(_sources(64))
    W = np.array([[1.0, 0.2], [0.1, 0.9]])
    obj = Contrast(Xw, IcaConfig(alpha=0.5))
    t = obj.terms(W)
    assert t.v1 > 0 and t.v2 > 0
    np.testing.assert_allclose(t.gradient, t.v1p / t.v1 + t.v2p / t.v2 - 2 * t.v3p / t.v3)
    np.testing.assert_allclose(gradient(Xw, W, IcaConfig(alpha=0.5)), t.gradient)


def test_gradient_step_descends():
    Xw = standardize(_sources(200, seed=4))
    obj = Contrast(Xw, IcaConfig(alpha=-1.0))
    W = np.diag([1.0, 0.8])
    G = obj.gradient(W)
    for m, l in [(0, 0), (1, 1), (0, 1)]:
        Ws = W.copy()
        Ws[m, l] -= 1e-4 * np.sign(G[m, l])
        assert obj.value(Ws) < obj.value(W)


def test_max_iter_zero_is_passthrough():
    X = datagen.mix(_sources(200), datagen.preset_2x2())[0]
    state, Y = run(X, IcaConfig(max_iter=0))
    np.testing.assert_array_equal(state.W, np.eye(2))
    np.testing.assert_array_equal(Y, center_whiten(X)[0])
    assert state.iteration == 0 and len(state.divergence_trace) == 1


def test_rows_unit_norm_after_every_iteration():
    X = datagen.mix(_sources(150), datagen.preset_2x2())[0]
    norms = []
    run(X, IcaConfig(max_iter=15, epsilon=0.0), callback=lambda s: norms.append(np.linalg.norm(s.W, axis=1)))
    assert len(norms) == 15
    assert np.max(np.abs(np.array(norms) - 1.0)) < 1e-12


def test_run_is_deterministic():
    X = datagen.mix(_sources(150, seed=2), datagen.preset_2x2())[0]
    cfg = IcaConfig(max_iter=10, epsilon=0.0)
    a, Ya = run(X, cfg)
    b, Yb = run(X, cfg)
    assert a.divergence_trace == b.divergence_trace
    np.testing.assert_array_equal(Ya, Yb)


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_near_fixed_point_start_stops_quickly(seed):
    # exactly decorrelated sources with distinct variances: whitening is a
    # pure scaling, so W = I already separates
    S = _sources(400, seed)
    S = S - S.mean(axis=1, keepdims=True)
    S[1] -= (S[1] @ S[0]) / (S[0] @ S[0]) * S[0]
    X = np.diag([2.0, 1.0]) @ standardize(S)
    state, _ = run(X, IcaConfig(max_iter=50))
    np.testing.assert_allclose(state.whitening.matrix, np.diag([0.5, 1.0]), atol=1e-12)
    assert state.converged
    assert state.iteration <= 5
    assert state.divergence_trace[0] - min(state.divergence_trace) < 1e-3


def test_trace_finite_and_backtracking_limits_upticks():
    X = datagen.mix(_sources(200, seed=6), datagen.preset_2x2())[0]
    state, _ = run(X, IcaConfig(max_iter=40, epsilon=0.0, gamma=2.0))
    tr = np.array(state.divergence_trace)
    assert np.all(np.isfinite(tr))
    assert np.all(tr[1:] - tr[:-1] <= 0.1 * np.abs(tr[:-1]) + 1e-15)


def test_converged_tangential_gradient_is_small():
    # the rows are renormalized each step, so only the part of the gradient
    # tangent to the unit-norm rows has to vanish at a constrained minimum
    X = datagen.mix(_sources(300, seed=7), datagen.preset_2x2())[0]
    cfg = IcaConfig(max_iter=400, epsilon=1e-7)
    state, _ = run(X, cfg)
    Xw, _ = center_whiten(X)
    W = state.W
    G = Contrast(Xw, cfg).gradient(W)
    tang = G - np.sum(G * W, axis=1, keepdims=True) * W
    assert np.linalg.norm(tang) < 10 * IcaConfig().epsilon


def test_non_finite_contrast_raises(monkeypatch):
    X = datagen.mix(_sources(60), datagen.preset_2x2())[0]
    calls = []

    def value(self, W):
        calls.append(1)
        return 1.0 if len(calls) == 1 else float("nan")

    monkeypatch.setattr(Contrast, "value", value)
    with pytest.raises(DivergenceError, match="iteration 1"):
        run(X, IcaConfig(max_iter=5))


def test_config_validation():
    with pytest.raises(ValueError):
        IcaConfig(gamma=0)
    with pytest.raises(ValueError):
        IcaConfig(max_iter=-1)
    with pytest.raises(ValueError):
        IcaConfig(objective="kl")
    assert IcaConfig(objective="cs").objective == "cs"
