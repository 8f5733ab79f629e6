import numpy as np
import pytest

from oracles import cca_eigen_oracle, column_affinities
from swicca.errors import InputError, RankError
from swicca.simulation import ModelConfig, gen_stream, make_truth
from swicca.static_cca import fit_cca, fit_icca, fit_icca_scalable


def model_data(seed, **kw):
    cfg = ModelConfig(**kw)
    rng = np.random.default_rng(seed)
    truth = make_truth(cfg, rng)
    X, Y = gen_stream(truth, rng)
    return X, Y, truth


def test_self_correlation():
    X = np.random.default_rng(0).standard_normal((200, 4))
    est = fit_cca(X, X)
    np.testing.assert_allclose(est.corrs, 1.0, atol=1e-10)
    np.testing.assert_allclose(est.F, est.G, atol=1e-8)


def test_independent_null():
    rng = np.random.default_rng(1)
    for _ in range(50):
        est = fit_cca(rng.standard_normal((5000, 3)), rng.standard_normal((5000, 3)))
        assert np.all(est.corrs <= 0.1)


def test_planted_correlations_match_eigen_oracle():
    X, Y, _ = model_data(2, p=4, q=3, r_x=4, r_y=3, n=2000, trials=1)
    est = fit_cca(X, Y)
    assert abs(est.corrs[0] - 0.8) <= 0.05 and abs(est.corrs[1] - 0.5) <= 0.05
    F, G, corrs = cca_eigen_oracle(X, Y)
    assert np.all(column_affinities(est.F, F) >= 0.95)
    assert np.all(column_affinities(est.G, G) >= 0.95)
    np.testing.assert_allclose(est.corrs, corrs, atol=1e-8)


def test_unit_columns_and_ordering():
    X, Y, _ = model_data(3, p=6, q=5, r_x=6, r_y=5, n=500, trials=1)
    est = fit_cca(X, Y)
    np.testing.assert_allclose(np.linalg.norm(est.F, axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(est.G, axis=0), 1.0, atol=1e-10)
    assert np.all(np.diff(est.corrs) <= 0)
    assert np.all((est.corrs >= 0) & (est.corrs <= 1 + 1e-8))


def test_canonical_variates_uncorrelated():
    X, Y, _ = model_data(4, p=5, q=4, r_x=5, r_y=4, n=800, trials=1)
    est = fit_cca(X, Y)
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    for A, B in ((Xc @ est.F, Xc @ est.F), (Yc @ est.G, Yc @ est.G), (Xc @ est.F, Yc @ est.G)):
        R = np.corrcoef(A.T, B.T)[: A.shape[1], A.shape[1]:]
        off = R - np.diag(np.diag(R))
        assert np.max(np.abs(off)) <= 1e-6
    # the paired variates achieve the reported correlations
    R = np.corrcoef((Xc @ est.F).T, (Yc @ est.G).T)[:4, 4:]
    np.testing.assert_allclose(np.diag(R), est.corrs, atol=1e-10)


def test_affine_invariance_of_correlations():
    rng = np.random.default_rng(5)
    X, Y, _ = model_data(5, p=4, q=3, r_x=4, r_y=3, n=600, trials=1)
    T = np.eye(4) + 0.3 * rng.standard_normal((4, 4))
    assert np.linalg.cond(T) < 20
    a, b = fit_cca(X, Y), fit_cca(X @ T, Y)
    np.testing.assert_allclose(a.corrs, b.corrs, atol=1e-6)


def test_rank_deficient_advises_icca():
    X, Y, _ = model_data(6, p=8, q=6, r_x=2, r_y=3, n=300, trials=1)
    with pytest.raises(RankError, match="ICCA"):
        fit_cca(X, Y)
    with pytest.raises(RankError):
        fit_cca(X[:5], Y[:5])
    with pytest.raises(InputError):
        fit_cca(X, Y[:-1])


def test_icca_without_trimming_equals_cca():
    X, Y, _ = model_data(7, p=5, q=4, r_x=5, r_y=4, n=400, trials=1)
    a, b = fit_cca(X, Y), fit_icca(X, Y, 5, 4)
    np.testing.assert_allclose(b.corrs, a.corrs, atol=1e-10)
    np.testing.assert_allclose(b.F, a.F, atol=1e-10)
    np.testing.assert_allclose(b.G, a.G, atol=1e-10)


def test_icca_beats_cca_on_noisy_low_rank():
    icca_aff, cca_aff = [], []
    for seed in range(50):
        X, Y, truth = model_data(100 + seed, noise=True)
        F, _, _ = truth.cca()
        icca_aff.append(column_affinities(fit_icca(X, Y, 2, 3).F[:, :1], F[:, :1])[0])
        cca_aff.append(column_affinities(fit_cca(X, Y).F[:, :1], F[:, :1])[0])
    assert np.mean(icca_aff) > np.mean(cca_aff)


def test_icca_rank_one():
    X, Y, _ = model_data(8, n=1000)
    est = fit_icca(X, Y, 1, 1)
    assert est.F.shape == (100, 1)
    assert abs(est.corrs[0] - 0.8) <= 0.1


@pytest.mark.parametrize("seed", range(25))
def test_scalable_matches_icca(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 80))
    p, q = int(rng.integers(3, 30)), int(rng.integers(3, 30))
    r_x = int(rng.integers(1, min(n, p) + 1))
    r_y = int(rng.integers(1, min(n, q) + 1))
    X = rng.standard_normal((n, p))
    Y = X[:, :1] @ rng.standard_normal((1, q)) + rng.standard_normal((n, q))
    a, b = fit_icca(X, Y, r_x, r_y), fit_icca_scalable(X, Y, r_x, r_y)
    np.testing.assert_allclose(b.corrs, a.corrs, atol=1e-8)
    np.testing.assert_allclose(b.F, a.F, atol=1e-8)
    np.testing.assert_allclose(b.G, a.G, atol=1e-8)


def test_scalable_rank_one_is_inner_product():
    rng = np.random.default_rng(9)
    X, Y = rng.standard_normal((40, 6)), rng.standard_normal((40, 5))
    est = fit_icca_scalable(X, Y, 1, 1, center=False)
    ux = np.linalg.svd(X, full_matrices=False)[0][:, 0]
    uy = np.linalg.svd(Y, full_matrices=False)[0][:, 0]
    assert est.corrs[0] == pytest.approx(abs(ux @ uy), abs=1e-12)


def test_requested_k_and_bad_ranks():
    X, Y, _ = model_data(10, n=300)
    assert fit_icca_scalable(X, Y, 2, 3, k=1).k == 1
    with pytest.raises(InputError):
        fit_icca(X, Y, 0, 3)
    with pytest.raises(InputError):
        fit_icca_scalable(X, Y, 2, 3, k=3)
