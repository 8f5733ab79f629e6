import numpy as np
import pytest

from swicca.errors import ConfigError, NotReady
from swicca.estimator import SlidingWindow, Swicca, SwiccaConfig, window_estimate
from swicca.linalg import thin_svd
from swicca.simulation import ModelConfig, gen_stream, make_truth
from swicca.static_cca import fit_icca_scalable
from swicca.streaming_pca import MeanMode


def stream(seed=0, **kw):
    cfg = ModelConfig(**kw)
    rng = np.random.default_rng(seed)
    truth = make_truth(cfg, rng)
    X, Y = gen_stream(truth, rng)
    return X, Y, truth


def test_require_lines_enforced():
    with pytest.raises(ConfigError, match="max"):
        SwiccaConfig(10, 10, 2, 5, w=4)
    with pytest.raises(ConfigError, match="r_x"):
        SwiccaConfig(3, 10, 4, 1, w=10)
    with pytest.raises(ConfigError):
        SwiccaConfig(10, 10, 2, 2, w=5, window_mode="loadings", mean_mode=MeanMode.window())


def test_not_ready_until_max_rank():
    X, Y, _ = stream(n=20)
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=10))
    with pytest.raises(NotReady):
        s.current()
    assert s.update(X[0], Y[0]) is None
    assert s.update(X[1], Y[1]) is None
    est = s.update(X[2], Y[2])
    assert est is not None and est.meta["provisional"]
    assert est.k == 2


def test_init_and_stream_deterministic():
    X, Y, _ = stream(n=100)
    cfg = SwiccaConfig(100, 50, 2, 3, w=25, backend="grouse", seed=5)
    a, b = Swicca(cfg), Swicca(cfg)
    assert np.array_equal(a.pca_x.basis, b.pca_x.basis)
    for x, y in zip(X, Y):
        ea, eb = a.update(x, y), b.update(x, y)
    assert np.array_equal(ea.F, eb.F) and np.array_equal(ea.corrs, eb.corrs)


def test_current_is_idempotent_read():
    X, Y, _ = stream(n=40)
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=10))
    for x, y in zip(X, Y):
        last = s.update(x, y)
    a, b = s.current(), s.current()
    assert np.array_equal(a.F, last.F) and np.array_equal(a.G, last.G)
    assert np.array_equal(a.F, b.F) and np.array_equal(a.corrs, b.corrs)
    a.F[:] = 0
    assert not np.array_equal(s.current().F, a.F)


@pytest.mark.parametrize("noise", [False, True])
def test_pinned_bases_equal_scalable_icca(noise):
    X, Y, _ = stream(1, n=200, noise=noise)
    Xw, Yw = X[-50:], Y[-50:]
    Vx = thin_svd(Xw, 2).V
    Vy = thin_svd(Yw, 3).V
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=50, backend="fixed"), basis_x=Vx, basis_y=Vy)
    for x, y in zip(Xw, Yw):
        est = s.update(x, y)
    ref = fit_icca_scalable(Xw, Yw, 2, 3, center=False)
    np.testing.assert_allclose(est.corrs, ref.corrs, atol=1e-8)
    np.testing.assert_allclose(est.F, ref.F, atol=1e-8)
    np.testing.assert_allclose(est.G, ref.G, atol=1e-8)


def self_stream(corr_mode):
    X, _, truth = stream(2, p=30, q=30, r_x=3, r_y=3, rho=(0.8, 0.5), n=300)
    V = truth.Vx_start
    s = Swicca(SwiccaConfig(30, 30, 3, 3, w=40, backend="fixed", corr_mode=corr_mode),
               basis_x=V, basis_y=V)
    for x in X:
        est = s.update(x, x)
    return est, s


def test_self_stream_empirical_corrs_are_one():
    est, _ = self_stream("empirical")
    assert np.all(est.corrs >= 0.99)
    np.testing.assert_allclose(est.F, est.G, atol=1e-10)


def test_self_stream_d_corrs_are_one():
    est, _ = self_stream("d")
    assert np.all(est.corrs >= 0.99)


def test_self_stream_d_corrs_are_gram_eigenvalues():
    est, s = self_stream("d")
    Xw, _ = s.window.arrays()
    U = Xw @ s.pca_x.basis
    U = U / np.linalg.norm(U, axis=0)
    ev = np.sort(np.linalg.eigvalsh(U.T @ U))[::-1]
    np.testing.assert_allclose(est.corrs, np.clip(ev, 0, 1), atol=1e-10)
    assert est.meta["clipped"]


def test_estimate_depends_on_last_window_only():
    X, Y, _ = stream(3, n=300)
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=30, backend="grouse"))
    for x, y in zip(X, Y):
        s.update(x, y)
    Vx, Vy = s.pca_x.basis, s.pca_y.basis
    replay = window_estimate(X[-30:] @ Vx, Y[-30:] @ Vy, Vx, Vy)
    est = s.current()
    np.testing.assert_allclose(est.F, replay.F, atol=1e-10)
    np.testing.assert_allclose(est.corrs, replay.corrs, atol=1e-10)


def test_loadings_mode_matches_samples_mode_on_static_basis():
    X, Y, truth = stream(4, n=150)
    kw = dict(backend="fixed")
    a = Swicca(SwiccaConfig(100, 50, 2, 3, w=25, **kw), truth.Vx_start, truth.Vy_start)
    b = Swicca(SwiccaConfig(100, 50, 2, 3, w=25, window_mode="loadings", **kw),
               truth.Vx_start, truth.Vy_start)
    for x, y in zip(X, Y):
        ea, eb = a.update(x, y), b.update(x, y)
    np.testing.assert_allclose(ea.F, eb.F, atol=1e-10)
    np.testing.assert_allclose(ea.G, eb.G, atol=1e-10)
    np.testing.assert_allclose(ea.corrs, eb.corrs, atol=1e-10)
    assert b.nbytes() < a.nbytes()


@pytest.mark.parametrize("mode", ["samples", "loadings"])
@pytest.mark.parametrize("corr", ["d", "empirical"])
def test_output_invariants(mode, corr):
    X, Y, _ = stream(5, n=200, noise=True)
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=25, backend="grouse", window_mode=mode, corr_mode=corr))
    for x, y in zip(X, Y):
        est = s.update(x, y)
        if est is None:
            continue
        assert est.k <= 2
        assert np.all((est.corrs >= 0) & (est.corrs <= 1))
        np.testing.assert_allclose(np.linalg.norm(est.F, axis=0), 1.0, atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(est.G, axis=0), 1.0, atol=1e-10)


def test_empirical_corr_is_window_pearson():
    X, Y, _ = stream(6, n=120)
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=40, backend="isvd", corr_mode="empirical"))
    for x, y in zip(X, Y):
        est = s.update(x, y)
    Xw, Yw = X[-40:], Y[-40:]
    for k in range(est.k):
        r = np.corrcoef(Xw @ est.F[:, k], Yw @ est.G[:, k])[0, 1]
        assert est.corrs[k] == pytest.approx(abs(r), abs=1e-10)


def test_degenerate_loading_column_dropped():
    X, Y, truth = stream(7, n=60)
    Vx = np.hstack([truth.Vx_start[:, :1], np.linalg.qr(
        np.hstack([truth.Vx_start, np.random.default_rng(0).standard_normal((100, 1))]))[0][:, 2:]])
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=20, backend="fixed"), Vx, truth.Vy_start)
    for x, y in zip(X, Y):
        est = s.update(x, y)
    assert est.k == 1 and est.meta["dropped_x"] == 1


def test_ewma_mean_tracking_removes_offset():
    X, Y, truth = stream(8, n=400)
    off_x = np.full(100, 0.5)
    off_y = np.full(50, -0.2)
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=50, backend="isvd", mean_mode=MeanMode.ewma(0.05)))
    for x, y in zip(X, Y):
        est = s.update(x + off_x, y + off_y)
    assert np.linalg.norm(s.pca_x.mean - off_x) < 0.05 * np.linalg.norm(off_x)
    assert np.all((est.corrs >= 0) & (est.corrs <= 1))


def test_window_mean_centers_window():
    X, Y, _ = stream(9, n=100)
    s = Swicca(SwiccaConfig(100, 50, 2, 3, w=30, backend="isvd", mean_mode=MeanMode.window()))
    for x, y in zip(X, Y):
        s.update(x + 3.0, y)
    Xw, _ = s.window.arrays()
    np.testing.assert_allclose(s.pca_x.mean, Xw.mean(axis=0))


def test_sliding_window_fifo():
    w = SlidingWindow(3, 1, 1)
    for v in range(5):
        w.append([v], [-v])
    xs, ys = w.arrays(ordered=True)
    assert xs[:, 0].tolist() == [2, 3, 4] and ys[:, 0].tolist() == [-2, -3, -4]
    assert len(w) == 3
