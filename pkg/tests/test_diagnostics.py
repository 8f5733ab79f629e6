import math

import numpy as np
import pytest

from swicca.diagnostics import (
    aggregate_bounds,
    inv_sigma_error_bound,
    model_instance,
    perturb,
    report_for,
    sigma_error_bound,
    u_error_bound,
    window_truth,
)


def rotation_case(theta=0.1, sigma=2.0):
    # two identical rows sigma/sqrt(2) e1^T: one singular value sigma, right vector e1
    X = np.array([[1.0, 0.0], [1.0, 0.0]]) * sigma / math.sqrt(2)
    V = np.array([[1.0], [0.0]])
    Vh = np.array([[math.cos(theta)], [math.sin(theta)]])
    return X, V, Vh, np.array([sigma])


def test_zero_perturbation_gives_zero_errors():
    X, Y, Vx, Vy, _ = model_instance(0)
    rep = aggregate_bounds(X, Y, (Vx, Vy), (Vx, Vy))
    for name, actual, _ in rep.pairs():
        assert actual == pytest.approx(0.0, abs=1e-10), name
    assert rep.eta_C == 0 and rep.x.eta_Sigma == 0 and rep.eta_WH == 0
    assert rep.F_err < 1e-10 and rep.G_err < 1e-10 and rep.L_err < 1e-10


def test_rotation_sigma_closed_form():
    X, V, Vh, S = rotation_case()
    cb = sigma_error_bound(X, V, Vh, S)
    expected = 2 * (1 - math.cos(0.1))
    assert cb.actual[0] == pytest.approx(expected, rel=1e-12)
    # X D = (cos - 1) X e1, so the bound is attained
    assert cb.bound[0] == pytest.approx(expected, rel=1e-12)
    assert cb.holds()


def test_rotation_u_and_inverse_closed_form():
    X, V, Vh, S = rotation_case()
    xd = 2 * (1 - math.cos(0.1))
    u = u_error_bound(X, V, Vh, S)
    assert u.actual[0] == pytest.approx(0.0, abs=1e-15)
    assert u.bound[0] == pytest.approx(2 * xd / (2 - xd), rel=1e-12)
    inv = inv_sigma_error_bound(X, V, Vh, S)
    assert inv.actual[0] == pytest.approx(1 / (2 * math.cos(0.1)) - 0.5, rel=1e-12)
    assert inv.bound[0] == pytest.approx(xd / (2 * (2 - xd)), rel=1e-12)
    assert u.holds() and inv.holds()


def test_scalar_inverse_sigma():
    # sigma = 2 and sigma_hat = 2.1 via a scaled estimate
    X = np.array([[2.0]])
    cb = inv_sigma_error_bound(X, np.array([[1.0]]), np.array([[1.05]]), np.array([2.0]))
    assert cb.actual[0] == pytest.approx(0.5 - 1 / 2.1, abs=1e-15)
    assert cb.actual[0] == pytest.approx(0.0238095238, abs=1e-10)
    assert cb.holds()


def test_vanishing_denominator_reports_inf():
    X, V, _, S = rotation_case()
    Vh = V * 0.0 + np.array([[0.0], [1e-3]])  # X Vh = 0, so ||X D|| = sigma
    cb = u_error_bound(X, V, Vh + np.array([[1e-20], [0]]), S)
    assert np.isinf(cb.bound[0]) and cb.flag[0]


@pytest.mark.parametrize("eps", [1e-3, 1e-2, 1e-1])
def test_fuzzed_inequalities(eps):
    for seed in range(100):
        rep = report_for(seed, eps, noise=bool(seed % 2))
        assert not rep.violations(), (seed, rep.violations())


def test_eps_sweep_final_errors_shrink():
    X, Y, Vx, Vy, rng = model_instance(11)
    Ex = rng.standard_normal(Vx.shape)
    Ey = rng.standard_normal(Vy.shape)
    prev = None
    for eps in (1e-1, 1e-2, 1e-3):
        rep = aggregate_bounds(X, Y, (Vx, Vy), (perturb(Vx, eps, rng, Ex), perturb(Vy, eps, rng, Ey)))
        cur = (rep.F_err, rep.G_err)
        if prev is not None:
            assert cur[0] <= prev[0] and cur[1] <= prev[1]
        prev = cur


def test_eta_monotone_in_scale():
    X, Y, Vx, Vy, rng = model_instance(12)
    Ex = rng.standard_normal(Vx.shape)
    Ey = rng.standard_normal(Vy.shape)
    etas = []
    for eps in (1e-4, 1e-3, 1e-2, 1e-1):
        rep = aggregate_bounds(X, Y, (Vx, Vy), (perturb(Vx, eps, rng, Ex), perturb(Vy, eps, rng, Ey)))
        etas.append((rep.eta_C, rep.x.eta_Sigma, rep.y.eta_Sigma))
    assert np.all(np.diff(np.array(etas), axis=0) >= 0)


def test_delta_c_matches_dense_formation():
    X, Y, Vx, Vy, rng = model_instance(13, p=12, q=9)
    Vxh, Vyh = perturb(Vx, 0.05, rng), perturb(Vy, 0.05, rng)
    rep = aggregate_bounds(X, Y, (Vx, Vy), (Vxh, Vyh))

    def C(A, B, Vl, Vr):
        U1 = X @ A
        U1 = U1 / np.linalg.norm(U1, axis=0)
        U2 = Y @ B
        U2 = U2 / np.linalg.norm(U2, axis=0)
        return Vl @ U1.T @ U2 @ Vr.T

    dense = C(Vxh, Vyh, Vxh, Vyh) - C(Vx, Vy, Vx, Vy)
    assert rep.delta_C_F == pytest.approx(np.linalg.norm(dense), rel=1e-10)
    assert rep.delta_C_2 == pytest.approx(np.linalg.norm(dense, 2), rel=1e-10)


def test_report_rows_are_flat_floats():
    rep = report_for(1, 1e-2)
    rows = rep.rows()
    keys = [k for k, _ in rows]
    assert len(keys) == len(set(keys))
    assert "delta_C_F.actual" in keys and "eta_WH" in keys
    assert all(isinstance(v, float) for _, v in rows)


def test_window_truth_is_exact_factor():
    X, _, Vx, _, _ = model_instance(2)
    L = X @ Vx
    G = L.T @ L
    assert np.max(np.abs(G - np.diag(np.diag(G)))) < 1e-12
    np.testing.assert_allclose(window_truth(X, 2), Vx)


def test_final_errors_are_first_order_in_eps():
    # err / eps settles to a constant as eps -> 0: first-order perturbation
    X, Y, Vx, Vy, rng = model_instance(21)
    Ex, Ey = rng.standard_normal(Vx.shape), rng.standard_normal(Vy.shape)
    scaled = []
    for eps in (1e-5, 1e-6, 1e-7):
        rep = aggregate_bounds(X, Y, (Vx, Vy), (perturb(Vx, eps, rng, Ex), perturb(Vy, eps, rng, Ey)))
        scaled.append(np.array([rep.F_err, rep.G_err, rep.L_err]) / eps)
    np.testing.assert_allclose(scaled[1], scaled[0], rtol=1e-4)
    np.testing.assert_allclose(scaled[2], scaled[1], rtol=1e-4)
