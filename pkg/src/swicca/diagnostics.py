"""Numeric audit of the SWICCA error chain.

Truth for a window ``X`` (``w x p``) is its rank-``r`` SVD, so ``X V = U S``
holds exactly and any estimate ``V_hat = V + D`` gives
``X V_hat = U S + X D``. Every quantity below is computed from that split:
the per-column errors of the singular values, left vectors and reciprocals,
the perturbation of ``C = V_x U_x^T U_y V_y^T`` and of
``Sigma^-1/2 ~ V S^-1 V^T``, the singular-subspace bound for ``C``, and the
final direction errors after orthogonal alignment.

Bounds that need a positive denominator are reported as ``inf`` (and
flagged) when the denominator is below ``DENOM_TOL``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .estimator import window_estimate
from .linalg import as_matrix, procrustes, thin_svd

DENOM_TOL = 1e-8
SLACK = 1e-9


@dataclass
class ColumnBound:
    """Per-component ``actual`` and ``bound``; ``flag`` marks a column whose
    bound is infinite or whose ``min{., sigma}`` branch is not guaranteed."""
    actual: np.ndarray
    bound: np.ndarray
    flag: np.ndarray

    def holds(self, slack: float = SLACK) -> bool:
        return bool(np.all(self.actual <= self.bound + slack))


def _split(X, V_true, V_est, S_true):
    X = as_matrix(X, "X")
    V = as_matrix(V_true, "V_true")
    Vh = as_matrix(V_est, "V_est")
    S = np.asarray(S_true, dtype=np.float64).reshape(-1)
    if V.shape != Vh.shape or V.shape[0] != X.shape[1] or S.shape[0] != V.shape[1]:
        raise InputError(f"shape mismatch: X {X.shape}, V_true {V.shape}, "
                         f"V_est {Vh.shape}, S_true {S.shape}")
    XD = X @ (Vh - V)
    xd = np.linalg.norm(XD, axis=0)
    return X, V, Vh, S, xd


def _denoms(S, xd):
    d = np.abs(S - xd)
    bad = d < DENOM_TOL
    return d, bad


def sigma_error_bound(X, V_true, V_est, S_true) -> ColumnBound:
    """``|sigma_i - sigma_hat_i| <= min{||(X D)_i||, sigma_i}``."""
    X, V, Vh, S, xd = _split(X, V_true, V_est, S_true)
    shat = np.linalg.norm(X @ Vh, axis=0)
    return ColumnBound(np.abs(S - shat), np.minimum(xd, S), xd > S)


def u_error_bound(X, V_true, V_est, S_true) -> ColumnBound:
    """``||u_i - u_hat_i|| <= (||(X D)_i|| + min{||(X D)_i||, sigma_i}) / |sigma_i - ||(X D)_i|||``."""
    X, V, Vh, S, xd = _split(X, V_true, V_est, S_true)
    U = (X @ V) / S
    L = X @ Vh
    Uh = L / np.linalg.norm(L, axis=0)
    actual = np.linalg.norm(U - Uh, axis=0)
    d, bad = _denoms(S, xd)
    bound = np.where(bad, np.inf, (xd + np.minimum(xd, S)) / np.where(bad, 1.0, d))
    return ColumnBound(actual, bound, bad | (xd > S))


def inv_sigma_error_bound(X, V_true, V_est, S_true) -> ColumnBound:
    """``|1/sigma_i - 1/sigma_hat_i| <= min{||(X D)_i||, sigma_i} / (sigma_i |sigma_i - ||(X D)_i|||)``."""
    X, V, Vh, S, xd = _split(X, V_true, V_est, S_true)
    shat = np.linalg.norm(X @ Vh, axis=0)
    actual = np.abs(1.0 / S - 1.0 / shat)
    d, bad = _denoms(S, xd)
    bound = np.where(bad, np.inf, np.minimum(xd, S) / (S * np.where(bad, 1.0, d)))
    return ColumnBound(actual, bound, bad | (xd > S))


def _lowrank_norms(A1, M1, B1, A2, M2, B2) -> tuple[float, float]:
    """Frobenius and spectral norm of ``A1 M1 B1^T - A2 M2 B2^T`` without
    forming the full matrix: QR the stacked outer factors and take the norms
    of the small core."""
    Qa, Ra = np.linalg.qr(np.hstack([A1, A2]))
    Qb, Rb = np.linalg.qr(np.hstack([B1, B2]))
    K = np.zeros((A1.shape[1] + A2.shape[1], B1.shape[1] + B2.shape[1]))
    K[: M1.shape[0], : M1.shape[1]] = M1
    K[M1.shape[0]:, M1.shape[1]:] = -M2
    core = Ra @ K @ Rb.T
    return float(np.linalg.norm(core)), float(np.linalg.norm(core, 2))


@dataclass
class SideReport:
    delta_F: float
    xdelta_F: float
    sigma: ColumnBound
    u: ColumnBound
    inv_sigma: ColumnBound
    delta_S_F: float
    delta_S_bound: float
    delta_U_F: float
    delta_U_bound: float
    delta_U_bound_cols: float
    delta_Sinv_F: float
    delta_Sinv_bound: float
    delta_Sinv_bound_cols: float
    delta_SigmaInvHalf_F: float
    delta_SigmaInvHalf_bound: float
    eta_Sigma: float
    eta_C_side: float
    min_denominator: float


def _side(X, V, Vh, c_sigma: float | None) -> tuple[SideReport, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    XV = X @ V
    S = np.linalg.norm(XV, axis=0)
    U = XV / S
    L = X @ Vh
    Sh = np.linalg.norm(L, axis=0)
    Uh = L / Sh
    D = Vh - V
    xd_cols = np.linalg.norm(X @ D, axis=0)
    dF = float(np.linalg.norm(D))
    xdF = float(np.linalg.norm(xd_cols))
    r = V.shape[1]
    sig = sigma_error_bound(X, V, Vh, S)
    ub = u_error_bound(X, V, Vh, S)
    ib = inv_sigma_error_bound(X, V, Vh, S)
    c_sigma = float(S.min()) if c_sigma is None else float(c_sigma)
    dmin = float(np.min(np.abs(S - xd_cols)))
    capped = min(xdF, r * float(S.max()))
    inf_den = dmin < DENOM_TOL
    dS = float(np.linalg.norm(Sh - S))
    dU = float(np.linalg.norm(Uh - U))
    dSi = float(np.linalg.norm(1.0 / Sh - 1.0 / S))
    dU_bound = np.inf if inf_den else (xdF + capped) / dmin
    dSi_bound = np.inf if inf_den else capped / (c_sigma * dmin)
    Sinv_F = float(np.linalg.norm(1.0 / S))
    sih_F, _ = _lowrank_norms(Vh, np.diag(1.0 / Sh), Vh, V, np.diag(1.0 / S), V)
    sih_bound = (2 * Sinv_F * dF + 2 * dSi * dF + dSi + Sinv_F * dF ** 2 + dSi * dF ** 2)
    eta_sigma = max(xdF, xdF * dF, dF, xdF * dF ** 2, dF ** 2)
    eta_c_side = np.inf if inf_den else 2 * xdF * (1 + dF) / dmin + dF
    rep = SideReport(
        delta_F=dF, xdelta_F=xdF, sigma=sig, u=ub, inv_sigma=ib,
        delta_S_F=dS, delta_S_bound=capped,
        delta_U_F=dU, delta_U_bound=dU_bound,
        delta_U_bound_cols=float(np.linalg.norm(ub.bound)),
        delta_Sinv_F=dSi, delta_Sinv_bound=dSi_bound,
        delta_Sinv_bound_cols=float(np.linalg.norm(ib.bound)),
        delta_SigmaInvHalf_F=sih_F, delta_SigmaInvHalf_bound=sih_bound,
        eta_Sigma=eta_sigma, eta_C_side=eta_c_side, min_denominator=dmin,
    )
    return rep, U, S, Uh, Sh


@dataclass
class ErrorReport:
    x: SideReport
    y: SideReport
    delta_C_F: float
    delta_C_2: float
    delta_C_bound: float
    eta_C: float
    eta_Cxy: float
    eta_WH: float
    sigma_C: np.ndarray
    delta_W_F: float
    delta_H_F: float
    svd_perturb_bound_W: float
    svd_perturb_bound_H: float
    F_err: float
    G_err: float
    L_err: float
    flags: list = field(default_factory=list)

    def pairs(self) -> list[tuple[str, float, float]]:
        """Every (name, actual, bound) inequality in the report."""
        out = []
        for side, s in (("x", self.x), ("y", self.y)):
            for name, cb in (("sigma", s.sigma), ("u", s.u), ("inv_sigma", s.inv_sigma)):
                for i, (a, b) in enumerate(zip(cb.actual, cb.bound)):
                    out.append((f"{name}_err_{side}[{i + 1}]", float(a), float(b)))
            out += [
                (f"delta_S{side}_F", s.delta_S_F, s.delta_S_bound),
                (f"delta_U{side}_F", s.delta_U_F, s.delta_U_bound),
                (f"delta_U{side}_F_cols", s.delta_U_F, s.delta_U_bound_cols),
                (f"delta_S{side}Inv_F", s.delta_Sinv_F, s.delta_Sinv_bound),
                (f"delta_S{side}Inv_F_cols", s.delta_Sinv_F, s.delta_Sinv_bound_cols),
                (f"delta_Sigma{side}InvHalf_F", s.delta_SigmaInvHalf_F, s.delta_SigmaInvHalf_bound),
            ]
        out += [
            ("delta_C_F", self.delta_C_F, self.delta_C_bound),
            ("delta_W_F", self.delta_W_F, self.svd_perturb_bound_W),
            ("delta_H_F", self.delta_H_F, self.svd_perturb_bound_H),
        ]
        return out

    def violations(self, slack: float = SLACK) -> list[tuple[str, float, float]]:
        return [(n, a, b) for n, a, b in self.pairs() if not a <= b + slack]

    def rows(self) -> list[tuple[str, float]]:
        """Flat key/value listing for CSV output."""
        rows = []
        for side, s in (("x", self.x), ("y", self.y)):
            rows += [(f"delta_{side}_F", s.delta_F), (f"{side}delta_F", s.xdelta_F),
                     (f"eta_Sigma_{side}", s.eta_Sigma)]
        for name, a, b in self.pairs():
            rows += [(f"{name}.actual", a), (f"{name}.bound", b)]
        rows += [("delta_C_2", self.delta_C_2), ("eta_C", self.eta_C), ("eta_Cxy", self.eta_Cxy),
                 ("eta_WH", self.eta_WH)]
        rows += [(f"sigma_C[{i + 1}]", float(v)) for i, v in enumerate(self.sigma_C)]
        rows += [("F_err", self.F_err), ("G_err", self.G_err), ("L_err", self.L_err)]
        return rows


def _aligned(Ahat, A) -> float:
    return float(np.linalg.norm(Ahat @ procrustes(Ahat, A) - A))


def aggregate_bounds(X, Y, truth, estimates, c_sigma: tuple | None = None,
                     c_rho: float = 0.0) -> ErrorReport:
    """Full error report for one window.

    ``truth`` is ``(V_x, V_y)``, right singular vectors of the window (so
    ``X V_x`` has orthogonal columns), ``estimates`` is ``(V_x_hat, V_y_hat)``
    of the same shapes. ``c_sigma`` optionally fixes the per-side lower bound
    on singular values (defaults to the smallest true one).
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise InputError(f"X and Y have {X.shape[0]} and {Y.shape[0]} rows")
    Vx, Vy = (as_matrix(v, "truth") for v in truth)
    Vxh, Vyh = (as_matrix(v, "estimate") for v in estimates)
    cx, cy = (None, None) if c_sigma is None else c_sigma
    sx, Ux, Sx, Uxh, Sxh = _side(X, Vx, Vxh, cx)
    sy, Uy, Sy, Uyh, Syh = _side(Y, Vy, Vyh, cy)
    flags = []
    for side, s in (("x", sx), ("y", sy)):
        if s.min_denominator < DENOM_TOL:
            flags.append(f"{side}: vanishing denominator, bounds set to inf")
        if np.any(s.sigma.flag):
            flags.append(f"{side}: ||(X D)_i|| exceeds sigma_i, min-branch not guaranteed")

    M = Ux.T @ Uy
    Mh = Uxh.T @ Uyh
    dC_F, dC_2 = _lowrank_norms(Vxh, Mh, Vyh, Vx, M, Vy)
    eta_cxy = max(sx.eta_C_side, sy.eta_C_side)
    dC_bound = 2 * eta_cxy + eta_cxy ** 2
    eta_c = max(sx.xdelta_F, sy.xdelta_F, sx.delta_F, sy.delta_F,
                sx.xdelta_F * sx.delta_F, sy.xdelta_F * sy.delta_F)
    eta_wh = max(eta_c, eta_c ** 2, eta_c ** 3)

    # singular subspaces of C = Vx M Vy^T; with orthonormal Vx, Vy they are
    # Vx A and Vy B for M = A D B^T. C_hat is low rank too but its outer
    # factors need not be orthonormal, so go through a QR.
    r_c = min(M.shape)
    A, sC, B = thin_svd(M, r_c)
    W, H = Vx @ A, Vy @ B
    Qx, Rx = np.linalg.qr(Vxh)
    Qy, Ry = np.linalg.qr(Vyh)
    Ah, _, Bh = thin_svd(Rx @ Mh @ Ry.T, r_c)
    Wh, Hh = Qx @ Ah, Qy @ Bh
    dW = _aligned(Wh, W)
    dH = _aligned(Hh, H)
    if sC[-1] < max(c_rho, DENOM_TOL):
        flags.append("assumption violated: smallest singular value of C below c_rho")
        svd_bound = np.inf
    else:
        svd_bound = 2 ** 1.5 * (2 * sC[0] + dC_2) * dC_F / sC[-1] ** 2

    ref = window_estimate(X @ Vx, Y @ Vy, Vx, Vy)
    est = window_estimate(X @ Vxh, Y @ Vyh, Vxh, Vyh)
    k = min(ref.k, est.k)
    F_err = _aligned(est.F[:, :k], ref.F[:, :k])
    G_err = _aligned(est.G[:, :k], ref.G[:, :k])
    L_err = float(np.linalg.norm(est.corrs[:k] - ref.corrs[:k]))
    return ErrorReport(sx, sy, dC_F, dC_2, dC_bound, eta_c, eta_cxy, eta_wh, sC,
                       dW, dH, svd_bound, svd_bound, F_err, G_err, L_err, flags)


# -- instances ------------------------------------------------------------------

def window_truth(X, r: int) -> np.ndarray:
    """Rank-``r`` right singular vectors of the window."""
    return thin_svd(X, r).V


def perturb(V: np.ndarray, eps: float, rng: np.random.Generator, direction=None) -> np.ndarray:
    """``V + D`` with ``||D||_F = eps``; ``direction`` fixes the shape of ``D``."""
    E = rng.standard_normal(V.shape) if direction is None else np.asarray(direction, dtype=np.float64)
    return V + eps * E / np.linalg.norm(E)


def model_instance(seed: int, w: int = 50, **model_kw):
    """A window of ``w`` rows from the simulation model plus its window truth."""
    from .simulation import ModelConfig, gen_stream, make_truth

    cfg = ModelConfig(**model_kw)
    rng = np.random.default_rng(seed)
    X, Y = gen_stream(make_truth(cfg, rng), rng, n=w)
    return X, Y, window_truth(X, cfg.r_x), window_truth(Y, cfg.r_y), rng


def report_for(seed: int, eps: float, w: int = 50, **model_kw) -> ErrorReport:
    """Perturb the window truth of a model instance by ``eps`` on each side."""
    X, Y, Vx, Vy, rng = model_instance(seed, w, **model_kw)
    return aggregate_bounds(X, Y, (Vx, Vy), (perturb(Vx, eps, rng), perturb(Vy, eps, rng)))
