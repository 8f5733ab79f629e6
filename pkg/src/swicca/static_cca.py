"""Batch CCA, informative (rank-trimmed) CCA, and the scalable ICCA route.

With the thin SVDs ``X = Ux Sx Vx^T`` and ``Y = Uy Sy Vy^T`` the CCA matrix is
``C = Vx Ux^T Uy Vy^T``. Directions are ``f_k ~ Vx Sx^-1 Vx^T w_k`` where
``w_k`` is the k-th left singular vector of ``C``; the scalable route never
builds ``C`` and instead takes the SVD of the small ``Ux^T Uy``.

Every returned direction has unit norm; correlations are reported separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, RankError
from .linalg import ThinSvd, as_matrix, normalize_columns, sign_canon, thin_svd

METHODS = ("full", "icca", "scalable", "swicca", "genoja")


@dataclass
class CcaEstimate:
    F: np.ndarray
    G: np.ndarray
    corrs: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.corrs.shape[0]

    def nbytes(self) -> int:
        return self.F.nbytes + self.G.nbytes + self.corrs.nbytes


def directions(V: np.ndarray, S: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Unit-norm columns of ``V diag(S)^-1 A``."""
    F, _, _ = normalize_columns(V @ (A / S[:, None]))
    return F


def canonical_pair(F: np.ndarray, G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sign canon on ``F``; ``G`` follows so each pair stays positively correlated."""
    return sign_canon(F, G)


def _pair(X, Y):
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return X, Y


def _center(X: np.ndarray) -> np.ndarray:
    return X - X.mean(axis=0)


def _factor(M: np.ndarray, r: int, name: str) -> ThinSvd:
    svd = thin_svd(M, r)
    if svd.S[0] == 0.0 or svd.S[-1] < 1e-10 * svd.S[0]:
        raise RankError(
            f"{name} is numerically rank deficient at rank {r} "
            f"(sigma_min/sigma_max = {svd.S[-1] / max(svd.S[0], 1e-300):.2e}); use ICCA with a lower rank"
        )
    return svd


def _check_k(k: int | None, kmax: int) -> int:
    if k is None:
        return kmax
    if not 1 <= k <= kmax:
        raise InputError(f"requested k={k} outside [1, {kmax}]")
    return k


def _via_c(sx: ThinSvd, sy: ThinSvd, k: int, method: str) -> CcaEstimate:
    C = sx.V @ (sx.U.T @ sy.U) @ sy.V.T
    W, L, H = thin_svd(C, k)
    # Sigma^-1/2 w = Vx Sx^-1 Vx^T w
    F = directions(sx.V, sx.S, sx.V.T @ W)
    G = directions(sy.V, sy.S, sy.V.T @ H)
    F, G = canonical_pair(F, G)
    return CcaEstimate(F, G, L, method)


def fit_cca(X, Y, center: bool = True, k: int | None = None) -> CcaEstimate:
    """Classical CCA of the row-paired samples ``X`` (n x p) and ``Y`` (n x q)."""
    X, Y = _pair(X, Y)
    n, p = X.shape
    q = Y.shape[1]
    if n <= max(p, q):
        raise RankError(f"full CCA needs n > max(p, q); got n={n}, p={p}, q={q}; use ICCA")
    if center:
        X, Y = _center(X), _center(Y)
    sx = _factor(X, p, "X")
    sy = _factor(Y, q, "Y")
    return _via_c(sx, sy, _check_k(k, min(p, q)), "full")


def _trimmed(X, Y, r_x, r_y, center):
    X, Y = _pair(X, Y)
    n, p = X.shape
    q = Y.shape[1]
    if not 1 <= r_x <= min(n, p):
        raise InputError(f"r_x={r_x} outside [1, min(n, p)={min(n, p)}]")
    if not 1 <= r_y <= min(n, q):
        raise InputError(f"r_y={r_y} outside [1, min(n, q)={min(n, q)}]")
    if center:
        X, Y = _center(X), _center(Y)
    return _factor(X, r_x, "X"), _factor(Y, r_y, "Y")


def fit_icca(X, Y, r_x: int, r_y: int, center: bool = True, k: int | None = None) -> CcaEstimate:
    """ICCA: CCA on the rank-``r_x`` / rank-``r_y`` truncations, forming ``C``."""
    sx, sy = _trimmed(X, Y, r_x, r_y, center)
    return _via_c(sx, sy, _check_k(k, min(r_x, r_y)), "icca")


def icca_from_factors(sx: ThinSvd, sy: ThinSvd, k: int | None = None,
                      method: str = "scalable") -> CcaEstimate:
    """Scalable ICCA given already-trimmed factors; nothing ``p x q`` is built."""
    k = _check_k(k, min(sx.S.shape[0], sy.S.shape[0]))
    A, D, B = thin_svd(sx.U.T @ sy.U, k)
    F = directions(sx.V, sx.S, A)
    G = directions(sy.V, sy.S, B)
    F, G = canonical_pair(F, G)
    return CcaEstimate(F, G, D, method)


def fit_icca_scalable(X, Y, r_x: int, r_y: int, center: bool = True,
                      k: int | None = None) -> CcaEstimate:
    """ICCA through the ``r_x x r_y`` SVD of ``Ux^T Uy``."""
    sx, sy = _trimmed(X, Y, r_x, r_y, center)
    return icca_from_factors(sx, sy, k)
