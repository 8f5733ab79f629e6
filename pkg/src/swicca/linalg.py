"""Dense linear-algebra primitives shared by the estimators.

The SVD here is a one-sided (Hestenes) Jacobi iteration run on the thinner
orientation of the input, after a Householder QR when the input is tall.
Jacobi is slower than LAPACK's divide-and-conquer but it is accurate on small
singular values and fully deterministic, which the streaming code relies on
for bit-reproducible runs.
"""
from __future__ import annotations

import math
from operator import mul
from typing import NamedTuple

import numpy as np

from .errors import InputError, NumericError, RankError

MAX_SWEEPS = 60
SMALL = 64


class ThinSvd(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float64 array or raise InputError."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.size == 0:
        raise InputError(f"{name}: expected a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name}: contains NaN or Inf")
    return A


def as_vector(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise InputError(f"{name}: empty vector")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name}: contains NaN or Inf")
    return v


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # Circle-method schedule: every column pair meets once per sweep and the
    # pairs inside one round are disjoint, so a round is one vectorized step.
    players = list(range(n + (n % 2)))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        left, right = [], []
        for k in range(m // 2):
            i, j = players[k], players[m - 1 - k]
            if i < n and j < n:
                left.append(min(i, j))
                right.append(max(i, j))
        if left:
            rounds.append((np.array(left), np.array(right)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


_SCHEDULES: dict[int, list] = {}


def _schedule(n: int):
    if n not in _SCHEDULES:
        _SCHEDULES[n] = _round_robin(n)
    return _SCHEDULES[n]


def _jacobi(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalize the columns of square-or-tall ``A`` by plane rotations.

    Returns the rotated matrix ``A V`` (mutually orthogonal columns) and the
    accumulated orthogonal ``V``.
    """
    m, n = A.shape
    A = A.copy()
    V = np.eye(n)
    if n == 1:
        return A, V
    scale = np.linalg.norm(A)
    floor = (1e-12 * scale) ** 2
    tol = max(n, 1) * np.finfo(float).eps
    rounds = _schedule(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for I, J in rounds:
            ai = A[:, I]
            aj = A[:, J]
            alpha = np.einsum("ij,ij->j", ai, ai)
            beta = np.einsum("ij,ij->j", aj, aj)
            gamma = np.einsum("ij,ij->j", ai, aj)
            active = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (np.abs(gamma) > floor)
            if not active.any():
                continue
            rotated = True
            I, J = I[active], J[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            sgn = np.where(zeta >= 0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            ai, aj = A[:, I], A[:, J]
            A[:, I] = c * ai - s * aj
            A[:, J] = s * ai + c * aj
            vi, vj = V[:, I], V[:, J]
            V[:, I] = c * vi - s * vj
            V[:, J] = s * vi + c * vj
        if not rotated:
            return A, V
    raise NumericError(
        f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps for a {m}x{n} matrix"
    )


def _jacobi_small(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Same rotations as _jacobi in cyclic order on Python floats; numpy call
    # overhead dominates below a few dozen entries.
    m, n = A.shape
    cols = [list(map(float, A[:, j])) for j in range(n)]
    vcols = [[1.0 if i == j else 0.0 for i in range(n)] for j in range(n)]
    scale = math.sqrt(sum(v * v for c in cols for v in c))
    floor = (1e-12 * scale) ** 2
    tol = max(n, 1) * 2.220446049250313e-16
    sq = [sum(map(mul, c, c)) for c in cols]
    for _ in range(MAX_SWEEPS):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ci, cj = cols[i], cols[j]
                alpha, beta = sq[i], sq[j]
                gamma = sum(map(mul, ci, cj))
                ag = abs(gamma)
                if ag <= tol * math.sqrt(alpha * beta) or ag <= floor:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                ni = cols[i] = [c * a - s * b for a, b in zip(ci, cj)]
                nj = cols[j] = [s * a + c * b for a, b in zip(ci, cj)]
                sq[i] = sum(map(mul, ni, ni))
                sq[j] = sum(map(mul, nj, nj))
                vi, vj = vcols[i], vcols[j]
                vcols[i] = [c * a - s * b for a, b in zip(vi, vj)]
                vcols[j] = [s * a + c * b for a, b in zip(vi, vj)]
        if not rotated:
            return np.array(cols).T.reshape(m, n), np.array(vcols).T.reshape(n, n)
    raise NumericError(
        f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps for a {m}x{n} matrix"
    )


def _complete_columns(U: np.ndarray, dead: np.ndarray) -> np.ndarray:
    """Replace the ``dead`` columns of ``U`` by unit vectors orthogonal to the rest."""
    U = U.copy()
    m = U.shape[0]
    live = U[:, ~dead]
    k = live.shape[1]
    # QR of [live | I]: trailing columns of Q span the complement of live
    Q, _ = np.linalg.qr(np.hstack([live, np.eye(m)]), mode="reduced")
    U[:, dead] = Q[:, k: k + int(dead.sum())]
    return U


def sign_canon(U: np.ndarray, *others: np.ndarray):
    """Flip columns so each column of ``U`` has a non-negative largest-|entry|.

    Columns of every array in ``others`` are flipped in tandem.
    """
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[idx, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    out = [U * signs] + [O * signs for O in others]
    return out[0] if not others else tuple(out)


def _svd_tall(A: np.ndarray) -> ThinSvd:
    m, n = A.shape
    Q = None
    if m * n <= SMALL:
        B, V = _jacobi_small(A)
    else:
        if m > n:
            Q, A = np.linalg.qr(A, mode="reduced")
        B, V = _jacobi_small(A) if n * n <= SMALL else _jacobi(A)
    s = np.sqrt(np.einsum("ij,ij->j", B, B))
    order = np.argsort(-s, kind="stable")
    s, B, V = s[order], B[:, order], V[:, order]
    dead = s <= (s[0] if s[0] > 0 else 1.0) * 1e-15 * n
    dead |= s == 0
    U = np.zeros_like(B)
    U[:, ~dead] = B[:, ~dead] / s[~dead]
    if dead.any():
        U = _complete_columns(U, dead)
    if Q is not None:
        U = Q @ U
    return ThinSvd(U, s, V)


def thin_svd(M, k: int | None = None) -> ThinSvd:
    """Leading ``k`` singular triplets of ``M`` under the sign canon.

    ``U`` is ``rows x k``, ``S`` is non-increasing, ``V`` is ``cols x k`` and
    ``M ~= U @ diag(S) @ V.T``. In every column of ``U`` the entry of largest
    magnitude (lowest index on ties) is non-negative.
    """
    A = as_matrix(M)
    m, n = A.shape
    kmax = min(m, n)
    if k is None:
        k = kmax
    if not 1 <= k <= kmax:
        raise InputError(f"thin_svd: k={k} outside [1, {kmax}] for a {m}x{n} matrix")
    if m >= n:
        U, S, V = _svd_tall(A)
    else:
        V, S, U = _svd_tall(A.T)
    U, V = sign_canon(U[:, :k], V[:, :k])
    return ThinSvd(U, S[:k].copy(), V)


def normalize_columns(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale each column to unit l2 norm.

    Returns ``(Q, norms, zero)``; a zero column stays zero, has norm 0 and is
    marked in the boolean mask ``zero``.
    """
    A = np.asarray(M, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->j", A, A))
    zero = norms == 0.0
    Q = np.divide(A, norms, out=np.zeros_like(A), where=~zero)
    return Q, norms, zero


def orthonormalize(M) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass."""
    A = as_matrix(M)
    m, n = A.shape
    if n > m:
        raise RankError(f"orthonormalize: {n} columns exceed {m} rows")
    cutoff = 1e-12 * np.linalg.norm(A)
    Q = A.copy()
    for j in range(n):
        v = Q[:, j]
        for _ in range(2):
            for i in range(j):
                v = v - (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if nv < cutoff or nv == 0.0:
            raise RankError(f"orthonormalize: column {j} is linearly dependent (pivot {nv:.3g})")
        Q[:, j] = v / nv
    return Q


def direction_affinity(u, v) -> float:
    """Squared cosine between ``u`` and ``v``; 1 means parallel, 0 orthogonal."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    nu, nv = u @ u, v @ v
    if nu == 0.0 or nv == 0.0:
        raise InputError("direction_affinity: zero vector")
    return float(min(1.0, (u @ v) ** 2 / (nu * nv)))


def subspace_affinity(U, V) -> float:
    """``||U^T V||_F^2 / r`` for orthonormal ``U``, ``V`` with ``r`` columns each."""
    U = as_matrix(U, "U")
    V = as_matrix(V, "V")
    if U.shape != V.shape:
        raise InputError(f"subspace_affinity: shapes {U.shape} and {V.shape} differ")
    r = U.shape[1]
    eye = np.eye(r)
    for name, B in (("U", U), ("V", V)):
        if np.linalg.norm(B.T @ B - eye) > 1e-6:
            raise InputError(f"subspace_affinity: {name} is not orthonormal")
    return float(min(1.0, np.sum((U.T @ V) ** 2) / r))


def procrustes(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Orthogonal ``O`` minimizing ``||A O - B||_F``."""
    P, _, Q = thin_svd(A.T @ B)
    return P @ Q.T
