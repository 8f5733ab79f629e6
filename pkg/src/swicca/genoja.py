"""Gen-Oja: two-timescale stochastic iteration for the top canonical pair.

The generalized eigenproblem ``A v = lam B v`` with
``A = [[0, Sxy], [Syx, 0]]`` and ``B = diag(Sxx, Syy)`` is attacked with
single-sample operators. The fast iterate ``w`` runs SGD on the linear
system ``B w = A v``; the slow iterate ``v`` takes an Oja step along ``w``.

The sample operators are formed densely (``x x^T``, ``x y^T``, ...) in
preallocated buffers, which is the O(p^2 + q^2) per-update cost the method
is usually quoted at.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError
from .linalg import as_vector

TUNING_GRID = (0.1, 1.0, 10.0)


@dataclass
class GenOjaState:
    p: int
    q: int
    w_vec: np.ndarray
    v_vec: np.ndarray
    c_alpha: float = 1.0
    c_beta: float = 1.0
    lam: float = 0.0
    t: int = 1
    ready: bool = False
    _bxx: np.ndarray = field(default=None, repr=False)
    _byy: np.ndarray = field(default=None, repr=False)
    _axy: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self._bxx is None:
            self._bxx = np.empty((self.p, self.p))
            self._byy = np.empty((self.q, self.q))
            self._axy = np.empty((self.p, self.q))

    def alpha(self) -> float:
        return self.c_alpha / math.log(self.t + 2)

    def beta(self) -> float:
        return self.c_beta / (self.t + 1)

    def directions(self) -> tuple[np.ndarray, np.ndarray]:
        return _unit(self.v_vec[: self.p]), _unit(self.v_vec[self.p:])

    def copy(self) -> "GenOjaState":
        return copy.deepcopy(self)

    def nbytes(self) -> int:
        return (self.w_vec.nbytes + self.v_vec.nbytes + self._bxx.nbytes
                + self._byy.nbytes + self._axy.nbytes)


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.zeros_like(v)


def genoja_init(p: int, q: int, c_alpha: float = 1.0, c_beta: float = 1.0,
                lam: float = 0.0, seed=0) -> GenOjaState:
    if p < 1 or q < 1:
        raise ConfigError(f"dimensions must be positive, got p={p}, q={q}")
    if not (c_alpha > 0 and c_beta > 0):
        raise ConfigError(f"step constants must be positive, got c_alpha={c_alpha}, c_beta={c_beta}")
    if not lam >= 0:
        raise ConfigError(f"ridge must be non-negative, got lam={lam}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(p + q)
    v /= np.linalg.norm(v)
    return GenOjaState(p, q, v.copy(), v, float(c_alpha), float(c_beta), float(lam))


def genoja_update(state: GenOjaState, x, y) -> tuple[np.ndarray, np.ndarray]:
    """One stochastic step; returns the current unit direction pair (f, g)."""
    s = state
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.shape[0] != s.p or y.shape[0] != s.q:
        raise InputError(f"sample pair has lengths ({x.shape[0]}, {y.shape[0]}), "
                         f"expected ({s.p}, {s.q})")
    p = s.p
    np.outer(x, x, out=s._bxx)
    np.outer(y, y, out=s._byy)
    np.outer(x, y, out=s._axy)
    wx, wy = s.w_vec[:p], s.w_vec[p:]
    vx, vy = s.v_vec[:p], s.v_vec[p:]
    with np.errstate(over="ignore", invalid="ignore"):
        Bw = np.concatenate([s._bxx @ wx + s.lam * wx, s._byy @ wy + s.lam * wy])
        Av = np.concatenate([s._axy @ vy, s._axy.T @ vx])
        w = s.w_vec - s.alpha() * (Bw - Av)
    # a step large enough to overflow restarts the inner solve from v
    s.w_vec = w if np.all(np.isfinite(w)) else s.v_vec.copy()
    v = s.v_vec + s.beta() * s.w_vec
    nv = np.linalg.norm(v)
    if nv > 0 and np.isfinite(nv):
        s.v_vec = v / nv
    s.t += 1
    f, g = s.directions()
    s.ready = bool(np.any(f) and np.any(g))
    return f, g
