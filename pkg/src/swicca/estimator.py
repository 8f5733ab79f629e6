"""Sliding-window informative CCA.

Per sample pair: update both streaming PCA bases, push the pair (or its
loadings) into a bounded FIFO window, normalize the window loadings
``X_w V_x`` column-wise into ``U_x`` with norms ``S_x``, take the SVD
``U_x^T U_y = A D B^T`` and map back with ``f_k ~ V_x S_x^-1 a_k``,
``g_k ~ V_y S_y^-1 b_k``.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError, NotReady
from .linalg import as_vector, normalize_columns, thin_svd
from .static_cca import CcaEstimate, canonical_pair, directions
from .streaming_pca import MeanMode, StepConfig, SubspaceState, mean_update, pca_init

WINDOW_MODES = ("samples", "loadings")
CORR_MODES = ("d", "empirical")
DEGENERATE = 1e-12


@dataclass(frozen=True)
class SwiccaConfig:
    p: int
    q: int
    r_x: int
    r_y: int
    w: int
    backend: str = "isvd"
    backend_y: str | None = None
    step: StepConfig | None = None
    step_y: StepConfig | None = None
    window_mode: str = "samples"
    corr_mode: str = "d"
    mean_mode: MeanMode | None = None
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.r_x <= self.p:
            raise ConfigError(f"Require 1 <= r_x <= p violated: r_x={self.r_x}, p={self.p}")
        if not 1 <= self.r_y <= self.q:
            raise ConfigError(f"Require 1 <= r_y <= q violated: r_y={self.r_y}, q={self.q}")
        if max(self.r_x, self.r_y) > self.w:
            raise ConfigError(
                f"Require max(r_x, r_y) <= w violated: max({self.r_x}, {self.r_y}) > w={self.w}"
            )
        if self.window_mode not in WINDOW_MODES:
            raise ConfigError(f"window_mode must be one of {WINDOW_MODES}, got {self.window_mode!r}")
        if self.corr_mode not in CORR_MODES:
            raise ConfigError(f"corr_mode must be one of {CORR_MODES}, got {self.corr_mode!r}")
        if (self.mean_mode is not None and self.mean_mode.kind == "window"
                and self.window_mode == "loadings"):
            raise ConfigError("window-mean tracking needs raw samples; use window_mode='samples'")


class SlidingWindow:
    """Fixed-capacity FIFO of paired rows backed by two ring buffers."""

    def __init__(self, capacity: int, dim_x: int, dim_y: int):
        self.capacity = capacity
        self.xs = np.zeros((capacity, dim_x))
        self.ys = np.zeros((capacity, dim_y))
        self.head = 0
        self.length = 0

    def __len__(self) -> int:
        return self.length

    def append(self, x, y) -> None:
        # overwrites the oldest row once full
        self.xs[self.head] = x
        self.ys[self.head] = y
        self.head = (self.head + 1) % self.capacity
        self.length = min(self.length + 1, self.capacity)

    def arrays(self, ordered: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Stored rows; storage order unless ``ordered`` (oldest first)."""
        if self.length < self.capacity:
            return self.xs[: self.length], self.ys[: self.length]
        if not ordered or self.head == 0:
            return self.xs, self.ys
        idx = np.r_[self.head:self.capacity, 0:self.head]
        return self.xs[idx], self.ys[idx]

    def nbytes(self) -> int:
        return self.xs.nbytes + self.ys.nbytes


def _pearson(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    den = np.sqrt(np.sum(a * a, axis=0) * np.sum(b * b, axis=0))
    num = np.sum(a * b, axis=0)
    return np.abs(np.divide(num, den, out=np.zeros_like(num), where=den > 0))


def window_estimate(LX: np.ndarray, LY: np.ndarray, Vx: np.ndarray, Vy: np.ndarray,
                    corr_mode: str = "d") -> CcaEstimate:
    """CCA from window loadings ``LX = X_w Vx`` and ``LY = Y_w Vy``.

    Loading columns whose norm is negligible are dropped before the SVD, so
    the number of returned pairs can fall below ``min(r_x, r_y)``.
    """
    Ux, Sx, _ = normalize_columns(LX)
    Uy, Sy, _ = normalize_columns(LY)
    kx = Sx > DEGENERATE * max(Sx.max(), 1e-300)
    ky = Sy > DEGENERATE * max(Sy.max(), 1e-300)
    meta = {"dropped_x": int((~kx).sum()), "dropped_y": int((~ky).sum())}
    k = min(int(kx.sum()), int(ky.sum()))
    if k == 0:
        raise NotReady("window loadings are degenerate")
    Ux, Sx, Vx = Ux[:, kx], Sx[kx], Vx[:, kx]
    Uy, Sy, Vy = Uy[:, ky], Sy[ky], Vy[:, ky]
    A, D, B = thin_svd(Ux.T @ Uy, k)
    F = directions(Vx, Sx, A)
    G = directions(Vy, Sy, B)
    F, G = canonical_pair(F, G)
    if corr_mode == "d":
        meta["clipped"] = bool(np.any(D > 1.0))
        corrs = np.clip(D, 0.0, 1.0)
    else:
        # X_w f is LX Sx^-1 a up to the positive normalizer of f
        # (sign flips from the canon hit both sides and cancel)
        corrs = _pearson(LX[:, kx] @ (A / Sx[:, None]), LY[:, ky] @ (B / Sy[:, None]))
        meta["clipped"] = False
    return CcaEstimate(F, G, corrs, "swicca", meta)


class Swicca:
    """Streaming estimator state: two subspace trackers, a window, the last estimate."""

    def __init__(self, config: SwiccaConfig, basis_x=None, basis_y=None):
        c = config
        self.config = c
        sx, sy = np.random.SeedSequence(c.seed).spawn(2)
        self.pca_x = pca_init(c.p, c.r_x, c.backend, c.step, sx, basis=basis_x)
        self.pca_y = pca_init(c.q, c.r_y, c.backend_y or c.backend, c.step_y or c.step, sy,
                              basis=basis_y)
        if c.window_mode == "samples":
            self.window = SlidingWindow(c.w, c.p, c.q)
        else:
            self.window = SlidingWindow(c.w, c.r_x, c.r_y)
        self.last: CcaEstimate | None = None
        self.t = 0

    @property
    def ready(self) -> bool:
        return self.last is not None

    def _center(self, pca: SubspaceState, x: np.ndarray, rows: np.ndarray | None):
        mode = self.config.mean_mode
        if mode is None:
            return x
        return mean_update(pca, x, mode, window=rows)

    def update(self, x, y) -> CcaEstimate | None:
        """Ingest one pair; returns the new estimate or None while warming up."""
        c = self.config
        x = as_vector(x, "x")
        y = as_vector(y, "y")
        if x.shape[0] != c.p or y.shape[0] != c.q:
            raise InputError(f"sample pair has lengths ({x.shape[0]}, {y.shape[0]}), "
                             f"expected ({c.p}, {c.q})")
        self.t += 1
        window_mean = c.mean_mode is not None and c.mean_mode.kind == "window"
        if window_mean:
            self.window.append(x, y)
            Xw, Yw = self.window.arrays()
            xc = self._center(self.pca_x, x, Xw)
            yc = self._center(self.pca_y, y, Yw)
        else:
            xc = self._center(self.pca_x, x, None)
            yc = self._center(self.pca_y, y, None)
        self.pca_x.update(xc)
        self.pca_y.update(yc)
        Vx, Vy = self.pca_x.basis, self.pca_y.basis

        if c.window_mode == "samples":
            if not window_mean:
                self.window.append(xc, yc)
            Xw, Yw = self.window.arrays()
            if window_mean:
                Xw = Xw - self.pca_x.mean
                Yw = Yw - self.pca_y.mean
            LX, LY = Xw @ Vx, Yw @ Vy
        else:
            self.window.append(xc @ Vx, yc @ Vy)
            LX, LY = self.window.arrays()

        if len(self.window) < max(c.r_x, c.r_y):
            return None
        try:
            est = window_estimate(LX, LY, Vx, Vy, c.corr_mode)
        except NotReady:
            return None
        est.meta.update(t=self.t, provisional=len(self.window) < c.w)
        self.last = est
        return est

    def current(self) -> CcaEstimate:
        if self.last is None:
            raise NotReady(f"SWICCA needs {max(self.config.r_x, self.config.r_y)} samples "
                           f"before its first estimate; seen {self.t}")
        return copy.deepcopy(self.last)

    def copy(self) -> "Swicca":
        return copy.deepcopy(self)

    def nbytes(self) -> int:
        total = self.pca_x.nbytes() + self.pca_y.nbytes() + self.window.nbytes()
        if self.last is not None:
            total += self.last.nbytes()
        return total


def swicca_init(config: SwiccaConfig, basis_x=None, basis_y=None) -> Swicca:
    return Swicca(config, basis_x, basis_y)


def swicca_update(state: Swicca, x, y) -> CcaEstimate | None:
    return state.update(x, y)


def swicca_current(state: Swicca) -> CcaEstimate:
    return state.current()
