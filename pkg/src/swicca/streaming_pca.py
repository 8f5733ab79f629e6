"""Streaming principal-subspace trackers.

Two backends share one state object:

* ``grouse`` -- Grassmannian rank-one rotation per sample, with either a
  constant step (angle ``eta * |res| * |proj|``) or the greedy step
  (angle ``scale * arctan(|res| / |proj|)``).
* ``isvd`` -- rank-truncated incremental SVD (Brand-style bordered update),
  the full-observation form of PIMC.

A third backend, ``fixed``, never moves its basis; it is how callers pin the
subspace to a known truth.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError
from .linalg import as_vector, orthonormalize, thin_svd

BACKENDS = ("grouse", "isvd", "fixed")
ORTHO_TOL = 1e-8
GUARD = 1e-12


@dataclass(frozen=True)
class StepConfig:
    kind: str = "greedy"
    value: float = 1.0

    @classmethod
    def constant(cls, eta: float) -> "StepConfig":
        return cls("constant", eta)

    @classmethod
    def greedy(cls, scale: float = 1.0) -> "StepConfig":
        return cls("greedy", scale)

    def __post_init__(self):
        if self.kind not in ("constant", "greedy"):
            raise ConfigError(f"unknown step kind {self.kind!r}")
        if not self.value > 0:
            raise ConfigError(f"step constant must be positive, got {self.value}")


@dataclass(frozen=True)
class MeanMode:
    """Running-mean policy: ``ewma`` with weight ``value`` or ``window`` mean."""

    kind: str
    value: float = 0.0

    @classmethod
    def ewma(cls, lam: float) -> "MeanMode":
        return cls("ewma", lam)

    @classmethod
    def window(cls) -> "MeanMode":
        return cls("window")

    def __post_init__(self):
        if self.kind not in ("ewma", "window"):
            raise ConfigError(f"unknown mean mode {self.kind!r}")
        if self.kind == "ewma" and not 0.0 < self.value <= 1.0:
            raise ConfigError(f"EWMA weight must lie in (0, 1], got {self.value}")


@dataclass(frozen=True)
class PcaUpdateReport:
    residual_norm: float
    projection_norm: float
    rotated: bool


@dataclass
class SubspaceState:
    basis: np.ndarray
    backend: str = "grouse"
    step: StepConfig = field(default_factory=StepConfig)
    svals: np.ndarray | None = None
    mean: np.ndarray | None = None
    count: int = 0

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def update(self, x) -> PcaUpdateReport:
        if self.backend == "grouse":
            return grouse_update(self, x)
        if self.backend == "isvd":
            return isvd_update(self, x)
        return fixed_update(self, x)

    def copy(self) -> "SubspaceState":
        return copy.deepcopy(self)

    def nbytes(self) -> int:
        total = self.basis.nbytes
        for arr in (self.svals, self.mean):
            if arr is not None:
                total += arr.nbytes
        return total


def pca_init(
    p: int,
    r: int,
    backend: str = "grouse",
    step: StepConfig | None = None,
    seed: int | None = 0,
    basis=None,
) -> SubspaceState:
    """Seeded orthonormal Gaussian start (or the supplied ``basis``)."""
    if backend not in BACKENDS:
        raise ConfigError(f"unknown PCA backend {backend!r}; expected one of {BACKENDS}")
    if not 1 <= r <= p:
        raise ConfigError(f"rank r={r} must satisfy 1 <= r <= p={p}")
    if basis is None:
        if backend == "fixed":
            raise ConfigError("the fixed backend needs an explicit basis")
        rng = np.random.default_rng(seed)
        basis = orthonormalize(rng.standard_normal((p, r)))
    else:
        basis = np.array(basis, dtype=np.float64)
        if basis.shape != (p, r):
            raise ConfigError(f"basis shape {basis.shape} != ({p}, {r})")
        if np.linalg.norm(basis.T @ basis - np.eye(r)) > ORTHO_TOL * r:
            basis = orthonormalize(basis)
    if step is None:
        step = StepConfig.greedy(1.0)
    # zero start energy: the random basis is a placeholder, not data
    svals = np.zeros(r) if backend == "isvd" else None
    return SubspaceState(basis=basis, backend=backend, step=step, svals=svals)


def _check(state: SubspaceState, x) -> np.ndarray:
    x = as_vector(x, "sample")
    if x.shape[0] != state.dim:
        raise InputError(f"sample has length {x.shape[0]}, expected {state.dim}")
    return x


def _repair(state: SubspaceState) -> None:
    B = state.basis
    r = B.shape[1]
    if np.linalg.norm(B.T @ B - np.eye(r)) > ORTHO_TOL * r:
        state.basis = orthonormalize(B)


def grouse_update(state: SubspaceState, x) -> PcaUpdateReport:
    x = _check(state, x)
    state.count += 1
    B = state.basis
    wgt = B.T @ x
    proj = B @ wgt
    res = x - proj
    rnorm = float(np.linalg.norm(res))
    pnorm = float(np.linalg.norm(proj))
    wnorm = float(np.linalg.norm(wgt))
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0 or rnorm < GUARD * xnorm or wnorm < GUARD * xnorm or pnorm == 0.0:
        return PcaUpdateReport(rnorm, pnorm, False)
    if state.step.kind == "constant":
        theta = state.step.value * rnorm * pnorm
    else:
        theta = state.step.value * np.arctan(rnorm / pnorm)
    direction = (np.cos(theta) - 1.0) * proj / pnorm + np.sin(theta) * res / rnorm
    state.basis = B + np.outer(direction, wgt / wnorm)
    _repair(state)
    return PcaUpdateReport(rnorm, pnorm, True)


def isvd_update(state: SubspaceState, x) -> PcaUpdateReport:
    x = _check(state, x)
    state.count += 1
    B = state.basis
    r = B.shape[1]
    wgt = B.T @ x
    res = x - B @ wgt
    rnorm = float(np.linalg.norm(res))
    pnorm = float(np.linalg.norm(wgt))
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0:
        return PcaUpdateReport(0.0, 0.0, False)
    s = state.svals
    if rnorm > GUARD * xnorm:
        K = np.zeros((r + 1, r + 1))
        K[:r, :r] = np.diag(s)
        K[r, :r] = wgt
        K[r, r] = rnorm
        frame = np.hstack([B, (res / rnorm)[:, None]])
    else:
        K = np.vstack([np.diag(s), wgt[None, :]])
        frame = B
    _, S, V = thin_svd(K)
    state.basis = frame @ V[:, :r]
    state.svals = S[:r].copy()
    _repair(state)
    return PcaUpdateReport(rnorm, pnorm, True)


def fixed_update(state: SubspaceState, x) -> PcaUpdateReport:
    x = _check(state, x)
    state.count += 1
    wgt = state.basis.T @ x
    res = x - state.basis @ wgt
    return PcaUpdateReport(float(np.linalg.norm(res)), float(np.linalg.norm(wgt)), False)


def mean_update(state: SubspaceState, x, mode: MeanMode, window=None) -> np.ndarray:
    """Refresh ``state.mean`` and return the centered sample ``x - mean``.

    ``window`` (rows are samples) is required for the ``window`` mode.
    """
    x = _check(state, x)
    if mode.kind == "ewma":
        if state.mean is None:
            state.mean = x.copy()
        else:
            state.mean = (1.0 - mode.value) * state.mean + mode.value * x
    else:
        if window is None or len(window) == 0:
            raise InputError("window mean needs a non-empty window")
        state.mean = np.asarray(window, dtype=np.float64).mean(axis=0)
    return x - state.mean
