"""Low-rank paired-stream generator with planted canonical correlations.

Each side is ``x_t = V_x(t) diag(s_x) z_x / sqrt(n) + noise`` where the
first ``len(rho)`` latent coordinates of ``x`` and ``y`` are coupled:
``z_y[k] = rho[k] z_x[k] + sqrt(1 - rho[k]^2) xi[k]``. Singular values run
``r, r-1, ..., 1`` so the n-row data matrix has roughly those singular values.
Under drift the bases rotate along a geodesic to an orthogonal end basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError
from ..linalg import orthonormalize, thin_svd

REGIMES = {
    "nf-df": dict(noise=False, drift=False),
    "n-df": dict(noise=True, drift=False),
    "nf-d": dict(noise=False, drift=True),
    "n-d": dict(noise=True, drift=True),
}


@dataclass(frozen=True)
class ModelConfig:
    p: int = 100
    q: int = 50
    r_x: int = 2
    r_y: int = 3
    rho: tuple = (0.8, 0.5)
    n: int = 1000
    trials: int = 50
    noise: bool = False
    drift: bool = False
    noise_sigma: float | None = None
    seed: int = 0

    def __post_init__(self):
        r_c = len(self.rho)
        if not 1 <= self.r_x <= self.p or not 1 <= self.r_y <= self.q:
            raise ConfigError(f"ranks ({self.r_x}, {self.r_y}) must lie within dims ({self.p}, {self.q})")
        if not 1 <= r_c <= min(self.r_x, self.r_y):
            raise ConfigError(f"{r_c} correlated pairs exceed min(r_x, r_y)={min(self.r_x, self.r_y)}")
        if any(not 0 < abs(r) <= 1 for r in self.rho):
            raise ConfigError(f"correlations must satisfy 0 < |rho| <= 1, got {self.rho}")
        if self.drift and (2 * self.r_x > self.p or 2 * self.r_y > self.q):
            raise ConfigError("drift needs 2r orthonormal columns per side")
        if self.n < 2 or self.trials < 1:
            raise ConfigError("n >= 2 and trials >= 1 required")

    @property
    def sigma(self) -> float:
        if not self.noise:
            return 0.0
        return 0.1 / np.sqrt(self.n) if self.noise_sigma is None else self.noise_sigma

    @property
    def svals_x(self) -> np.ndarray:
        return np.arange(self.r_x, 0, -1, dtype=np.float64)

    @property
    def svals_y(self) -> np.ndarray:
        return np.arange(self.r_y, 0, -1, dtype=np.float64)

    @classmethod
    def regime(cls, name: str, **overrides) -> "ModelConfig":
        if name not in REGIMES:
            raise ConfigError(f"unknown regime {name!r}; expected one of {sorted(REGIMES)}")
        return cls(**{**REGIMES[name], **overrides})

    def with_(self, **kw) -> "ModelConfig":
        return replace(self, **kw)


def drift_basis(V_start, V_end, tau: float) -> np.ndarray:
    """Point ``tau`` in [0, 1] on the quarter-circle from ``V_start`` to ``V_end``."""
    V_start = np.asarray(V_start, dtype=np.float64)
    V_end = np.asarray(V_end, dtype=np.float64)
    if np.linalg.norm(V_start.T @ V_end) > 1e-10:
        raise ConfigError("drift endpoints must be mutually orthogonal")
    if tau == 0.0:
        return V_start.copy()
    if tau == 1.0:
        return V_end.copy()
    angle = 0.5 * np.pi * tau
    return V_start * np.cos(angle) + V_end * np.sin(angle)


@dataclass
class ModelTruth:
    config: ModelConfig
    Vx_start: np.ndarray
    Vy_start: np.ndarray
    Vx_end: np.ndarray | None = None
    Vy_end: np.ndarray | None = None
    _cca: tuple = field(default=None, repr=False)

    def tau(self, t: int) -> float:
        n = self.config.n
        return (t - 1) / (n - 1)

    def basis_x(self, t: int) -> np.ndarray:
        if self.Vx_end is None:
            return self.Vx_start
        return drift_basis(self.Vx_start, self.Vx_end, self.tau(t))

    def basis_y(self, t: int) -> np.ndarray:
        if self.Vy_end is None:
            return self.Vy_start
        return drift_basis(self.Vy_start, self.Vy_end, self.tau(t))

    def latent_cca(self):
        """Population CCA in latent coordinates: ``(A, B, corrs)``.

        The population covariance restricted to each signal span is diagonal
        (``s^2/n + sigma^2``); noise outside the span is independent of the
        other view, so CCA reduces to whitening within the span.
        """
        if self._cca is None:
            c = self.config
            dx = c.svals_x / np.sqrt(c.n)
            dy = c.svals_y / np.sqrt(c.n)
            wx = dx / np.sqrt(dx ** 2 + c.sigma ** 2)
            wy = dy / np.sqrt(dy ** 2 + c.sigma ** 2)
            R = np.zeros((c.r_x, c.r_y))
            for k, r in enumerate(c.rho):
                R[k, k] = r
            A, corrs, B = thin_svd(wx[:, None] * R * wy[None, :], min(c.r_x, c.r_y))
            # back from whitened to latent coordinates: f ~ V diag(1/sqrt(var)) a
            self._cca = (A / np.sqrt(dx ** 2 + c.sigma ** 2)[:, None],
                         B / np.sqrt(dy ** 2 + c.sigma ** 2)[:, None], corrs)
        return self._cca

    def cca(self, t: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """True unit directions ``(F, G)`` and correlations at time ``t``."""
        A, B, corrs = self.latent_cca()
        F = self.basis_x(t) @ A
        G = self.basis_y(t) @ B
        F /= np.linalg.norm(F, axis=0)
        G /= np.linalg.norm(G, axis=0)
        return F, G, corrs


def make_truth(config: ModelConfig, rng: np.random.Generator) -> ModelTruth:
    c = config
    if c.drift:
        Wx = orthonormalize(rng.standard_normal((c.p, 2 * c.r_x)))
        Wy = orthonormalize(rng.standard_normal((c.q, 2 * c.r_y)))
        return ModelTruth(c, Wx[:, : c.r_x], Wy[:, : c.r_y], Wx[:, c.r_x:], Wy[:, c.r_y:])
    Vx = orthonormalize(rng.standard_normal((c.p, c.r_x)))
    Vy = orthonormalize(rng.standard_normal((c.q, c.r_y)))
    return ModelTruth(c, Vx, Vy)


def _latents(config: ModelConfig, rng: np.random.Generator, size: int):
    c = config
    rho = np.asarray(c.rho, dtype=np.float64)
    r_c = rho.shape[0]
    zx = rng.standard_normal((size, c.r_x))
    xi = rng.standard_normal((size, c.r_y))
    zy = xi.copy()
    zy[:, :r_c] = rho * zx[:, :r_c] + np.sqrt(1.0 - rho ** 2) * xi[:, :r_c]
    return zx, zy


def gen_pair(truth: ModelTruth, t: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One sample pair at time ``t`` (1-based)."""
    c = truth.config
    zx, zy = _latents(c, rng, 1)
    x = truth.basis_x(t) @ (c.svals_x * zx[0]) / np.sqrt(c.n)
    y = truth.basis_y(t) @ (c.svals_y * zy[0]) / np.sqrt(c.n)
    if c.sigma > 0:
        x = x + c.sigma * rng.standard_normal(c.p)
        y = y + c.sigma * rng.standard_normal(c.q)
    return x, y


def gen_stream(truth: ModelTruth, rng: np.random.Generator, n: int | None = None):
    """Whole sample path ``(X, Y)`` with rows t = 1..n, drawn in bulk."""
    c = truth.config
    n = c.n if n is None else n
    zx, zy = _latents(c, rng, n)
    Lx = zx * c.svals_x / np.sqrt(c.n)
    Ly = zy * c.svals_y / np.sqrt(c.n)
    if truth.Vx_end is None:
        X = Lx @ truth.Vx_start.T
        Y = Ly @ truth.Vy_start.T
    else:
        ang = 0.5 * np.pi * (np.arange(n) / (c.n - 1))
        cos, sin = np.cos(ang)[:, None], np.sin(ang)[:, None]
        X = (cos * Lx) @ truth.Vx_start.T + (sin * Lx) @ truth.Vx_end.T
        Y = (cos * Ly) @ truth.Vy_start.T + (sin * Ly) @ truth.Vy_end.T
    if c.sigma > 0:
        X = X + c.sigma * rng.standard_normal(X.shape)
        Y = Y + c.sigma * rng.standard_normal(Y.shape)
    return X, Y
