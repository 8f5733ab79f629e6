"""Regime runner and per-update scaling benchmark.

Trials are independent: trial ``i`` of a run with seed ``s`` draws its truth
and stream from ``SeedSequence(s).spawn(trials)[i]``, so results do not
depend on how trials are scheduled across workers.
"""
from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..estimator import Swicca, SwiccaConfig
from ..genoja import genoja_init, genoja_update
from ..io import format_row
from ..linalg import subspace_affinity
from ..streaming_pca import StepConfig
from .model import ModelConfig, gen_stream, make_truth

METHODS = ("swicca", "genoja", "both")
WARM_T = 200


def threads_from_env(default: int = 1) -> int:
    raw = os.environ.get("SWICCA_THREADS", "")
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SWICCA_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"SWICCA_THREADS must be a positive integer, got {raw!r}")
    return n


def swicca_config_for(config: ModelConfig, seed: int = 0, **overrides) -> SwiccaConfig:
    """Reference backend settings: ISVD with w=50 on static
    streams, greedy GROUSE with w=25 under drift."""
    if config.drift:
        kw = dict(backend="grouse", step=StepConfig.greedy(), w=25)
    else:
        kw = dict(backend="isvd", w=50)
    kw.update(overrides)
    return SwiccaConfig(config.p, config.q, config.r_x, config.r_y, seed=seed, **kw)


@dataclass
class TrialMetrics:
    """Per-t curves for one trial; NaN before an estimate exists."""
    curves: dict = field(default_factory=dict)
    wall_ns: dict = field(default_factory=dict)
    state_bytes: dict = field(default_factory=dict)

    def put(self, method, metric, component, t, value, n):
        key = (method, metric, component)
        if key not in self.curves:
            self.curves[key] = np.full(n, np.nan)
        self.curves[key][t - 1] = value


def _trial(config: ModelConfig, method: str, seq: np.random.SeedSequence,
           swicca_kw: dict, genoja_kw: dict) -> TrialMetrics:
    c = config
    truth_seq, swicca_seq, genoja_seq = seq.spawn(3)
    rng = np.random.default_rng(truth_seq)
    truth = make_truth(c, rng)
    X, Y = gen_stream(truth, rng)
    out = TrialMetrics()
    n = c.n
    r_c = len(c.rho)
    run_s = method in ("swicca", "both")
    run_g = method in ("genoja", "both")
    if run_s:
        sw = Swicca(swicca_config_for(c, seed=int(swicca_seq.generate_state(1)[0]), **swicca_kw))
        ns_s = np.empty(n, dtype=np.int64)
    if run_g:
        go = genoja_init(c.p, c.q, seed=np.random.default_rng(genoja_seq), **genoja_kw)
        ns_g = np.empty(n, dtype=np.int64)

    for t in range(1, n + 1):
        x, y = X[t - 1], Y[t - 1]
        F, G, _ = truth.cca(t)
        if run_s:
            t0 = time.perf_counter_ns()
            est = sw.update(x, y)
            ns_s[t - 1] = time.perf_counter_ns() - t0
            Vx, Vy = truth.basis_x(t), truth.basis_y(t)
            out.put("swicca", "pca_affinity_x", 0, t, subspace_affinity(sw.pca_x.basis, Vx), n)
            out.put("swicca", "pca_affinity_y", 0, t, subspace_affinity(sw.pca_y.basis, Vy), n)
            if est is not None:
                fa = (F[:, :r_c].T @ est.F) ** 2
                ga = (G[:, :r_c].T @ est.G) ** 2
                for k in range(min(r_c, est.k)):
                    out.put("swicca", "f_affinity", k + 1, t, fa[k, k], n)
                    out.put("swicca", "g_affinity", k + 1, t, ga[k, k], n)
                    out.put("swicca", "corr", k + 1, t, est.corrs[k], n)
            if sw.config.window_mode == "samples":
                # true vs estimated loadings of the current window, per component
                Xw, Yw = sw.window.arrays()
                for side, W, V, Vh in (("x", Xw, Vx, sw.pca_x.basis), ("y", Yw, Vy, sw.pca_y.basis)):
                    L, Lh = W @ V, W @ Vh
                    num = np.einsum("ij,ij->j", L, Lh) ** 2
                    den = np.einsum("ij,ij->j", L, L) * np.einsum("ij,ij->j", Lh, Lh)
                    for k in range(V.shape[1]):
                        if den[k] > 0:
                            out.put("swicca", f"loading_affinity_{side}", k + 1, t, num[k] / den[k], n)
        if run_g:
            t0 = time.perf_counter_ns()
            f, g = genoja_update(go, x, y)
            ns_g[t - 1] = time.perf_counter_ns() - t0
            out.put("genoja", "f_affinity", 1, t, (F[:, 0] @ f) ** 2, n)
            out.put("genoja", "g_affinity", 1, t, (G[:, 0] @ g) ** 2, n)
    if run_s:
        out.wall_ns["swicca"] = ns_s
        out.state_bytes["swicca"] = sw.nbytes()
    if run_g:
        out.wall_ns["genoja"] = ns_g
        out.state_bytes["genoja"] = go.nbytes()
    return out


@dataclass
class RegimeResult:
    config: ModelConfig
    method: str
    trials: int
    threads: int
    mean: dict
    sd: dict
    state_bytes: dict
    wall_ns: dict

    def final(self, method: str, metric: str, component: int) -> float:
        return float(self.mean[(method, metric, component)][-1])

    def curve(self, method: str, metric: str, component: int) -> np.ndarray:
        return self.mean[(method, metric, component)]

    def write(self, out_dir) -> None:
        """``metrics.csv`` (long format, one row per t, component, metric) and
        ``summary.csv`` (final-t mean and sd across trials). Wall times are
        kept out of both files so a fixed seed gives identical bytes."""
        os.makedirs(out_dir, exist_ok=True)
        header = (f"# trials={self.trials} threads={self.threads} "
                  f"parallel={'yes' if self.threads > 1 else 'no'}\n")
        keys = sorted(self.mean)
        with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as fh:
            fh.write(header)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "component", "metric", "value"])
            n = self.config.n
            for t in range(1, n + 1):
                for method, metric, comp in keys:
                    v = self.mean[(method, metric, comp)][t - 1]
                    if np.isfinite(v):
                        w.writerow([t, comp, f"{method}.{metric}", format_row([v])])
        with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
            fh.write(header)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "metric", "component", "final_mean", "final_sd"])
            for method, metric, comp in keys:
                w.writerow([method, metric, comp,
                            format_row([self.mean[(method, metric, comp)][-1]]),
                            format_row([self.sd[(method, metric, comp)][-1]])])
            for method in sorted(self.state_bytes):
                w.writerow([method, "state_bytes", 0, self.state_bytes[method], 0])


def run_regime(config: ModelConfig, method: str = "both", trials: int | None = None,
               seed: int | None = None, threads: int | None = None,
               swicca_kw: dict | None = None, genoja_kw: dict | None = None) -> RegimeResult:
    """Average per-t metric curves over independent trials."""
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    trials = config.trials if trials is None else trials
    seed = config.seed if seed is None else seed
    threads = threads_from_env() if threads is None else threads
    swicca_kw = swicca_kw or {}
    genoja_kw = genoja_kw or {}
    seqs = np.random.SeedSequence(seed).spawn(trials)
    args = [(config, method, s, swicca_kw, genoja_kw) for s in seqs]
    if threads > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(threads, trials)) as ex:
            results = list(ex.map(_trial, *zip(*args)))
    else:
        results = [_trial(*a) for a in args]

    keys = sorted({k for r in results for k in r.curves})
    mean, sd = {}, {}
    for key in keys:
        stack = np.vstack([r.curves.get(key, np.full(config.n, np.nan)) for r in results])
        with np.errstate(invalid="ignore"):
            cnt = np.sum(np.isfinite(stack), axis=0)
            tot = np.nansum(stack, axis=0)
            mu = np.where(cnt > 0, tot / np.maximum(cnt, 1), np.nan)
            dev = np.where(np.isfinite(stack), stack - mu, 0.0)
            sd[key] = np.where(cnt > 0, np.sqrt(np.sum(dev * dev, axis=0) / np.maximum(cnt, 1)), np.nan)
        mean[key] = mu
    methods = sorted({k for r in results for k in r.state_bytes})
    state = {m: int(np.median([r.state_bytes[m] for r in results])) for m in methods}
    wall = {m: np.concatenate([r.wall_ns[m] for r in results]) for m in methods}
    return RegimeResult(config, method, trials, threads, mean, sd, state, wall)


def tune_genoja(config: ModelConfig | None = None, trials: int = 10, seed: int = 0,
                grid=(0.1, 1.0, 10.0)) -> tuple[dict, dict]:
    """Smoke-test grid over (c_alpha, c_beta) on a static stream.

    Returns the best setting by final first-direction affinity and the full
    table of scores.
    """
    config = config or ModelConfig()
    scores = {}
    for ca in grid:
        for cb in grid:
            res = run_regime(config, "genoja", trials=trials, seed=seed, threads=1,
                             genoja_kw=dict(c_alpha=ca, c_beta=cb))
            scores[(ca, cb)] = res.final("genoja", "f_affinity", 1)
    best = max(scores, key=lambda k: (scores[k], -abs(np.log10(k[0])) - abs(np.log10(k[1]))))
    return dict(c_alpha=best[0], c_beta=best[1]), scores


# -- scaling benchmark --------------------------------------------------------

@dataclass
class BenchRow:
    p: int
    method: str
    mode: str
    ns_per_update: float
    state_bytes: int


def _time_updates(update, X, Y, warm: int) -> float:
    for t in range(warm):
        update(X[t], Y[t])
    ns = []
    for t in range(warm, X.shape[0]):
        t0 = time.perf_counter_ns()
        update(X[t], Y[t])
        ns.append(time.perf_counter_ns() - t0)
    return float(np.median(ns))


def bench_scaling(dims, q: int = 50, r_x: int = 2, r_y: int = 3, w: int = 25,
                  warm: int = 200, measure: int = 200, seed: int = 0,
                  methods=("swicca", "genoja")) -> list[BenchRow]:
    """Median per-update wall time and retained-state bytes for each ``p``.

    SWICCA runs greedy GROUSE in both window modes; Gen-Oja runs its default
    constants. All methods see the same noise-free static stream per ``p``.
    """
    dims = [int(p) for p in dims]
    if warm < 200:
        raise ConfigError(f"need at least 200 warm updates, got {warm}")
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise ConfigError(f"dims must be strictly increasing, got {dims}")
    rows = []
    for p in dims:
        mc = ModelConfig(p=p, q=q, r_x=r_x, r_y=r_y, n=warm + measure, trials=1)
        rng = np.random.default_rng(seed)
        X, Y = gen_stream(make_truth(mc, rng), rng)
        if "swicca" in methods:
            for mode in ("samples", "loadings"):
                s = Swicca(SwiccaConfig(p, q, r_x, r_y, w=w, backend="grouse",
                                        step=StepConfig.greedy(), window_mode=mode, seed=seed))
                ns = _time_updates(s.update, X, Y, warm)
                rows.append(BenchRow(p, "swicca", mode, ns, s.nbytes()))
        if "genoja" in methods:
            g = genoja_init(p, q, seed=seed)
            ns = _time_updates(lambda x, y: genoja_update(g, x, y), X, Y, warm)
            rows.append(BenchRow(p, "genoja", "-", ns, g.nbytes()))
    return rows


def write_bench(path, rows: list[BenchRow]) -> None:
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "method", "mode", "ns_per_update", "state_bytes"])
        for r in rows:
            w.writerow([r.p, r.method, r.mode, f"{r.ns_per_update:.0f}", r.state_bytes])
