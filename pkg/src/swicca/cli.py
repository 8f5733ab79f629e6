"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 bad input data,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .diagnostics import report_for
from .errors import ConfigError, InputError, NotReady, NumericError
from .estimator import Swicca, SwiccaConfig
from .genoja import genoja_init, genoja_update
from .io import format_row, read_matrix, write_matrix
from .simulation import REGIMES, ModelConfig, bench_scaling, run_regime, write_bench
from .static_cca import fit_cca, fit_icca, fit_icca_scalable
from .streaming_pca import StepConfig

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(kind):
    def conv(s):
        v = kind(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {s}")
        return v
    return conv


def _dims(s):
    try:
        vals = [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {s!r}")
    return vals


def _pair(args):
    X = read_matrix(args.x)
    Y = read_matrix(args.y)
    if X.shape[0] != Y.shape[0]:
        raise InputError(f"row counts differ: {args.x} has {X.shape[0]}, {args.y} has {Y.shape[0]}")
    return X, Y


def _truth(args, p, q):
    if args.truth_x is None and args.truth_y is None:
        return None
    if args.truth_x is None or args.truth_y is None:
        raise UsageError("--truth-x and --truth-y must be given together")
    F, G = read_matrix(args.truth_x), read_matrix(args.truth_y)
    if F.shape[0] != p or G.shape[0] != q:
        raise InputError(f"truth directions have {F.shape[0]} and {G.shape[0]} rows, "
                         f"expected {p} ({args.truth_x}) and {q} ({args.truth_y})")
    return F / np.linalg.norm(F, axis=0), G / np.linalg.norm(G, axis=0)


def _ensure_parent(path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)


def cmd_cca_fit(args):
    X, Y = _pair(args)
    if args.method == "full":
        est = fit_cca(X, Y)
    else:
        if args.rank_x is None or args.rank_y is None:
            raise UsageError(f"--method {args.method} needs --rank-x and --rank-y")
        fit = fit_icca if args.method == "icca" else fit_icca_scalable
        est = fit(X, Y, args.rank_x, args.rank_y)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "F.csv"), est.F)
    write_matrix(os.path.join(args.out, "G.csv"), est.G)
    write_matrix(os.path.join(args.out, "corrs.csv"), est.corrs)


def cmd_swicca_stream(args):
    X, Y = _pair(args)
    p, q = X.shape[1], Y.shape[1]
    cfg = SwiccaConfig(p, q, args.rank_x, args.rank_y, w=args.window, backend=args.backend,
                       step=StepConfig.greedy() if args.backend == "grouse" else None,
                       window_mode="loadings" if args.loadings_window else "samples",
                       corr_mode=args.corr, seed=args.seed)
    truth = _truth(args, p, q)
    k = min(args.rank_x, args.rank_y)
    header = ["t"] + [f"corr_{i + 1}" for i in range(k)]
    if truth is not None:
        kt = min(k, truth[0].shape[1])
        header += [f"f_affinity_{i + 1}" for i in range(kt)] + [f"g_affinity_{i + 1}" for i in range(kt)]
    s = Swicca(cfg)
    _ensure_parent(args.out)
    with open(args.out, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t, (x, y) in enumerate(zip(X, Y), start=1):
            est = s.update(x, y)
            vals = [np.nan] * (len(header) - 1)
            if est is not None:
                vals[: est.k] = est.corrs
                if truth is not None:
                    F, G = truth
                    for i in range(min(est.k, kt)):
                        vals[k + i] = (F[:, i] @ est.F[:, i]) ** 2
                        vals[k + kt + i] = (G[:, i] @ est.G[:, i]) ** 2
            fh.write(f"{t},{format_row(vals)}\n")


def cmd_genoja_stream(args):
    X, Y = _pair(args)
    p, q = X.shape[1], Y.shape[1]
    st = genoja_init(p, q, args.c_alpha, args.c_beta, args.lam, seed=args.seed)
    truth = _truth(args, p, q)
    _ensure_parent(args.out)
    with open(args.out, "w") as fh:
        cols = ["t", "step_norm"] + (["f_affinity_1", "g_affinity_1"] if truth is not None else [])
        fh.write(",".join(cols) + "\n")
        for t, (x, y) in enumerate(zip(X, Y), start=1):
            v_old = st.v_vec.copy()
            f, g = genoja_update(st, x, y)
            vals = [np.linalg.norm(st.v_vec - v_old)]
            if truth is not None:
                vals += [(truth[0][:, 0] @ f) ** 2, (truth[1][:, 0] @ g) ** 2]
            fh.write(f"{t},{format_row(vals)}\n")


def _model_config(spec: str) -> ModelConfig:
    """``regime[,key=value...]``, e.g. ``nf-df,p=20,q=10,w=30``."""
    parts = [s.strip() for s in spec.split(",") if s.strip()]
    if not parts or parts[0] not in REGIMES:
        raise UsageError(f"--model must start with one of {sorted(REGIMES)}, got {spec!r}")
    kw = {}
    for item in parts[1:]:
        key, _, val = item.partition("=")
        if key in ("p", "q", "r_x", "r_y", "n"):
            kw[key] = int(val)
        elif key == "noise_sigma":
            kw[key] = float(val)
        elif key == "w":
            kw["_w"] = int(val)
        else:
            raise UsageError(f"--model: unknown key {key!r}")
    w = kw.pop("_w", 50)
    return ModelConfig.regime(parts[0], **kw), w


def cmd_diag_bounds(args):
    cfg, w = _model_config(args.model)
    rep = report_for(args.seed, args.eps, w=w, p=cfg.p, q=cfg.q, r_x=cfg.r_x, r_y=cfg.r_y,
                     noise=cfg.noise, n=cfg.n, noise_sigma=cfg.noise_sigma)
    out = sys.stdout
    out.write("key,value\n")
    for k, v in rep.rows():
        out.write(f"{k},{format_row([v])}\n")
    for flag in rep.flags:
        print(f"flag: {flag}", file=sys.stderr)


def cmd_sim_run(args):
    cfg = ModelConfig.regime(args.regime, trials=args.trials, seed=args.seed)
    res = run_regime(cfg, args.method)
    res.write(args.out)


def cmd_sim_bench(args):
    rows = bench_scaling(args.dims, seed=args.seed)
    write_bench(os.path.join(args.out, "bench.csv"), rows)


def _seed(p):
    # accepted before or after the subcommand; the later one wins
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")


def build_parser() -> Parser:
    ap = Parser(prog="swicca", description="Streaming and static canonical correlation analysis.")
    ap.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    sub = ap.add_subparsers(dest="group", parser_class=Parser)

    cca = sub.add_parser("cca", help="static CCA").add_subparsers(dest="cmd", parser_class=Parser)
    fit = cca.add_parser("fit", help="fit CCA on two CSV matrices")
    fit.add_argument("--x", required=True)
    fit.add_argument("--y", required=True)
    fit.add_argument("--rank-x", type=_positive(int))
    fit.add_argument("--rank-y", type=_positive(int))
    fit.add_argument("--method", choices=("full", "icca", "scalable"), default="full")
    fit.add_argument("--out", required=True, help="output directory")
    _seed(fit)
    fit.set_defaults(func=cmd_cca_fit)

    sw = sub.add_parser("swicca", help="sliding-window ICCA").add_subparsers(dest="cmd", parser_class=Parser)
    st = sw.add_parser("stream", help="run SWICCA over paired CSV streams")
    st.add_argument("--x", required=True)
    st.add_argument("--y", required=True)
    st.add_argument("--rank-x", type=_positive(int), required=True)
    st.add_argument("--rank-y", type=_positive(int), required=True)
    st.add_argument("--window", type=_positive(int), required=True)
    st.add_argument("--backend", choices=("grouse", "isvd"), default="isvd")
    st.add_argument("--loadings-window", action="store_true")
    st.add_argument("--corr", choices=("d", "empirical"), default="d")
    st.add_argument("--truth-x", help="CSV of true x directions (p x k)")
    st.add_argument("--truth-y", help="CSV of true y directions (q x k)")
    st.add_argument("--out", required=True, help="output CSV")
    _seed(st)
    st.set_defaults(func=cmd_swicca_stream)

    go = sub.add_parser("genoja", help="Gen-Oja baseline").add_subparsers(dest="cmd", parser_class=Parser)
    gs = go.add_parser("stream", help="run Gen-Oja over paired CSV streams")
    gs.add_argument("--x", required=True)
    gs.add_argument("--y", required=True)
    gs.add_argument("--c-alpha", type=_positive(float), default=1.0)
    gs.add_argument("--c-beta", type=_positive(float), default=1.0)
    gs.add_argument("--lam", type=float, default=0.0)
    gs.add_argument("--truth-x")
    gs.add_argument("--truth-y")
    gs.add_argument("--out", required=True)
    _seed(gs)
    gs.set_defaults(func=cmd_genoja_stream)

    sim = sub.add_parser("sim", help="simulation study").add_subparsers(dest="cmd", parser_class=Parser)
    run = sim.add_parser("run", help="average metric curves over trials")
    run.add_argument("--regime", choices=sorted(REGIMES), required=True)
    run.add_argument("--method", choices=("swicca", "genoja", "both"), default="both")
    run.add_argument("--trials", type=_positive(int), default=50)
    _seed(run)
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_sim_run)
    bench = sim.add_parser("bench", help="per-update time and state size versus p")
    bench.add_argument("--dims", type=_dims, default=[512, 1024, 2048, 4096])
    _seed(bench)
    bench.add_argument("--out", required=True, help="output directory")
    bench.set_defaults(func=cmd_sim_bench)

    diag = sub.add_parser("diag", help="error-bound diagnostics").add_subparsers(dest="cmd", parser_class=Parser)
    bounds = diag.add_parser("bounds", help="print the error report as key,value CSV")
    _seed(bounds)
    bounds.add_argument("--eps", type=_positive(float), required=True)
    bounds.add_argument("--model", default="nf-df", help="regime[,key=value...] (default nf-df)")
    bounds.set_defaults(func=cmd_diag_bounds)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError(ap.format_usage().strip())
        if getattr(args, "lam", 0.0) < 0:
            raise UsageError("--lam must be non-negative")
        args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        if "usage:" not in str(exc):
            print(ap.format_usage().strip(), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, NotReady) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
