"""Synthetic regimes, experiment runner, and the scaling benchmark."""

from .model import (
    REGIMES,
    ModelConfig,
    ModelTruth,
    drift_basis,
    gen_pair,
    gen_stream,
    make_truth,
)

__all__ = [
    "REGIMES",
    "ModelConfig",
    "ModelTruth",
    "drift_basis",
    "gen_pair",
    "gen_stream",
    "make_truth",
]

from .runner import (  # noqa: E402
    BenchRow,
    RegimeResult,
    TrialMetrics,
    bench_scaling,
    run_regime,
    swicca_config_for,
    threads_from_env,
    tune_genoja,
    write_bench,
)

__all__ += [
    "BenchRow",
    "RegimeResult",
    "TrialMetrics",
    "bench_scaling",
    "run_regime",
    "swicca_config_for",
    "threads_from_env",
    "tune_genoja",
    "write_bench",
]
