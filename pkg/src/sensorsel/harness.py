"""Experiment harness: centering, synthetic fields, k-fold cross-validation
and timing benchmarks.

Selection and estimation are configured independently: a selector may
work on a reduced output (or on X alone), while the estimator evaluated
on held-out snapshots is always the ridge gain for the full outputs.
"""

from __future__ import annotations

import logging
import platform
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy

from . import baselines
from .errors import ConfigError, DimensionMismatch
from .greg import greg_select
from .io import load_matrix
from .linalg import as_matrix
from .problem import SelectionProblem, SelectionResult, Termination, naive_greedy
from .reduction import reduce_output
from .ridge import evaluate, fit

log = logging.getLogger(__name__)

ALGORITHMS = ("greg", "naive", "reg", "somp", "dg", "bdg", "random")
DEFAULT_MODE_RANK = 10


def center_columns_by_row_mean(x_train, x_test):
    """Subtract each row's training mean from both partitions."""
    x_train = as_matrix(x_train, name="x_train")
    x_test = as_matrix(x_test, name="x_test", allow_empty=True)
    if x_train.shape[0] != x_test.shape[0]:
        raise DimensionMismatch(
            f"train has {x_train.shape[0]} rows, test has {x_test.shape[0]}"
        )
    means = x_train.mean(axis=1, keepdims=True)
    return x_train - means, x_test - means, means[:, 0]


def synthesize_field(
    n: int,
    m: int,
    rank: int,
    noise_sigma: float = 0.0,
    seed: int = 0,
    mode: str = "reconstruction",
) -> tuple[np.ndarray, np.ndarray]:
    """Low-rank random field ``X = A B + noise`` and a target ``Y``.

    ``noise_sigma`` is relative to the RMS value of ``A B``.  In
    ``reconstruction`` mode ``Y = X``; in ``estimation`` mode ``Y`` is a
    single row ``h^T B``, a hidden linear response of the latent factors.
    """
    if not 1 <= rank <= min(n, m):
        raise ConfigError(f"rank={rank} outside 1..{min(n, m)}")
    if mode not in ("reconstruction", "estimation"):
        raise ConfigError(f"unknown synth mode {mode!r}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, rank))
    b = rng.standard_normal((rank, m))
    clean = a @ b
    x = clean
    if noise_sigma > 0:
        scale = noise_sigma * np.sqrt(np.mean(clean**2))
        x = clean + scale * rng.standard_normal((n, m))
    if mode == "reconstruction":
        return x, x.copy()
    h = rng.standard_normal(rank)
    return x, (h @ b)[None, :]


def random_select(n: int, p: int, seed: int = 0) -> SelectionResult:
    """Uniformly random sensors; a floor for comparing selectors."""
    idx = np.random.default_rng(seed).permutation(n)[:p].tolist()
    return SelectionResult(idx, [], [], Termination.BUDGET_REACHED, "random")


def select_sensors(
    algorithm: str,
    x: np.ndarray,
    y: np.ndarray,
    p: int,
    lambda_tilde: float = 0.0,
    reduction_rank: int | None = None,
    seed: int = 0,
) -> SelectionResult:
    """Dispatch to a selector using the per-algorithm target conventions.

    GREG, naive greedy and SOMP select against ``Y``, or against its
    reduction ``Z`` when ``reduction_rank`` is set.  REG uses ``X`` alone.
    DG and BDG use the ``reduction_rank`` leading modes of ``X`` (10 when
    unset, clamped to the data size).
    """
    n = x.shape[0]
    if algorithm in ("greg", "naive", "somp"):
        y_sel = y
        if reduction_rank is not None:
            y_sel = reduce_output(y, min(reduction_rank, min(y.shape))).z
        problem = SelectionProblem(x, y_sel, lambda_tilde, p)
        if algorithm == "greg":
            return greg_select(problem)
        if algorithm == "naive":
            return naive_greedy(problem)
        return baselines.somp_select(problem)
    if algorithm == "reg":
        return baselines.reg_select(x, p)
    if algorithm in ("dg", "bdg"):
        r = min(reduction_rank or DEFAULT_MODE_RANK, min(x.shape))
        fn = baselines.dg_select if algorithm == "dg" else baselines.bdg_select
        return fn(x, r, p)
    if algorithm == "random":
        return random_select(n, p, seed)
    raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


@dataclass
class ExperimentConfig:
    algorithm: str = "greg"
    budget_p: int = 1
    lambda_tilde: float = 0.0
    estimation_lambda_tilde: float | None = None
    reduction_rank: int | None = None
    folds: int = 5
    seed: int = 0
    center: bool = True
    x_path: str | None = None
    y_path: str | None = None
    input_format: str | None = None
    report_path: str | None = None

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.budget_p < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget_p}")
        if self.lambda_tilde < 0 or (self.estimation_lambda_tilde or 0.0) < 0:
            raise ConfigError("regularization must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.reduction_rank is not None and self.reduction_rank < 1:
            raise ConfigError("rank must be >= 1")

    @property
    def estimation_lambda(self) -> float:
        if self.estimation_lambda_tilde is None:
            return self.lambda_tilde
        return self.estimation_lambda_tilde


@dataclass
class FoldResult:
    test_snapshots: list[int]
    selected: list[int]
    termination: str
    train_error: list[float]
    test_error: list[float]
    gain_norm: list[float]
    selection_seconds: float


@dataclass
class CvReport:
    config: dict
    folds: list[FoldResult]
    mean_train_error: list[float]
    stderr_train_error: list[float]
    mean_test_error: list[float]
    stderr_test_error: list[float]
    mean_gain_norm: list[float]
    stderr_gain_norm: list[float]
    environment: dict = field(default_factory=dict)


def environment_fingerprint() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": sys.platform,
    }


def fold_partition(m: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle of the snapshot indices, cut into contiguous blocks."""
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    blocks = np.array_split(np.random.default_rng(seed).permutation(m), folds)
    smallest = min(len(b) for b in blocks)
    if smallest < 2:
        raise ConfigError(
            f"{m} snapshots in {folds} folds leaves a fold of {smallest} snapshot(s)"
        )
    return [np.sort(b) for b in blocks]


def group_partition(groups: Sequence) -> list[np.ndarray]:
    """One held-out fold per distinct group label, in sorted label order."""
    labels = np.asarray(groups)
    return [np.flatnonzero(labels == g) for g in np.unique(labels)]


def _mean_stderr(rows: np.ndarray) -> tuple[list[float], list[float]]:
    """Column mean and standard error, ignoring NaN padding."""
    mean = np.full(rows.shape[1], np.nan)
    se = np.full(rows.shape[1], np.nan)
    for j, col in enumerate(rows.T):
        col = col[~np.isnan(col)]
        if col.size:
            mean[j] = col.mean()
        if col.size > 1:
            se[j] = col.std(ddof=1) / np.sqrt(col.size)
    return mean.tolist(), se.tolist()


def cross_validate(
    x,
    y,
    config: ExperimentConfig,
    groups: Sequence | None = None,
) -> CvReport:
    """Cross-validated error curves for sensor counts ``1..budget_p``."""
    config.validate()
    x = as_matrix(x, name="x")
    y = as_matrix(y, name="y")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"x has {x.shape[1]} snapshots, y has {y.shape[1]}")
    m = x.shape[1]
    if groups is not None:
        if len(groups) != m:
            raise ConfigError(f"{len(groups)} group labels for {m} snapshots")
        parts = group_partition(groups)
        if len(parts) < 2:
            raise ConfigError("need at least two distinct groups")
    else:
        parts = fold_partition(m, config.folds, config.seed)
    p = config.budget_p
    if p > x.shape[0]:
        raise ConfigError(f"budget {p} exceeds {x.shape[0]} candidate sensors")

    folds: list[FoldResult] = []
    for f_idx, test in enumerate(parts):
        train = np.setdiff1d(np.arange(m), test)
        x_tr, x_te = x[:, train], x[:, test]
        y_tr, y_te = y[:, train], y[:, test]
        if config.center:
            x_tr, x_te, _ = center_columns_by_row_mean(x_tr, x_te)
            y_tr, y_te, _ = center_columns_by_row_mean(y_tr, y_te)
        t0 = time.perf_counter()
        result = select_sensors(
            config.algorithm,
            x_tr,
            y_tr,
            p,
            config.lambda_tilde,
            config.reduction_rank,
            seed=config.seed + f_idx,
        )
        elapsed = time.perf_counter() - t0
        est_problem = SelectionProblem(x_tr, y_tr, config.estimation_lambda, p)
        tr_err, te_err, gnorm = [], [], []
        for k in range(1, p + 1):
            if k > len(result.indices):
                tr_err.append(np.nan)
                te_err.append(np.nan)
                gnorm.append(np.nan)
                continue
            est = fit(est_problem, result.indices[:k])
            tr_err.append(evaluate(est, x_tr, y_tr).normalized_frobenius_error)
            te = evaluate(est, x_te, y_te)
            te_err.append(te.normalized_frobenius_error)
            gnorm.append(te.gain_norm)
        log.info(
            "fold %d/%d: %d sensors, test error %.4g",
            f_idx + 1,
            len(parts),
            len(result.indices),
            te_err[len(result.indices) - 1] if result.indices else float("nan"),
        )
        folds.append(
            FoldResult(
                test.tolist(),
                list(result.indices),
                result.termination.value,
                tr_err,
                te_err,
                gnorm,
                elapsed,
            )
        )
    mtr, setr = _mean_stderr(np.array([f.train_error for f in folds]))
    mte, sete = _mean_stderr(np.array([f.test_error for f in folds]))
    mg, seg = _mean_stderr(np.array([f.gain_norm for f in folds]))
    cfg = asdict(config)
    cfg["estimation_lambda_tilde"] = config.estimation_lambda
    return CvReport(cfg, folds, mtr, setr, mte, sete, mg, seg, environment_fingerprint())


def run_cross_validation(config: ExperimentConfig, groups: Sequence | None = None) -> CvReport:
    """Load ``config.x_path`` (and ``y_path``, defaulting to ``Y = X``) and cross-validate."""
    if config.x_path is None:
        raise ConfigError("x_path is required")
    x = load_matrix(config.x_path, config.input_format)
    y = load_matrix(config.y_path, config.input_format) if config.y_path else x
    return cross_validate(x, y, config, groups)


@dataclass
class BenchRow:
    algorithm: str
    n: int
    m: int
    n_y: int
    p: int
    repeats: int
    median_seconds: float
    min_seconds: float


def time_selector(fn: Callable[[], object], repeats: int) -> list[float]:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return times


def run_benchmark(
    sizes: Sequence[tuple[int, int, int, int]],
    algorithm: str = "greg",
    repeats: int = 3,
    seed: int = 0,
    lambda_tilde: float = 0.0,
) -> list[BenchRow]:
    """Median wall time of one selector on random data of each size."""
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    rows = []
    for n, m, n_y, p in sizes:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, m))
        y = rng.standard_normal((n_y, m))
        times = time_selector(
            lambda: select_sensors(algorithm, x, y, p, lambda_tilde, seed=seed), repeats
        )
        rows.append(
            BenchRow(algorithm, n, m, n_y, p, repeats, statistics.median(times), min(times))
        )
        log.info("bench %s N=%d M=%d Ny=%d p=%d: %.4gs", algorithm, n, m, n_y, p, rows[-1].median_seconds)
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    header = "algorithm,n,m,n_y,p,repeats,median_seconds,min_seconds\n"
    body = "".join(
        f"{r.algorithm},{r.n},{r.m},{r.n_y},{r.p},{r.repeats},"
        f"{r.median_seconds:.6e},{r.min_seconds:.6e}\n"
        for r in rows
    )
    return header + body
