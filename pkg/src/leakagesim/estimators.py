"""ATE estimators and the six-estimate experiment.

=====  =========================================================
tau1   OLS of Y on (T, X, U): the outcome model is correctly specified
tau2   OLS of Y on (T, X): omits U
tau3   IPW, propensity fit on [X | tfidf(W)] (no distillation)
tau4   IPW, propensity fit on [X | tfidf(W**)] (over-aggressive)
tau5   IPW, propensity fit on [X | tfidf(W*)] (perfect distillation)
tau6   IPW with the true propensities
=====  =========================================================
"""

from __future__ import annotations

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .config import SimConfig
from .dgp import Unit, numeric_arrays
from .distill import DistillRegime
from .features import TFIDF_VARIANT, CountTable, Vocabulary
from .propensity import (
    ConvergenceError,
    PropensityModel,
    fit_l1_logistic,
    fit_propensity_cv,
    predict_propensity,
)
from .rng import Stream, substream

logger = logging.getLogger(__name__)

NUDGE = 1e-12


class EstimateLabel(str, Enum):
    TAU1 = "Tau1_OracleU"
    TAU2 = "Tau2_OmitU"
    TAU3 = "Tau3_NoDistill"
    TAU4 = "Tau4_OverAggressive"
    TAU5 = "Tau5_PerfectDistill"
    TAU6 = "Tau6_TruePropensity"


REGIME_OF = {
    EstimateLabel.TAU3: DistillRegime.IDENTITY,
    EstimateLabel.TAU4: DistillRegime.OVER_AGGRESSIVE,
    EstimateLabel.TAU5: DistillRegime.PERFECT,
}


class RankDeficientError(ValueError):
    pass


class BootstrapError(RuntimeError):
    pass


@dataclass(frozen=True)
class Estimate:
    label: EstimateLabel
    value: float
    ci_low: float
    ci_high: float
    n_bootstrap: int
    n_failed: int = 0


@dataclass
class EstimateReport:
    estimates: list[Estimate]
    true_tau: float
    config_digest: str
    seed: int
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, label: EstimateLabel | str) -> Estimate:
        label = EstimateLabel(label)
        for est in self.estimates:
            if est.label is label:
                return est
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "true_tau": self.true_tau,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "estimates": [
                {"label": e.label.value, "value": e.value, "ci_low": e.ci_low, "ci_high": e.ci_high,
                 "n_bootstrap": e.n_bootstrap, "n_failed": e.n_failed}
                for e in self.estimates
            ],
            "metadata": self.metadata,
        }


def ols_ate(y, t, x, u=None) -> float:
    """Coefficient of T in the least-squares fit of y on [1, t, x (, 2u - 1)].

    Solved through a column-pivoted QR factorization.
    """
    y = np.asarray(y, dtype=float)
    cols = [np.ones_like(y), np.asarray(t, dtype=float), np.asarray(x, dtype=float).reshape(len(y), -1)]
    names = ["intercept", "t"] + [f"x{j + 1}" for j in range(cols[2].shape[1])]
    if u is not None:
        cols.append(2.0 * np.asarray(u, dtype=float) - 1.0)
        names.append("u")
    design = np.column_stack(cols)
    n, p = design.shape
    if n < p + 1:
        raise RankDeficientError(f"need at least {p + 1} rows for {p} columns, got {n}")
    q, r, piv = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > diag[0] * max(n, p) * np.finfo(float).eps)) if diag[0] > 0 else 0
    if rank < p:
        bad = sorted(names[j] for j in piv[rank:])
        raise RankDeficientError(f"design is rank deficient; collinear columns: {', '.join(bad)}")
    coef_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    coef = np.empty(p)
    coef[piv] = coef_piv
    return float(coef[1])


def ipw_ate(y, t, pi_hat, *, hajek: bool = False) -> float:
    """Horvitz-Thompson IPW estimate of the ATE (Hajek-normalized if ``hajek``)."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    pi_hat = np.asarray(pi_hat, dtype=float)
    if np.any(pi_hat <= 0.0) or np.any(pi_hat >= 1.0):
        raise ZeroDivisionError("propensities must lie strictly inside (0, 1)")
    w1 = t / pi_hat
    w0 = (1.0 - t) / (1.0 - pi_hat)
    if hajek:
        return float(np.sum(w1 * y) / np.sum(w1) - np.sum(w0 * y) / np.sum(w0))
    return float(np.mean(w1 * y - w0 * y))


def keep_interior(pi: np.ndarray, clip_epsilon: float | None = None) -> tuple[np.ndarray, int]:
    """Nudge propensities off exactly 0/1 (or clip to [eps, 1 - eps]); returns the count changed."""
    lo = NUDGE if clip_epsilon is None else clip_epsilon
    out = np.clip(pi, lo, 1.0 - lo)
    return out, int(np.count_nonzero(out != pi))


@dataclass(frozen=True)
class BootstrapResult:
    low: np.ndarray
    high: np.ndarray
    n_failed: np.ndarray
    replicates: np.ndarray


def resample_indices(seed: int, replicate: int, n: int) -> np.ndarray:
    return substream(seed, Stream.BOOTSTRAP, replicate).integers(n, size=n)


def bootstrap_ci(
    estimator: Callable[[np.ndarray], float | Sequence[float]],
    n: int,
    b: int = 1000,
    level: float = 0.95,
    *,
    seed: int = 0,
    executor: Executor | None = None,
    max_fail_rate: float = 0.01,
) -> BootstrapResult:
    """Percentile bootstrap over unit-level resamples.

    ``estimator`` maps a resample index array to one value or a vector of
    values; NaN or an exception marks a failed replicate. Failed replicates
    are dropped and counted; more than ``max_fail_rate`` of them is an error.
    """
    if b < 100:
        raise ValueError(f"b must be >= 100, got {b}")

    def one(r: int) -> np.ndarray:
        try:
            return np.atleast_1d(np.asarray(estimator(resample_indices(seed, r, n)), dtype=float))
        except Exception as exc:  # noqa: BLE001 - any failure just drops the replicate
            logger.debug("bootstrap replicate %d failed: %s", r, exc)
            return np.array([np.nan])

    rows = [one(r) for r in range(b)] if executor is None else list(executor.map(one, range(b)))
    width = max(len(row) for row in rows)
    reps = np.vstack([row if len(row) == width else np.full(width, np.nan) for row in rows])
    failed = np.isnan(reps).sum(axis=0)
    if np.any(failed > max_fail_rate * b):
        raise BootstrapError(f"estimator failed in {failed.max()} of {b} resamples")
    alpha = (1.0 - level) / 2.0
    low = np.array([np.quantile(col[~np.isnan(col)], alpha) for col in reps.T])
    high = np.array([np.quantile(col[~np.isnan(col)], 1.0 - alpha) for col in reps.T])
    return BootstrapResult(low, high, failed, reps)


@dataclass
class RegimeFit:
    regime: DistillRegime
    table: CountTable
    vocab: Vocabulary
    model: PropensityModel
    pi_hat: np.ndarray
    n_nudged: int


def _init_from(model: PropensityModel, column_names: Sequence[str]) -> tuple[float, np.ndarray]:
    known = dict(zip(model.column_names, model.weights))
    return model.intercept, np.array([known.get(name, 0.0) for name in column_names])


def fit_regime(
    x: np.ndarray,
    t: np.ndarray,
    documents,
    regime: DistillRegime,
    config: SimConfig,
    *,
    vocab: Vocabulary | None = None,
    executor: Executor | None = None,
) -> RegimeFit:
    """Vectorize one distillation regime, select lambda by CV and fit on all rows."""
    table = CountTable(documents, regime)
    rows = np.arange(len(t))
    fm, vocab = table.features(x, rows, config.vocab_size, vocab=vocab)
    index = list(DistillRegime).index(DistillRegime(regime))
    model = fit_propensity_cv(
        fm, t, folds=config.cv_folds,
        n_lambdas=config.lambda_path.n_lambdas, min_ratio=config.lambda_path.min_ratio,
        rng=substream(config.seed, Stream.CV_FOLDS, index), executor=executor,
    )
    pi, nudged = keep_interior(predict_propensity(model, fm), config.clip_epsilon)
    return RegimeFit(DistillRegime(regime), table, vocab, model, pi, nudged)


def _refit_ipw(fit: RegimeFit, x, t, y, rows, config: SimConfig) -> float:
    vocab = None if config.rebuild_vocab else fit.vocab
    fm, _ = fit.table.features(x, rows, config.vocab_size, vocab=vocab)
    try:
        model = fit_l1_logistic(fm, t[rows], fit.model.lam, init=_init_from(fit.model, fm.column_names))
    except ConvergenceError as exc:
        model = exc.model
    pi, _ = keep_interior(predict_propensity(model, fm), config.clip_epsilon)
    return ipw_ate(y[rows], t[rows], pi, hajek=config.hajek)


def run_six_estimates(
    units: Sequence[Unit],
    config: SimConfig,
    *,
    executor: Executor | None = None,
    bootstrap_b: int | None = None,
) -> tuple[EstimateReport, dict[DistillRegime, RegimeFit]]:
    """Point estimates and percentile-bootstrap CIs for all six estimators.

    Lambda is selected once per regime on the full sample and held fixed
    inside the bootstrap, where vectorization and propensity fits are redone
    on every resample.
    """
    data = numeric_arrays(list(units))
    x, t, y, u, pi_true = data["x"], data["t"], data["y"], data["u"], data["pi_true"]
    documents = [unit.document for unit in units]
    if any(doc is None for doc in documents):
        raise ValueError("every unit needs a document")

    fits: dict[DistillRegime, RegimeFit] = {}
    base_vocab = None
    for regime in (DistillRegime.IDENTITY, DistillRegime.OVER_AGGRESSIVE, DistillRegime.PERFECT):
        fits[regime] = fit_regime(x, t, documents, regime, config,
                                  vocab=None if config.rebuild_vocab else base_vocab, executor=executor)
        if base_vocab is None:
            base_vocab = fits[regime].vocab

    def all_six(rows: np.ndarray) -> np.ndarray:
        out = np.full(6, np.nan)
        for k, fn in enumerate((
            lambda: ols_ate(y[rows], t[rows], x[rows], u[rows]),
            lambda: ols_ate(y[rows], t[rows], x[rows]),
            lambda: _refit_ipw(fits[DistillRegime.IDENTITY], x, t, y, rows, config),
            lambda: _refit_ipw(fits[DistillRegime.OVER_AGGRESSIVE], x, t, y, rows, config),
            lambda: _refit_ipw(fits[DistillRegime.PERFECT], x, t, y, rows, config),
            lambda: ipw_ate(y[rows], t[rows], pi_true[rows], hajek=config.hajek),
        )):
            try:
                out[k] = fn()
            except Exception as exc:  # noqa: BLE001 - counted as a failed replicate
                logger.debug("estimate %d failed on resample: %s", k + 1, exc)
        return out

    point = np.array([
        ols_ate(y, t, x, u),
        ols_ate(y, t, x),
        ipw_ate(y, t, fits[DistillRegime.IDENTITY].pi_hat, hajek=config.hajek),
        ipw_ate(y, t, fits[DistillRegime.OVER_AGGRESSIVE].pi_hat, hajek=config.hajek),
        ipw_ate(y, t, fits[DistillRegime.PERFECT].pi_hat, hajek=config.hajek),
        ipw_ate(y, t, pi_true, hajek=config.hajek),
    ])
    b = config.bootstrap_b if bootstrap_b is None else bootstrap_b
    boot = bootstrap_ci(all_six, len(t), b, config.ci_level, seed=config.seed, executor=executor)

    estimates = [
        Estimate(label, float(point[k]), float(boot.low[k]), float(boot.high[k]), b, int(boot.n_failed[k]))
        for k, label in enumerate(EstimateLabel)
    ]
    metadata = {
        "n": len(t),
        "ipw_form": "hajek" if config.hajek else "horvitz-thompson",
        "clip_epsilon": config.clip_epsilon,
        "tfidf": TFIDF_VARIANT,
        "vocabulary": "rebuilt per regime" if config.rebuild_vocab else "shared (non-distilled)",
        "lambda_selection": f"{config.cv_folds}-fold CV, minimum mean deviance",
        "bootstrap": f"percentile, {b} resamples, lambda fixed at the full-sample choice",
        "regimes": {
            regime.value: {
                "lambda": fit.model.lam,
                "nonzero_weights": int(np.count_nonzero(fit.model.weights)),
                "vocabulary_size": len(fit.vocab),
                "nudged_propensities": fit.n_nudged,
            }
            for regime, fit in fits.items()
        },
    }
    report = EstimateReport(estimates, config.dgp.outcome_tau, config.digest(), config.seed, metadata)
    return report, fits
