"""L1-penalized logistic regression for propensity scores.

Objective (intercept unpenalized)::

    (1/n) sum_i [log(1 + exp(eta_i)) - t_i eta_i] + lam * sum_j |w_j|,
    eta_i = b + x_i . w

Solved by proximal Newton: each outer step forms the IRLS quadratic
approximation at the current iterate and minimizes it (plus the L1 term) by
cyclic coordinate descent; the step toward that minimizer is then halved
until the true objective does not increase.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba
import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

DEVIANCE_CLAMP = 1e-12
_MIN_WEIGHT = 1e-5


class DegenerateLabelsError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Sweep budget exhausted; ``model`` holds the last iterate."""

    def __init__(self, message: str, model: "PropensityModel"):
        super().__init__(message)
        self.model = model


@dataclass(frozen=True)
class PropensityModel:
    weights: np.ndarray
    intercept: float
    lam: float
    cv_curve: tuple[tuple[float, float], ...] = ()
    column_names: tuple[str, ...] = ()
    n_sweeps: int = 0
    objective_trace: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        names = self.column_names or tuple(f"c{j}" for j in range(len(self.weights)))
        return {
            "intercept": self.intercept,
            "lambda": self.lam,
            "weights": {name: float(w) for name, w in zip(names, self.weights)},
            "cv_curve": [[lam, dev] for lam, dev in self.cv_curve],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, raw: dict) -> "PropensityModel":
        names = tuple(raw["weights"])
        return cls(
            weights=np.array([raw["weights"][n] for n in names], dtype=float),
            intercept=float(raw["intercept"]),
            lam=float(raw["lambda"]),
            cv_curve=tuple((float(a), float(b)) for a, b in raw.get("cv_curve", [])),
            column_names=names,
        )


def soft_threshold(z: float, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return float(np.sign(z) * max(abs(z) - gamma, 0.0))


@numba.njit(cache=True, nogil=True)
def _cd_sweep(xt, xwx, w, wsum, resid, beta, b0, lam, coords):
    """One cyclic pass over the intercept and ``coords``; returns (b0, max change)."""
    n = xt.shape[1]
    max_delta = 0.0
    acc = 0.0
    for i in range(n):
        acc += w[i] * resid[i]
    delta = acc / wsum
    if delta != 0.0:
        b0 += delta
        for i in range(n):
            resid[i] -= delta
        max_delta = abs(delta)
    for j in coords:
        if xwx[j] <= 0.0:
            continue
        acc = 0.0
        for i in range(n):
            acc += w[i] * xt[j, i] * resid[i]
        rho = acc / n + xwx[j] * beta[j]
        if rho > lam:
            new = (rho - lam) / xwx[j]
        elif rho < -lam:
            new = (rho + lam) / xwx[j]
        else:
            new = 0.0
        delta = new - beta[j]
        if delta != 0.0:
            beta[j] = new
            for i in range(n):
                resid[i] -= delta * xt[j, i]
            if abs(delta) > max_delta:
                max_delta = abs(delta)
    return b0, max_delta


@numba.njit(cache=True, nogil=True)
def _cd_weighted_lasso(xt, xwx, w, resid, beta, b0, lam, tol, max_sweeps):
    """Cyclic coordinate descent on (1/2n) sum w_i r_i^2 + lam |beta|_1.

    ``xt`` is the (p, n) transposed design; ``resid`` is z - b0 - X beta and is
    updated in place along with ``beta``. Full sweeps alternate with sweeps
    over the current non-zero set until a full sweep moves nothing by more
    than ``tol``. Returns (b0, sweeps, converged).
    """
    p = xt.shape[0]
    wsum = 0.0
    for i in range(w.shape[0]):
        wsum += w[i]
    everything = np.arange(p)
    sweeps = 0
    while sweeps < max_sweeps:
        b0, max_delta = _cd_sweep(xt, xwx, w, wsum, resid, beta, b0, lam, everything)
        sweeps += 1
        if max_delta < tol:
            return b0, sweeps, True
        active = np.flatnonzero(beta)
        while sweeps < max_sweeps:
            b0, max_delta = _cd_sweep(xt, xwx, w, wsum, resid, beta, b0, lam, active)
            sweeps += 1
            if max_delta < tol:
                break
    return b0, sweeps, False


def _loss(eta: np.ndarray, t: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, eta) - t * eta))


def penalized_objective(X: np.ndarray, t: np.ndarray, weights: np.ndarray, intercept: float, lam: float) -> float:
    eta = intercept + X @ weights
    return _loss(eta, t) + lam * float(np.abs(weights).sum())


def loss_gradient(X: np.ndarray, t: np.ndarray, weights: np.ndarray, intercept: float) -> tuple[float, np.ndarray]:
    """Gradient of the unpenalized mean loss: (d/d intercept, d/d weights)."""
    resid = expit(intercept + X @ weights) - t
    return float(resid.mean()), X.T @ resid / len(t)


def _as_arrays(features, t) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    names: tuple[str, ...] = ()
    if hasattr(features, "values") and hasattr(features, "column_names"):
        names = tuple(features.column_names)
        features = features.values
    X = np.asarray(features, dtype=float)
    t = np.asarray(t, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != t.shape[0]:
        raise ValueError(f"feature rows {X.shape} do not match {t.shape[0]} labels")
    return X, t, names


def _check_labels(t: np.ndarray) -> None:
    if len(t) < 2:
        raise DegenerateLabelsError("need at least two rows")
    if not np.all((t == 0) | (t == 1)):
        raise DegenerateLabelsError("labels must be 0/1")
    if t.min() == t.max():
        raise DegenerateLabelsError(f"all labels equal {int(t[0])}; both classes are required")


def lambda_max(features, t) -> float:
    """Smallest penalty at which every weight is zero."""
    X, t, _ = _as_arrays(features, t)
    return float(np.max(np.abs(X.T @ (t - t.mean()))) / len(t)) if X.shape[1] else 0.0


def lambda_path(features, t, n_lambdas: int = 100, min_ratio: float = 1e-3) -> np.ndarray:
    """Log-spaced, descending from lambda_max to ``min_ratio * lambda_max``."""
    top = lambda_max(features, t)
    if top <= 0.0:
        return np.zeros(1)
    if n_lambdas == 1:
        return np.array([top])
    return np.geomspace(top, top * min_ratio, n_lambdas)


def fit_l1_logistic(
    features,
    t,
    lam: float,
    *,
    init: tuple[float, np.ndarray] | None = None,
    tol: float = 1e-7,
    max_sweeps: int = 10_000,
) -> PropensityModel:
    """Fit at a single penalty ``lam``.

    Converged when the largest coefficient change of an outer step is below
    ``tol``. ``max_sweeps`` bounds the total number of coordinate-descent
    sweeps; exceeding it raises :class:`ConvergenceError`.
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    X, t, names = _as_arrays(features, t)
    _check_labels(t)
    n, p = X.shape
    xt = np.ascontiguousarray(X.T)

    if init is None:
        mean_t = t.mean()
        b0 = float(np.log(mean_t / (1.0 - mean_t)))
        beta = np.zeros(p)
    else:
        b0, beta = float(init[0]), np.array(init[1], dtype=float)
    eta = b0 + X @ beta
    obj = _loss(eta, t) + lam * np.abs(beta).sum()
    trace = [obj]
    sweeps = 0

    def model(b0, beta, sweeps):
        return PropensityModel(beta.copy(), float(b0), float(lam), column_names=names,
                               n_sweeps=sweeps, objective_trace=tuple(trace))

    while True:
        prob = expit(eta)
        w = np.maximum(prob * (1.0 - prob), _MIN_WEIGHT)
        z = eta + (t - prob) / w
        xwx = (xt * xt) @ w / n
        new_beta = beta.copy()
        resid = z - eta
        new_b0, used, _ = _cd_weighted_lasso(xt, xwx, w, resid, new_beta, b0, lam, tol, max_sweeps - sweeps)
        sweeps += used

        d_b0, d_beta = new_b0 - b0, new_beta - beta
        step = 1.0
        while True:
            cand_b0, cand_beta = b0 + step * d_b0, beta + step * d_beta
            cand_eta = eta + step * (d_b0 + X @ d_beta) if step != 1.0 else new_b0 + X @ new_beta
            cand_obj = _loss(cand_eta, t) + lam * np.abs(cand_beta).sum()
            if cand_obj <= obj or step < 1e-10:
                break
            step *= 0.5
        if cand_obj > obj:
            # no descent along the Newton direction: at the optimum up to rounding
            return model(b0, beta, sweeps)
        change = step * max(abs(d_b0), float(np.max(np.abs(d_beta))) if p else 0.0)
        b0, beta, eta, obj = cand_b0, cand_beta, cand_eta, cand_obj
        trace.append(obj)
        if change < tol:
            return model(b0, beta, sweeps)
        if sweeps >= max_sweeps:
            raise ConvergenceError(f"no convergence after {sweeps} sweeps at lambda={lam:g}",
                                   model(b0, beta, sweeps))


def predict_propensity(model: PropensityModel, features) -> np.ndarray:
    X = features.values if hasattr(features, "values") else np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.weights):
        raise ValueError(f"feature width {X.shape[-1]} does not match model width {len(model.weights)}")
    return expit(model.intercept + X @ model.weights)


def binomial_deviance(t: np.ndarray, prob: np.ndarray, clamp: float = DEVIANCE_CLAMP) -> float:
    """Mean binomial deviance with probabilities clamped to [clamp, 1 - clamp]."""
    prob = np.clip(prob, clamp, 1.0 - clamp)
    return float(-2.0 * np.mean(t * np.log(prob) + (1.0 - t) * np.log1p(-prob)))


def make_folds(n: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Seeded shuffle split into ``folds`` index arrays whose sizes differ by at most one."""
    if n < folds:
        raise ValueError(f"need at least {folds} rows for {folds}-fold CV, got {n}")
    return [np.sort(part) for part in np.array_split(rng.permutation(n), folds)]


def fit_path(X: np.ndarray, t: np.ndarray, path: Sequence[float], **kwargs) -> list[PropensityModel]:
    """Fits along a descending path with warm starts; a fit that runs out of
    sweeps contributes its last iterate."""
    models = []
    init = None
    for lam in path:
        try:
            m = fit_l1_logistic(X, t, lam, init=init, **kwargs)
        except ConvergenceError as exc:
            logger.warning("%s; using last iterate", exc)
            m = exc.model
        models.append(m)
        init = (m.intercept, m.weights)
    return models


def cv_select_lambda(
    features,
    t,
    folds: int = 10,
    path: Sequence[float] | None = None,
    *,
    rng: np.random.Generator | None = None,
    executor=None,
    **fit_kwargs,
) -> tuple[float, tuple[tuple[float, float], ...]]:
    """K-fold CV over ``path``; returns the minimum mean held-out deviance
    lambda and the (lambda, mean deviance) curve.

    A training fold with a single class contributes the deviance of its
    constant (clamped) prediction rather than failing.
    """
    X, t, _ = _as_arrays(features, t)
    path = np.asarray(lambda_path(X, t) if path is None else path, dtype=float)
    if path.size == 0:
        raise ValueError("lambda path is empty")
    if np.any(np.diff(path) > 0):
        raise ValueError("lambda path must be descending")
    if rng is None:
        rng = np.random.default_rng(0)
    parts = make_folds(len(t), folds, rng)

    def fold_deviances(k: int) -> np.ndarray:
        test = parts[k]
        train = np.concatenate([parts[j] for j in range(folds) if j != k])
        t_train = t[train]
        if t_train.min() == t_train.max():
            return np.full(path.size, binomial_deviance(t[test], np.full(len(test), t_train[0])))
        models = fit_path(X[train], t_train, path, **fit_kwargs)
        return np.array([binomial_deviance(t[test], predict_propensity(m, X[test])) for m in models])

    if executor is None:
        devs = [fold_deviances(k) for k in range(folds)]
    else:
        devs = list(executor.map(fold_deviances, range(folds)))
    curve = np.mean(devs, axis=0)
    best = int(np.argmin(curve))
    return float(path[best]), tuple((float(a), float(b)) for a, b in zip(path, curve))


def fit_propensity_cv(
    features,
    t,
    *,
    folds: int = 10,
    n_lambdas: int = 100,
    min_ratio: float = 1e-3,
    rng: np.random.Generator | None = None,
    executor=None,
) -> PropensityModel:
    """Select lambda by CV, then refit on all rows (warm-started along the path)."""
    X, t, names = _as_arrays(features, t)
    _check_labels(t)
    path = lambda_path(X, t, n_lambdas, min_ratio)
    best, curve = cv_select_lambda(X, t, folds, path, rng=rng, executor=executor)
    models = fit_path(X, t, path[path >= best])
    return replace(models[-1], cv_curve=curve, column_names=names)
