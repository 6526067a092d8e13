"""Numeric part of the data-generating process.

    X ~ N(0, I_3),  U ~ Bernoulli(0.5),
    T ~ Bernoulli(sigmoid(b_T + w_T.X + g_T (2U - 1))),
    Y ~ N(b_Y + w_Y.X + g_Y (2U - 1) + tau T, sigma^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .config import ConfigError, DgpCoefficients, SimConfig
from .rng import Stream, substream
from .textgen import Document


@dataclass(frozen=True)
class Unit:
    id: int
    x: tuple[float, float, float]
    u: int
    t: int
    y: float
    pi_true: float
    document: Document | None = None


def draw_confounders(rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(3)


def draw_unobserved(rng: np.random.Generator) -> int:
    return int(rng.random() < 0.5)


def _centered(u: int) -> float:
    return 2.0 * u - 1.0


def true_propensity(x, u: int, c: DgpCoefficients) -> float:
    logit = c.treat_intercept + float(np.dot(c.treat_weights_x, x)) + c.treat_weight_u * _centered(u)
    # clamp keeps the probability strictly interior for extreme logits
    return float(np.clip(expit(logit), np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg))


def outcome_mean(x, u: int, t: int, c: DgpCoefficients) -> float:
    return (c.outcome_intercept + float(np.dot(c.outcome_weights_x, x))
            + c.outcome_weight_u * _centered(u) + c.outcome_tau * t)


def draw_outcome(rng: np.random.Generator, x, u: int, t: int, c: DgpCoefficients) -> float:
    """Gaussian outcome; ``outcome_sigma == 0`` returns the mean exactly."""
    noise = rng.standard_normal()
    return outcome_mean(x, u, t, c) + c.outcome_sigma * noise


def generate_unit(config: SimConfig, unit_id: int) -> Unit:
    """One unit from its own substream; independent of every other unit."""
    rng = substream(config.seed, Stream.UNIT_NUMERIC, unit_id)
    c = config.dgp
    x = draw_confounders(rng)
    u = draw_unobserved(rng)
    pi = true_propensity(x, u, c)
    t = int(rng.random() < pi)
    y = draw_outcome(rng, x, u, t, c)
    return Unit(id=unit_id, x=tuple(float(v) for v in x), u=u, t=t, y=float(y), pi_true=pi)


def generate_units(config: SimConfig) -> list[Unit]:
    if config.n < 1:
        raise ConfigError([f"n: must be >= 1, got {config.n}"])
    if config.dgp.outcome_sigma < 0:
        raise ConfigError([f"dgp.outcome_sigma: must be >= 0, got {config.dgp.outcome_sigma}"])
    return [generate_unit(config, i) for i in range(config.n)]


def numeric_arrays(units: list[Unit]) -> dict[str, np.ndarray]:
    """Column arrays (x, u, t, y, pi_true) for a list of units."""
    return {
        "x": np.array([u.x for u in units], dtype=float).reshape(len(units), 3),
        "u": np.array([u.u for u in units], dtype=float),
        "t": np.array([u.t for u in units], dtype=float),
        "y": np.array([u.y for u in units], dtype=float),
        "pi_true": np.array([u.pi_true for u in units], dtype=float),
    }
