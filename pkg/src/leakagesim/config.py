"""Simulation configuration: schema, loading, merging and validation."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

TOPIC_NAMES = ("TreatPos", "TreatNeg", "ConfPos", "ConfNeg", "General")

PRESETS: dict[str, dict[str, Any]] = {
    "default": {},
    "desk": {"n": 2000, "bootstrap_b": 300},
}


class ConfigError(ValueError):
    """Raised for an invalid configuration; ``problems`` lists every failed field."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class DgpCoefficients:
    treat_weights_x: tuple[float, float, float] = (0.8, -0.5, 0.3)
    treat_weight_u: float = 1.5
    treat_intercept: float = -1.0
    outcome_weights_x: tuple[float, float, float] = (-3.0, 2.0, -1.0)
    outcome_weight_u: float = -6.0
    outcome_tau: float = 5.0
    outcome_intercept: float = 4.0
    outcome_sigma: float = 2.0


@dataclass(frozen=True)
class TopicSpec:
    prompts: tuple[str, ...]
    keywords: tuple[str, ...] = ()


@dataclass(frozen=True)
class TopicMixture:
    confounder: float = 0.2
    treatment: float = 0.2
    general: float = 0.6

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.confounder, self.treatment, self.general)


@dataclass(frozen=True)
class LambdaPathSpec:
    n_lambdas: int = 100
    min_ratio: float = 0.001


@dataclass(frozen=True)
class SimConfig:
    seed: int = 42
    n: int = 10_000
    k: int = 20
    topic_mixture: TopicMixture = field(default_factory=TopicMixture)
    log_shift: float = 4.0
    paragraph_length: int = 40
    vocab_size: int = 256
    cv_folds: int = 10
    lambda_path: LambdaPathSpec = field(default_factory=LambdaPathSpec)
    bootstrap_b: int = 1000
    ci_level: float = 0.95
    hajek: bool = False
    clip_epsilon: float | None = None
    rebuild_vocab: bool = True
    dgp: DgpCoefficients = field(default_factory=DgpCoefficients)
    topics: dict[str, TopicSpec] = field(default_factory=dict)
    countries: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["dgp"]["treat_weights_x"] = list(self.dgp.treat_weights_x)
        out["dgp"]["outcome_weights_x"] = list(self.dgp.outcome_weights_x)
        out["topics"] = {
            name: {"prompts": list(spec.prompts), "keywords": list(spec.keywords)}
            for name, spec in self.topics.items()
        }
        out["countries"] = list(self.countries)
        return out

    def digest(self) -> str:
        """Short SHA-256 of the canonical JSON form; stamped on every output."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def problems(self) -> list[str]:
        return validate_dict(self.to_dict())

    def check(self) -> "SimConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self


def default_config_dict() -> dict[str, Any]:
    text = resources.files("leakagesim.data").joinpath("default_config.yaml").read_text("utf-8")
    return yaml.safe_load(text)


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key == "topics" and isinstance(value, dict) and isinstance(out.get(key), dict):
            # topics merge per topic, each topic replaced wholesale
            out[key] = {**out[key], **copy.deepcopy(value)}
        elif isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_dict(raw: dict[str, Any]) -> list[str]:
    """Return a list of field-level problems; an empty list means valid."""
    problems: list[str] = []
    known = {f for f in SimConfig.__dataclass_fields__}
    for key in raw:
        if key not in known:
            problems.append(f"{key}: unknown key")

    def need_int(key: str, lo: int) -> None:
        value = raw.get(key)
        if not isinstance(value, int) or isinstance(value, bool):
            problems.append(f"{key}: expected an integer, got {value!r}")
        elif value < lo:
            problems.append(f"{key}: must be >= {lo}, got {value}")

    need_int("n", 1)
    need_int("k", 1)
    need_int("paragraph_length", 0)
    need_int("vocab_size", 1)
    need_int("cv_folds", 2)
    need_int("bootstrap_b", 100)
    seed = raw.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        problems.append(f"seed: expected an integer in [0, 2**64), got {seed!r}")

    mix = raw.get("topic_mixture") or {}
    values = [mix.get(k) for k in ("confounder", "treatment", "general")]
    if not all(_is_number(v) for v in values):
        problems.append(f"topic_mixture: expected three numbers, got {mix!r}")
    else:
        if any(v < 0 for v in values):
            problems.append("topic_mixture: probabilities must be non-negative")
        if abs(sum(values) - 1.0) > 1e-9:
            problems.append(f"topic_mixture: probabilities must sum to 1, got {sum(values):g}")

    if not _is_number(raw.get("log_shift")):
        problems.append("log_shift: expected a number")
    level = raw.get("ci_level")
    if not _is_number(level) or not 0 < level < 1:
        problems.append(f"ci_level: must lie in (0, 1), got {level!r}")
    clip = raw.get("clip_epsilon")
    if clip is not None and (not _is_number(clip) or not 0 < clip < 0.5):
        problems.append(f"clip_epsilon: must be null or in (0, 0.5), got {clip!r}")
    for flag in ("hajek", "rebuild_vocab"):
        if not isinstance(raw.get(flag), bool):
            problems.append(f"{flag}: expected true/false")

    path = raw.get("lambda_path") or {}
    if not isinstance(path.get("n_lambdas"), int) or path.get("n_lambdas", 0) < 1:
        problems.append("lambda_path.n_lambdas: must be a positive integer")
    ratio = path.get("min_ratio")
    if not _is_number(ratio) or not 0 < ratio <= 1:
        problems.append("lambda_path.min_ratio: must lie in (0, 1]")

    dgp = raw.get("dgp") or {}
    for key in ("treat_weights_x", "outcome_weights_x"):
        vec = dgp.get(key)
        if not isinstance(vec, (list, tuple)) or len(vec) != 3 or not all(_is_number(v) for v in vec):
            problems.append(f"dgp.{key}: expected three numbers")
    for key in ("treat_weight_u", "treat_intercept", "outcome_weight_u", "outcome_tau",
                "outcome_intercept", "outcome_sigma"):
        if not _is_number(dgp.get(key)):
            problems.append(f"dgp.{key}: expected a number")
    sigma = dgp.get("outcome_sigma")
    if _is_number(sigma) and sigma <= 0:
        problems.append(f"dgp.outcome_sigma: must be > 0, got {sigma}")

    topics = raw.get("topics") or {}
    for name in TOPIC_NAMES:
        spec = topics.get(name)
        if not isinstance(spec, dict):
            problems.append(f"topics.{name}: missing")
            continue
        prompts = spec.get("prompts") or []
        keywords = spec.get("keywords") or []
        if name == "General":
            if len(prompts) < 1:
                problems.append("topics.General: needs at least one prompt")
        else:
            if len(prompts) != 4:
                problems.append(f"topics.{name}: needs exactly 4 prompts, got {len(prompts)}")
            if len(keywords) != 8:
                problems.append(f"topics.{name}: needs exactly 8 keywords, got {len(keywords)}")
    for name in topics:
        if name not in TOPIC_NAMES:
            problems.append(f"topics.{name}: unknown topic")
    uses_country = any("[COUNTRY]" in p for spec in topics.values() if isinstance(spec, dict)
                       for p in spec.get("prompts") or [])
    if uses_country and not raw.get("countries"):
        problems.append("countries: empty pool but prompts contain [COUNTRY]")
    return problems


def from_dict(raw: dict[str, Any]) -> SimConfig:
    """Build a validated SimConfig from a (possibly partial) mapping over the defaults."""
    merged = _merge(default_config_dict(), raw)
    problems = validate_dict(merged)
    if problems:
        raise ConfigError(problems)
    dgp = dict(merged["dgp"])
    dgp["treat_weights_x"] = tuple(float(v) for v in dgp["treat_weights_x"])
    dgp["outcome_weights_x"] = tuple(float(v) for v in dgp["outcome_weights_x"])
    dgp = {k: (float(v) if _is_number(v) else v) for k, v in dgp.items()}
    return SimConfig(
        seed=int(merged["seed"]),
        n=int(merged["n"]),
        k=int(merged["k"]),
        topic_mixture=TopicMixture(**{k: float(v) for k, v in merged["topic_mixture"].items()}),
        log_shift=float(merged["log_shift"]),
        paragraph_length=int(merged["paragraph_length"]),
        vocab_size=int(merged["vocab_size"]),
        cv_folds=int(merged["cv_folds"]),
        lambda_path=LambdaPathSpec(int(merged["lambda_path"]["n_lambdas"]),
                                   float(merged["lambda_path"]["min_ratio"])),
        bootstrap_b=int(merged["bootstrap_b"]),
        ci_level=float(merged["ci_level"]),
        hajek=bool(merged["hajek"]),
        clip_epsilon=None if merged["clip_epsilon"] is None else float(merged["clip_epsilon"]),
        rebuild_vocab=bool(merged["rebuild_vocab"]),
        dgp=DgpCoefficients(**dgp),
        topics={
            name: TopicSpec(tuple(merged["topics"][name]["prompts"]),
                            tuple(merged["topics"][name].get("keywords") or ()))
            for name in TOPIC_NAMES
        },
        countries=tuple(merged["countries"]),
    )


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a YAML (or JSON, a YAML subset) config file into a raw mapping."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return raw


def load_config(
    path: str | Path | None = None,
    *,
    preset: str | None = None,
    overrides: dict[str, Any] | None = None,
) -> SimConfig:
    """Resolve a config: built-in defaults < config file < preset < explicit overrides."""
    raw: dict[str, Any] = {}
    if path is not None:
        raw = read_config_file(path)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError([f"preset: unknown preset {preset!r}"])
        raw = _merge(raw, PRESETS[preset])
    if overrides:
        raw = _merge(raw, {k: v for k, v in overrides.items() if v is not None})
    return from_dict(raw)


def default_config() -> SimConfig:
    return from_dict({})
