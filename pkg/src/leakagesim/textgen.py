"""Topic-conditioned document generation.

Each paragraph gets a topic drawn from the unit's (u, t), starts from one of
that topic's prompts, and continues with tokens sampled from a base language
model whose next-token distribution is multiplied by ``exp(log_shift)`` on the
topic keywords and renormalized.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from collections.abc import Hashable, Sequence
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import TYPE_CHECKING

import numpy as np

from .config import ConfigError, TopicMixture

if TYPE_CHECKING:
    from .config import SimConfig

COUNTRY_PLACEHOLDER = "[COUNTRY]"

_PUNCT = re.compile(r"[^\w\s']")


class TopicId(str, Enum):
    TREAT_POS = "TreatPos"
    TREAT_NEG = "TreatNeg"
    CONF_POS = "ConfPos"
    CONF_NEG = "ConfNeg"
    GENERAL = "General"

    @property
    def role(self) -> str:
        """'treatment', 'confounder' or 'general'."""
        if self in (TopicId.TREAT_POS, TopicId.TREAT_NEG):
            return "treatment"
        if self in (TopicId.CONF_POS, TopicId.CONF_NEG):
            return "confounder"
        return "general"


class DegenerateDistributionError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokens with punctuation removed (apostrophes kept)."""
    return _PUNCT.sub(" ", text.lower()).split()


@dataclass(frozen=True)
class Topic:
    id: TopicId
    prompts: tuple[str, ...]
    keywords: tuple[str, ...]
    keyword_ids: tuple[int, ...]
    log_shift: float


@dataclass(frozen=True)
class Paragraph:
    topic: TopicId
    tokens: tuple[str, ...]
    prompt_id: int = -1
    # extra annotations, only set for externally ingested corpora
    also_labeled: tuple[TopicId, ...] = ()

    @property
    def labels(self) -> frozenset[TopicId]:
        return frozenset((self.topic, *self.also_labeled))

    @property
    def roles(self) -> frozenset[str]:
        return frozenset(label.role for label in self.labels)


@dataclass(frozen=True)
class Document:
    paragraphs: tuple[Paragraph, ...] = ()

    def __len__(self) -> int:
        return len(self.paragraphs)

    @property
    def n_tokens(self) -> int:
        return sum(len(p.tokens) for p in self.paragraphs)

    @property
    def topics(self) -> list[TopicId]:
        return [p.topic for p in self.paragraphs]


class BaseLanguageModel(ABC):
    """Next-token distribution over a fixed, ordered vocabulary.

    Implementations must be read-only after construction so one instance can
    be shared across workers.
    """

    vocabulary: tuple[str, ...]

    @abstractmethod
    def next_token_distribution(self, context: Sequence[str]) -> np.ndarray:
        """Probability vector over ``vocabulary`` given the preceding tokens."""

    def context_key(self, context: Sequence[str]) -> Hashable:
        """Key such that equal keys imply equal next-token distributions."""
        return tuple(context)

    def index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.vocabulary)}


class BigramLanguageModel(BaseLanguageModel):
    """Add-one smoothed bigram model.

    A context whose last token is outside the vocabulary (or an empty
    context) gets the uniform distribution, which is what add-one smoothing
    gives an unseen history.
    """

    def __init__(self, sentences: Sequence[str]):
        stream = [tok for line in sentences for tok in tokenize(line)]
        if not stream:
            raise ValueError("empty training corpus")
        self.vocabulary = tuple(sorted(set(stream)))
        self._index = {tok: i for i, tok in enumerate(self.vocabulary)}
        ids = np.fromiter((self._index[tok] for tok in stream), dtype=np.int64, count=len(stream))
        v = len(self.vocabulary)
        counts = np.zeros((v, v), dtype=np.float64)
        np.add.at(counts, (ids[:-1], ids[1:]), 1.0)
        self._probs = (counts + 1.0) / (counts.sum(axis=1, keepdims=True) + v)
        self._probs.setflags(write=False)
        self._uniform = np.full(v, 1.0 / v)
        self._uniform.setflags(write=False)

    @classmethod
    def from_seed_corpus(cls) -> "BigramLanguageModel":
        text = resources.files("leakagesim.data").joinpath("seed_corpus.txt").read_text("utf-8")
        return cls([line for line in text.splitlines() if line.strip()])

    def index(self) -> dict[str, int]:
        return dict(self._index)

    def context_key(self, context: Sequence[str]) -> Hashable:
        if not context:
            return None
        return self._index.get(context[-1])

    def next_token_distribution(self, context: Sequence[str]) -> np.ndarray:
        key = self.context_key(context)
        if key is None:
            return self._uniform
        return self._probs[key]


_DEFAULT_LM: BigramLanguageModel | None = None


def default_language_model() -> BigramLanguageModel:
    """Process-wide shared instance of the built-in bigram model."""
    global _DEFAULT_LM
    if _DEFAULT_LM is None:
        _DEFAULT_LM = BigramLanguageModel.from_seed_corpus()
    return _DEFAULT_LM


def make_topics(config: "SimConfig", lm: BaseLanguageModel) -> dict[TopicId, Topic]:
    """Resolve configured topics against the model vocabulary."""
    index = lm.index()
    topics = {}
    for tid in TopicId:
        spec = config.topics[tid.value]
        missing = [kw for kw in spec.keywords if kw not in index]
        if missing:
            raise ConfigError([f"topics.{tid.value}.keywords: not in model vocabulary: {missing}"])
        topics[tid] = Topic(
            id=tid,
            prompts=tuple(spec.prompts),
            keywords=tuple(spec.keywords),
            keyword_ids=tuple(index[kw] for kw in spec.keywords),
            log_shift=0.0 if tid is TopicId.GENERAL else float(config.log_shift),
        )
    return topics


def assign_topic(u: int, t: int, mix: TopicMixture | Sequence[float], rng: np.random.Generator) -> TopicId:
    """Draw a paragraph topic: the u-matched confounder topic, the t-matched treatment topic, or General."""
    probs = mix.as_tuple() if isinstance(mix, TopicMixture) else tuple(mix)
    if len(probs) != 3 or any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
        raise ConfigError([f"topic_mixture: invalid probabilities {probs}"])
    draw = rng.random()
    if draw < probs[0]:
        return TopicId.CONF_POS if u == 1 else TopicId.CONF_NEG
    if draw < probs[0] + probs[1]:
        return TopicId.TREAT_POS if t == 1 else TopicId.TREAT_NEG
    return TopicId.GENERAL


def select_prompt(topic: Topic, countries: Sequence[str], rng: np.random.Generator) -> tuple[int, list[str]]:
    """Pick a prompt uniformly; returns its index and tokens after country substitution."""
    if not topic.prompts:
        raise ConfigError([f"topics.{topic.id.value}: no prompts"])
    prompt_id = int(rng.integers(len(topic.prompts)))
    text = topic.prompts[prompt_id]
    if COUNTRY_PLACEHOLDER in text:
        if not countries:
            raise ConfigError(["countries: empty pool but prompt contains [COUNTRY]"])
        text = text.replace(COUNTRY_PLACEHOLDER, countries[int(rng.integers(len(countries)))])
    return prompt_id, tokenize(text)


def shifted_distribution(base: np.ndarray, topic: Topic) -> np.ndarray:
    """Multiply keyword probabilities by exp(log_shift) and renormalize."""
    out = np.array(base, dtype=np.float64)
    if topic.keyword_ids and topic.log_shift != 0.0:
        out[list(topic.keyword_ids)] *= np.exp(topic.log_shift)
    total = out.sum()
    if not total > 0.0:
        raise DegenerateDistributionError(f"shifted distribution for {topic.id.value} has zero mass")
    return out / total


def generate_paragraph(
    lm: BaseLanguageModel,
    topic: Topic,
    prompt: Sequence[str],
    length: int,
    rng: np.random.Generator,
    *,
    prompt_id: int = -1,
    cache: dict | None = None,
) -> Paragraph:
    """Continue ``prompt`` by ``length`` tokens sampled under the topic's shift.

    ``cache`` maps (topic, context key) to a cumulative distribution and may
    be shared between calls with the same model and topics.
    """
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    tokens = list(prompt)
    vocab = lm.vocabulary
    if cache is None:
        cache = {}
    for draw in rng.random(length):
        key = (topic.id, topic.log_shift, lm.context_key(tokens))
        cdf = cache.get(key)
        if cdf is None:
            cdf = np.cumsum(shifted_distribution(lm.next_token_distribution(tokens), topic))
            cache[key] = cdf
        idx = int(np.searchsorted(cdf, draw * cdf[-1], side="right"))
        tokens.append(vocab[min(idx, len(vocab) - 1)])
    return Paragraph(topic=topic.id, tokens=tuple(tokens), prompt_id=prompt_id)


def generate_document(
    lm: BaseLanguageModel,
    u: int,
    t: int,
    config: "SimConfig",
    rng: np.random.Generator,
    *,
    topics: dict[TopicId, Topic] | None = None,
    cache: dict | None = None,
) -> Document:
    if config.k < 1:
        raise ConfigError([f"k: must be >= 1, got {config.k}"])
    if topics is None:
        topics = make_topics(config, lm)
    paragraphs = []
    for _ in range(config.k):
        topic = topics[assign_topic(u, t, config.topic_mixture, rng)]
        prompt_id, prompt = select_prompt(topic, config.countries, rng)
        paragraphs.append(
            generate_paragraph(lm, topic, prompt, config.paragraph_length, rng,
                               prompt_id=prompt_id, cache=cache)
        )
    return Document(tuple(paragraphs))
