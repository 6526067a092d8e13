"""Full synthetic dataset: numeric draws plus a generated document per unit."""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import replace

from .config import SimConfig
from .dgp import Unit, generate_units
from .rng import Stream, substream
from .textgen import BaseLanguageModel, default_language_model, generate_document, make_topics


def attach_documents(
    units: list[Unit],
    config: SimConfig,
    lm: BaseLanguageModel | None = None,
    executor: Executor | None = None,
) -> list[Unit]:
    """Generate each unit's document from its own text substream."""
    lm = lm or default_language_model()
    topics = make_topics(config, lm)

    def one_chunk(chunk: list[Unit]) -> list[Unit]:
        cache: dict = {}
        return [
            replace(unit, document=generate_document(
                lm, unit.u, unit.t, config, substream(config.seed, Stream.UNIT_TEXT, unit.id),
                topics=topics, cache=cache))
            for unit in chunk
        ]

    size = 256
    chunks = [units[i:i + size] for i in range(0, len(units), size)]
    if executor is None:
        done = [one_chunk(c) for c in chunks]
    else:
        done = list(executor.map(one_chunk, chunks))
    return [unit for chunk in done for unit in chunk]


def simulate(config: SimConfig, lm: BaseLanguageModel | None = None, executor: Executor | None = None) -> list[Unit]:
    return attach_documents(generate_units(config), config, lm, executor)
