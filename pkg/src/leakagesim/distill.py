"""Oracle distillation over labelled paragraphs, and leakage diagnostics."""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path
from typing import Iterator

from .textgen import Document, Paragraph, TopicId


class DistillRegime(str, Enum):
    IDENTITY = "Identity"
    PERFECT = "Perfect"
    OVER_AGGRESSIVE = "OverAggressive"


_REMOVED_ROLES = {
    DistillRegime.IDENTITY: frozenset(),
    DistillRegime.PERFECT: frozenset({"treatment"}),
    DistillRegime.OVER_AGGRESSIVE: frozenset({"treatment", "confounder"}),
}


def distill(doc: Document, regime: DistillRegime) -> Document:
    """Drop every paragraph carrying a role the regime removes; order is kept."""
    removed = _REMOVED_ROLES[DistillRegime(regime)]
    if not removed:
        return doc
    return Document(tuple(p for p in doc.paragraphs if not (p.roles & removed)))


def leakage_fraction(doc: Document, granularity: str = "paragraph") -> float:
    """Share of the document written by treatment-topic paragraphs.

    ``granularity`` is ``"paragraph"`` (count of paragraphs) or ``"token"``.
    """
    if granularity == "paragraph":
        total = len(doc.paragraphs)
        leaked = sum(1 for p in doc.paragraphs if "treatment" in p.roles)
    elif granularity == "token":
        total = doc.n_tokens
        leaked = sum(len(p.tokens) for p in doc.paragraphs if "treatment" in p.roles)
    else:
        raise ValueError(f"granularity must be 'paragraph' or 'token', got {granularity!r}")
    if total == 0:
        raise ZeroDivisionError("leakage fraction is undefined for an empty document")
    return leaked / total


def check_separability(doc: Document) -> bool:
    """True when no paragraph has more than one topic role."""
    return all(len(p.roles) <= 1 for p in doc.paragraphs)


def _parse_paragraph(raw: dict) -> Paragraph:
    topic = raw["topic"]
    labels = [topic] if isinstance(topic, str) else list(topic)
    if not labels:
        raise ValueError("paragraph has no topic label")
    ids = [TopicId(label) for label in labels]
    return Paragraph(
        topic=ids[0],
        tokens=tuple(str(tok) for tok in raw["tokens"]),
        prompt_id=int(raw.get("prompt_id", -1)),
        also_labeled=tuple(ids[1:]),
    )


def read_annotated_corpus(path: str | Path) -> Iterator[Document]:
    """Read an externally annotated corpus.

    JSON lines, one document per line, either a bare list of paragraphs or an
    object with a ``paragraphs`` key. Each paragraph is ``{"topic", "tokens"}``
    where ``topic`` is a topic name or a list of names (multi-label).
    """
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                paragraphs = raw["paragraphs"] if isinstance(raw, dict) else raw
                yield Document(tuple(_parse_paragraph(p) for p in paragraphs))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed document: {exc}") from exc
