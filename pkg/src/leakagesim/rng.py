"""Seeded random substreams.

Every random quantity in a run comes from a generator keyed by
``(master_seed, stream, index)`` through :class:`numpy.random.SeedSequence`.
Substreams are therefore independent of evaluation order and worker count.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    UNIT_NUMERIC = 0
    UNIT_TEXT = 1
    CV_FOLDS = 2
    BOOTSTRAP = 3


def substream(seed: int, stream: Stream | int, index: int = 0) -> np.random.Generator:
    """Generator for one (stream, index) cell under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(index)]))
