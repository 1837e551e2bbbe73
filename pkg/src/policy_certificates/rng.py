"""
Deterministic random streams derived from one root seed.

Each consumer gets its own child of ``numpy.random.SeedSequence`` keyed by a
fixed index, so drawing more numbers in one stream (or adding a new stream)
never changes the numbers another stream produces.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

STREAM_KEYS: Dict[str, int] = {
    "instance": 0,
    "context": 1,
    "transition": 2,
    "reward": 3,
}


def stream(seed: int, name: str) -> np.random.Generator:
    """Return the generator for stream ``name`` under root ``seed``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAM_KEYS[name],))
    return np.random.default_rng(sequence)


@dataclass
class SeedStreams:
    """Independent generators for context, transition and reward sampling of one run."""
    seed: int
    context: np.random.Generator
    transition: np.random.Generator
    reward: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "SeedStreams":
        return cls(
            seed=int(seed),
            context=stream(seed, "context"),
            transition=stream(seed, "transition"),
            reward=stream(seed, "reward"),
        )
