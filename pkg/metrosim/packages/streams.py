"""Counter-based random streams.

Every stochastic phase of a run draws from its own Philox stream keyed by
``(seed, month, phase, key)``, so what one phase draws never depends on how
many numbers other phases, other months or other runs consumed. Within a
stream draws are taken as whole vectors in agent-id order: the value an agent
receives depends on its position in that vector, so a different population
shifts the draws of every later agent. Runs are reproducible from the seed
and independent of worker count and completion order, not invariant to
changes in the population itself.
"""

from enum import IntEnum

import numpy as np

__all__ = ["Phase", "stream"]


class Phase(IntEnum):
    GENERATION = 0
    DEMOGRAPHY = 1
    GOODS = 4
    LABOR = 8
    HOUSING = 9


def stream(seed: int, month: int, phase: Phase, key: int = 0) -> np.random.Generator:
    """Return the generator for one (seed, month, phase, key) cell."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [int(seed), int(month), int(phase), int(key)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
