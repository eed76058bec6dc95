"""Seed derivation helpers.

All randomness in the library flows through NumPy's ``default_rng`` (PCG64),
keyed by ``SeedSequence`` over integer tuples.  Deriving independent streams
from (seed, tag, ...) tuples keeps every result reproducible across platforms
and independent of scheduling order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF

# Stream tags; distinct constants so derived streams never collide.
TAG_SPLIT = 0x51
TAG_EMBED = 0x52
TAG_SELECT = 0x53
TAG_SOLVER = 0x54
TAG_SYNTH = 0x55


def seed_sequence(*keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(k) & _MASK64 for k in keys])


def derive_rng(*keys: int) -> np.random.Generator:
    """PCG64 generator keyed by an integer tuple."""
    return np.random.default_rng(seed_sequence(*keys))


def derive_seed(*keys: int) -> int:
    """Collapse an integer tuple to a single derived 64-bit seed."""
    state = seed_sequence(*keys).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
