"""Counter-based random streams.

A stream is identified by ``(master_seed, stream_index)`` and backed by a
Philox generator keyed through :class:`numpy.random.SeedSequence`. The same
pair always yields the same sequence, and distinct indices give independent
streams, so the mapping from sample index to random draw does not depend on
how work is split between workers.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream"]


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed!r}")
        if int(self.stream_index) < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self):
        ss = np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.Philox(ss))
