"""Deterministic substream management.

One master seed is expanded into a tree of independent streams through
SeedSequence spawn keys.  Every unit of work (candidate i, probe j,
retry r, ...) owns its own substream, so simulations can run in any
order -- serially or across threads -- with bit-identical results.
Philox is counter-based and cheap to initialize per substream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Key namespaces shared by all operations. Each operation receives its own
# subtree from the caller, so identical keys in different subtrees never
# collide.
K_DRAW = 0        # global draws of an operation (candidates, probes)
K_UNIT = 1        # per-candidate / per-probe replicate streams
K_RETRY = 2       # fresh substream per retry attempt
K_OBSERVED = 3    # observed-data simulation in experiments
K_DIRECTIONS = 4  # projection directions
K_ARM = 5         # experiment arms
K_RUN = 6         # outer repetition indices
K_COMPARISON = 7  # inner comparison indices


@dataclass(frozen=True)
class RngTree:
    """A node in the substream tree, identified by (entropy, spawn_key)."""

    seq: np.random.SeedSequence

    @classmethod
    def from_seed(cls, seed) -> "RngTree":
        if isinstance(seed, RngTree):
            return seed
        if isinstance(seed, np.random.SeedSequence):
            return cls(seed)
        return cls(np.random.SeedSequence(int(seed)))

    def child(self, *key: int) -> "RngTree":
        spawn_key = tuple(self.seq.spawn_key) + tuple(int(k) for k in key)
        return RngTree(np.random.SeedSequence(self.seq.entropy, spawn_key=spawn_key))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seq))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, RngTree, SeedSequence or integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return RngTree.from_seed(rng).generator()
