"""Deterministic, splittable random streams.

Randomness is drawn from numpy's Philox generator, a counter-based
bit generator whose output for a given (seed, stream path, position) is
identical on every platform.  A ``SeededRng`` names one stream; calling
:meth:`SeededRng.substream` derives an independent child stream, so the
augmentation of item ``i`` in a batch never depends on batch order or on
how many draws earlier items consumed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SeededRng"]


class SeededRng:
    """A named position in a tree of independent Philox streams."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._gen: np.random.Generator | None = None

    def substream(self, *indices: int) -> "SeededRng":
        """Return the child stream at ``indices`` below this one."""
        return SeededRng(self.seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        """The numpy Generator for this stream (created lazily, then reused)."""
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    # Convenience passthroughs used throughout the package.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator().uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        """Uniform integers in [low, high] inclusive (high=None means [0, low])."""
        if high is None:
            low, high = 0, low
        return self.generator().integers(low, high, size=size, endpoint=True)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator().normal(loc, scale, size)

    def choice_index(self, n: int) -> int:
        return int(self.generator().integers(0, n))

    def dirichlet(self, alpha):
        return self.generator().dirichlet(alpha)

    def beta(self, a, b):
        return float(self.generator().beta(a, b))

    def sign(self) -> float:
        return 1.0 if self.generator().integers(0, 2) == 1 else -1.0

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, path={self.path})"
