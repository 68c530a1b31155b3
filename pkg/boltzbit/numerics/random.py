from __future__ import annotations

import numpy as np
import torch

from boltzbit.settings import DTYPE


class RandomStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Backed by numpy's Philox generator, so a given key always yields the same sequence and distinct stream ids
    are statistically independent. ``counter`` counts the variates drawn so far.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.counter = 0
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    def spawn(self, stream_id: int) -> RandomStream:
        return RandomStream(self.seed, stream_id)

    def _count(self, size) -> None:
        self.counter += int(np.prod(size)) if size is not None else 1

    def normal(self, *shape: int) -> torch.Tensor:
        self._count(shape)
        return torch.as_tensor(np.asarray(self._generator.standard_normal(shape)), dtype=DTYPE)

    def uniform(self, *shape: int, low: float = 0.0, high: float = 1.0) -> torch.Tensor:
        self._count(shape)
        return torch.as_tensor(np.asarray(self._generator.uniform(low, high, shape)), dtype=DTYPE)

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        self._count((size,))
        return self._generator.integers(low, high, size)

    def choice(self, n: int, size: int, p: np.ndarray | None = None) -> np.ndarray:
        self._count((size,))
        return self._generator.choice(n, size=size, p=p)

    def permutation(self, n: int) -> np.ndarray:
        self._count((n,))
        return self._generator.permutation(n)
