from __future__ import annotations

import zlib
from typing import Sequence

import numpy as np

__all__ = ('RNG_ALGORITHM', 'Rng')

# Philox-4x64 counter-based generator; bump the suffix if the derivation of
# child seeds ever changes.
RNG_ALGORITHM = 'philox4x64/v1'


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode('utf-8'))
    return int(key) & 0xFFFF_FFFF_FFFF_FFFF


class Rng:
    """Seeded random stream built on numpy's Philox bit generator.

    Parameters
    ----------
    seed: int
        64-bit seed. Identical seeds give identical streams on every platform.
    """

    __slots__ = ('seed', '_generator')

    def __init__(self, seed: int) -> None:
        self.seed: int = _key_to_int(seed)
        self._generator = np.random.Generator(np.random.Philox(self.seed))

    def child(self, *keys: int | str) -> Rng:
        """Derive an independent stream keyed by ``keys``.

        The child depends only on this stream's seed and the keys, never on how
        much of this stream has been consumed.
        """
        entropy = [self.seed, *(_key_to_int(key) for key in keys)]
        state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
        return Rng(int(state[0]))

    def uniform(self, low: float, high: float, size: int | tuple[int, ...]) -> np.ndarray:
        return self._generator.uniform(low, high, size)

    def normal(self, size: int | tuple[int, ...], scale: float = 1.0) -> np.ndarray:
        return self._generator.normal(0.0, scale, size)

    def random(self, size: int | tuple[int, ...] | None = None) -> np.ndarray | float:
        return self._generator.random(size)

    def integers(self, high: int, size: int | tuple[int, ...] | None = None) -> np.ndarray | int:
        return self._generator.integers(0, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def choice(
        self,
        population: int | Sequence[int] | np.ndarray,
        size: int,
        *,
        replace: bool = False,
        p: np.ndarray | None = None,
    ) -> np.ndarray:
        return self._generator.choice(population, size=size, replace=replace, p=p)

    def bernoulli(self, keep: float, shape: tuple[int, ...]) -> np.ndarray:
        """Boolean mask whose entries are ``True`` with probability ``keep``."""
        return self._generator.random(shape) < keep

    def __repr__(self) -> str:
        return f'<Rng algorithm={RNG_ALGORITHM} seed={self.seed}>'
