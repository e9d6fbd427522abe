"""Seedable, splittable random streams.

A :class:`Stream` is a pure description of a position in a tree of random
number generators: a root entropy value plus a path of integer keys. Deriving
a child never consumes randomness from the parent, so results do not depend
on the order in which sibling streams are used.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _key(k) -> int:
    if isinstance(k, (bool, np.bool_)):
        return int(k)
    if isinstance(k, (int, np.integer)):
        return int(k) & _MASK64
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8")) | (1 << 40)
    raise TypeError(f"stream keys must be int or str, got {type(k).__name__}")


@dataclass(frozen=True)
class Stream:
    seed: int
    path: tuple[int, ...] = ()

    def child(self, *keys) -> "Stream":
        return Stream(self.seed, self.path + tuple(_key(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed & _MASK64, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


def as_stream(rng) -> Stream:
    """Coerce an int seed, Stream, or numpy Generator into a Stream.

    A Generator is consumed once to draw the root entropy.
    """
    if isinstance(rng, Stream):
        return rng
    if rng is None:
        return Stream(0)
    if isinstance(rng, (int, np.integer)):
        return Stream(int(rng))
    if isinstance(rng, np.random.Generator):
        return Stream(int(rng.integers(0, 2**63 - 1)))
    raise TypeError(f"cannot build a random stream from {type(rng).__name__}")


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return as_stream(rng).generator()
