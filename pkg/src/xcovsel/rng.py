"""Reproducible random stream derivation.

Every stochastic routine in this package accepts a ``seed`` that may be an
int, a ``numpy.random.SeedSequence``, or a ``numpy.random.Generator``.  The
seed is normalized to a ``SeedSequence`` and child streams are derived by
extending its ``spawn_key`` with small integer tags.  Because the derivation
is a pure function of (root entropy, key path), any fixed decomposition of
work into tasks yields the same streams no matter how tasks are scheduled,
which is what makes results invariant to the worker count.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """Normalize an int, SeedSequence, or Generator to a SeedSequence.

    A Generator contributes the SeedSequence it was constructed from, so
    passing ``np.random.default_rng(s)`` is equivalent to passing ``s``.
    """
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        ss = seed.bit_generator.seed_seq
        if isinstance(ss, np.random.SeedSequence):
            return ss
        # Bit generator seeded some other way: fall back to drawing entropy.
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        return np.random.SeedSequence(int(seed))
    raise TypeError(f"cannot interpret {type(seed).__name__} as a random seed")


def derive(base: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Child SeedSequence with `key` appended to the spawn key.

    Children with distinct keys are statistically independent; the same
    (base, key) pair always yields the same stream.
    """
    return np.random.SeedSequence(
        entropy=base.entropy, spawn_key=tuple(base.spawn_key) + tuple(int(k) for k in key)
    )


def generator(seed: SeedLike, *key: int) -> np.random.Generator:
    """Fresh Generator for the stream at `key` under `seed`."""
    return np.random.default_rng(derive(as_seed_sequence(seed), *key))


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Normalize to a Generator; an existing Generator is passed through.

    Passing a Generator lets a caller draw several variates from one
    stream; ints and SeedSequences construct a fresh stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(as_seed_sequence(seed))
