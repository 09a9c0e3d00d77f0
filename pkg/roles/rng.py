"""Seedable, splittable random streams.

Every sampler and fit takes a ``seed`` that may be an int, a
``numpy.random.SeedSequence`` or ``None``; child streams (restarts, time
points, importance samples) are spawned from it so results never depend on
scheduling.
"""
import numpy as np


def seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed_sequence(seed))


def spawn(seed, n):
    return seed_sequence(seed).spawn(n)
