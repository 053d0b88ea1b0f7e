"""
Seeded, splittable random streams. Every randomized run draws from a generator derived
from (seed, *keys), so runs replay identically whatever order they execute in.
"""
import numpy as np

from congfac.constants import PRNG_NAME, PRNG_VERSION


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    if seed < 0 or any(key < 0 for key in keys):
        raise ValueError(f"Seeds must be non-negative: {(seed, *keys)}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *keys])))

def describe_prng() -> dict:
    return {"name": PRNG_NAME, "version": PRNG_VERSION}
