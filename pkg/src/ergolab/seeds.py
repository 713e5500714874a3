"""Counter-based seed derivation.

A child seed is ``mix64(parent, counter)``, where ``mix64`` is the SplitMix64
finaliser applied to ``parent + (counter + 1) * 0x9E3779B97F4A7C15`` modulo
2**64.  Trial ``t`` of master seed ``s`` therefore always sees the same
generator no matter which worker runs it or in which order.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(seed: int, counter: int) -> int:
    z = (int(seed) + (int(counter) + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive(seed: int, *path: int) -> int:
    s = int(seed) & _MASK
    for c in path:
        s = mix64(s, c)
    return s


def generator(seed: int, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive(seed, *path)))
