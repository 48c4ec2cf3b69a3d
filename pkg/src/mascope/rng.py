"""SplitMix64 generator with fixed float mappings.

The streams are fully specified so other implementations can reproduce them:

* state transition: ``state += 0x9E3779B97F4A7C15 (mod 2**64)``, output is the
  standard SplitMix64 finalizer of the new state;
* ``uniform()``: ``(next_u64() >> 11) * 2**-53``, in ``[0, 1)``;
* ``randbelow(n)``: ``floor(uniform() * n)``;
* ``normal()``: Box-Muller cosine branch, consuming two uniforms ``u1, u2``
  and returning ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``. The sine branch is
  discarded, so every normal draw costs exactly two uniforms.
"""

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, low=0.0, high=1.0):
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def randbelow(self, n):
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        return min(int(self.uniform() * n), n - 1)

    def normal(self):
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def uniform_array(self, shape, low=0.0, high=1.0):
        """Row-major fill of an array of uniforms."""
        count = int(np.prod(shape))
        out = np.array([self.uniform(low, high) for _ in range(count)], dtype=float)
        return out.reshape(shape)

    def normal_array(self, shape):
        count = int(np.prod(shape))
        return np.array([self.normal() for _ in range(count)], dtype=float).reshape(shape)

    def shuffle(self, items):
        """In-place Fisher-Yates, walking from the last index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
        return items
