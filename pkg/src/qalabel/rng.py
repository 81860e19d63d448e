"""Counter-based random number generation.

Every random draw in this package is a pure function of (seed, counter),
computed with the splitmix64 finalizer.  That keeps the scalar API, the
vectorized numpy kernels, and the numba kernels bit-identical: they all
evaluate the same integer mix at the same counters, so a simulation is
reproducible regardless of backend, batching, or call order.

Counter layout for labeling simulations: instance ``i`` owns the stream
keyed by ``instance_key(seed, i)``; within an instance, draw ``j`` is
``unit_from(key, j)``.  Question-set sampling uses draws 0..I-1 and the
annotator's class draw uses slot K-1, so the two never collide for any
valid I <= K-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
# splitmix64 stream increment and a second odd constant for nested streams.
GAMMA1 = 0x9E3779B97F4A7C15
GAMMA2 = 0xD1B54A32D192ED03
_INV_2_53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def instance_key(seed: int, index: int) -> int:
    """Stream key for instance ``index`` under ``seed``."""
    return mix64((seed + (index + 1) * GAMMA1) & _MASK64)


def derive_seed(seed: int, tag: int) -> int:
    """Independent named substream (per repetition, per command, ...)."""
    return mix64((mix64(seed & _MASK64) ^ mix64((tag + 1) * GAMMA2)) & _MASK64)


def unit_from(key: int, counter: int) -> float:
    """Draw ``counter`` of the stream ``key`` as a float in [0, 1)."""
    return (mix64((key + (counter + 1) * GAMMA2) & _MASK64) >> 11) * _INV_2_53


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over a uint64 array."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def instance_keys(seed: int, start: int, n: int) -> np.ndarray:
    """Stream keys for instances start..start+n-1, as a uint64 array."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    return mix64_array(np.uint64(seed & _MASK64) + idx * np.uint64(GAMMA1))


def units_at(keys: np.ndarray, counter: int) -> np.ndarray:
    """Draw ``counter`` of every stream in ``keys`` as float64 in [0, 1)."""
    raw = mix64_array(keys + np.uint64(((counter + 1) * GAMMA2) & _MASK64))
    return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53


def uniform_array(seed: int, tag: int, shape: tuple[int, ...]) -> np.ndarray:
    """Reproducible uniforms in [0, 1) for parameter initialization etc."""
    n = int(np.prod(shape)) if shape else 1
    key = np.uint64(derive_seed(seed, tag))
    ctr = np.arange(1, n + 1, dtype=np.uint64)
    raw = mix64_array(key + ctr * np.uint64(GAMMA2))
    return ((raw >> np.uint64(11)).astype(np.float64) * _INV_2_53).reshape(shape)


def permutation(seed: int, tag: int, n: int) -> np.ndarray:
    """Deterministic permutation of range(n) from a named substream."""
    return np.argsort(uniform_array(seed, tag, (n,)), kind="stable")


@dataclass
class CounterRng:
    """Explicit splittable RNG state: a stream key plus a draw counter.

    ``for_instance(i)`` returns the stream that the array kernels use for
    instance ``i``, so scalar, single-instance sampling reproduces the
    batched kernels draw for draw.
    """

    seed: int
    counter: int = 0

    def next_uniform(self) -> float:
        u = unit_from(self.seed, self.counter)
        self.counter += 1
        return u

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(self.next_uniform() * n)

    def for_instance(self, index: int) -> "CounterRng":
        return CounterRng(seed=instance_key(self.seed, index))

    def split(self, tag: int) -> "CounterRng":
        return CounterRng(seed=derive_seed(self.seed, tag))
