"""Portable, counter-based random streams.

All randomness in the package flows through Philox-4x64-10 (the raw bit
generator, never numpy's higher-level samplers, whose algorithms may change
between releases). A stream is addressed by ``(seed, domain, a, b)``:

* key word 0 = seed (mod 2**64), key word 1 = domain tag
* counter words 2 and 3 = ``a`` and ``b`` (e.g. query and resample index)

Counter words 0 and 1 advance as the stream is consumed, so streams with
different addresses never overlap. Uniform doubles take the top 53 bits of
each word; Gaussians use the Box-Muller transform. The raw words are the
contract; the float conversions only rely on IEEE-754 arithmetic and libm.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1

# Domain tags. Changing any of these changes every golden value.
SYNTH_NOISE = 1
SYNTH_MATCH = 2
SYNTH_HUBS = 3
PSEUDO_TEST = 4
STAGING_POOL = 5
SIGNIFICANCE = 6


def stream(seed: int, domain: int, a: int = 0, b: int = 0) -> np.random.Philox:
    key = np.array([seed & _MASK, domain & _MASK], dtype=np.uint64)
    counter = np.array([0, 0, a & _MASK, b & _MASK], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)


def raw_words(bitgen: np.random.Philox, n: int) -> np.ndarray:
    return np.asarray(bitgen.random_raw(n), dtype=np.uint64)


def uniforms(bitgen: np.random.Philox, n: int) -> np.ndarray:
    """``n`` doubles on [0, 1) with 53 bits of resolution."""
    return (raw_words(bitgen, n) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def gaussians(bitgen: np.random.Philox, n: int) -> np.ndarray:
    """``n`` standard normal draws via Box-Muller on consecutive uniform pairs."""
    pairs = (n + 1) // 2
    u = uniforms(bitgen, 2 * pairs).reshape(pairs, 2)
    # 1 - u lies in (0, 1], keeping the log finite
    r = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    z = np.empty((pairs, 2))
    z[:, 0] = r * np.cos(theta)
    z[:, 1] = r * np.sin(theta)
    return z.ravel()[:n]


def permutation(bitgen: np.random.Philox, n: int) -> np.ndarray:
    """Uniform random permutation of ``range(n)`` by sorting random 64-bit keys."""
    keys = raw_words(bitgen, n)
    return np.argsort(keys, kind="stable")


def sample_without_replacement(bitgen: np.random.Philox, population: int, k: int) -> np.ndarray:
    """``k`` distinct indices from ``range(population)``, returned ascending."""
    return np.sort(permutation(bitgen, population)[:k])
