"""Portable random streams for instance generation.

SplitMix64 (Steele, Lea & Flood) is used because its update rule is a few
lines of 64-bit integer arithmetic that any language reproduces bit for bit::

    state = state + 0x9E3779B97F4A7C15            (mod 2**64)
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB      (mod 2**64)
    return z ^ (z >> 31)

Normals come from the Box-Muller transform applied to consecutive pairs of
outputs ``(x1, x2)``::

    u1 = ((x1 >> 11) + 1) * 2**-53               in (0, 1]
    u2 = (x2 >> 11) * 2**-53                     in [0, 1)
    r = sqrt(-2 ln u1)
    z0, z1 = r cos(2 pi u2), r sin(2 pi u2)

both of which are emitted in that order.
"""
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _M1) & MASK64
        z = ((z ^ (z >> 27)) * _M2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _TWO_M53

    def normals(self, count: int) -> np.ndarray:
        out = np.empty(count)
        i = 0
        while i < count:
            u1 = ((self.next_u64() >> 11) + 1) * _TWO_M53
            u2 = (self.next_u64() >> 11) * _TWO_M53
            r = math.sqrt(-2.0 * math.log(u1))
            out[i] = r * math.cos(2.0 * math.pi * u2)
            if i + 1 < count:
                out[i + 1] = r * math.sin(2.0 * math.pi * u2)
            i += 2
        return out
