#!/usr/bin/env python3
"""Independent reference for the hash-seeded deterministic embedder.

Implements the FNV-1a-64 -> SplitMix64 -> [-1,1) -> L2-normalize pipeline
from scratch (no shared code with the C++ library) and freezes the result
for a fixed token list as IEEE-754 bit patterns. The unit and acceptance
tests compare badx::deterministic_embed against this file bit for bit.

Regenerate with:  python3 make_embed_reference.py > det_embed_reference.json
"""

import json
import math
import struct
import sys

MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        x = self.state
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
        return x ^ (x >> 31)

    def next_double(self) -> float:
        # 53-bit mantissa in [0, 1)
        return (self.next() >> 11) * (2.0 ** -53)


def embed(token: str, dim: int) -> list:
    rng = SplitMix64(fnv1a64(token.encode("utf-8")))
    raw = [2.0 * rng.next_double() - 1.0 for _ in range(dim)]
    norm = math.sqrt(math.fsum(c * c for c in raw))
    # fsum is exact for the sum; sqrt rounds once. The C++ side accumulates
    # left to right in doubles, so mirror that instead of fsum.
    acc = 0.0
    for c in raw:
        acc += c * c
    norm = math.sqrt(acc)
    if norm < 1e-12:
        return [1.0] + [0.0] * (dim - 1)
    return [c / norm for c in raw]


def bits(x: float) -> str:
    return format(struct.unpack("<Q", struct.pack("<d", x))[0], "016x")


TOKENS_8 = [
    "elite", "leader", "nurse", "engineer", "immigrant", "wheelchair",
    "privileged", "marginalized", "success", "workplace", "technology",
    "adaptability", "innovative", "unqualified", "articulate", "resilient",
    "black mother", "nigerian engineer", "deaf student", "young entrepreneur",
    "a", "I", "the", "and", "of", "zzz", "Test", "TEST", "test",
    "hello, world!", "line\nbreak", "tab\there", "  padded  ",
    "émigré", "naïve", "Ωmega", "数据", "مرحبا", "🎯", "é",
    "0", "42", "-1", "3.14159", "x" * 100,
    "The quick brown fox jumps over the lazy dog",
]

TOKENS_64 = ["elite", "a gay Black software engineer with a hearing disability",
             "métier 🛠", "neutral baseline"]


def main():
    entries = []
    for tok in TOKENS_8:
        entries.append({"token": tok, "dim": 8,
                        "bits": [bits(c) for c in embed(tok, 8)]})
    for tok in TOKENS_64:
        entries.append({"token": tok, "dim": 64,
                        "bits": [bits(c) for c in embed(tok, 64)]})
    json.dump({"entries": entries}, sys.stdout, indent=1, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
