"""Seed derivation and random streams.

Every random stream is a numpy ``Generator`` over PCG64. Sub-streams are
derived from a master seed and a purpose tag::

    sub_seed = little-endian uint64 of sha256(f"{master}:{tag}")[:8]

so that adding a new consumer never shifts the draws of existing ones.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master: int, tag: str) -> int:
    digest = hashlib.sha256(f"{int(master) & MASK64}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def sub_rng(master: int, tag: str) -> np.random.Generator:
    return make_rng(derive_seed(master, tag))
