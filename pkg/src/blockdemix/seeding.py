"""Named, independent random substreams derived from one integer seed.

Every random quantity in an instance is drawn from its own stream, so adding
a consumer never shifts the draws of another::

    theta1 -> 1   theta2 -> 2   noise -> 3   design -> 4
    bases  -> 5   init   -> 6   probe  -> 7  tone   -> 8
"""

import hashlib

import numpy as np

STREAMS = {
    "theta1": 1,
    "theta2": 2,
    "noise": 3,
    "design": 4,
    "bases": 5,
    "init": 6,
    "probe": 7,
    "tone": 8,
}


def seed_sequence(seed, *key) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def substream(seed, name: str) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, STREAMS[name]))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng(seed_sequence(seed))


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from a tuple of ints and strings (sha256 of their repr)."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
