"""Named deterministic RNG sub-streams derived from a single run seed.

Each consumer (env, alice, bob, gen_a, gen_b, eval) gets its own PCG64
stream; re-creating any one stream from (seed, name) reproduces exactly the
draws its consumer saw.
"""

from __future__ import annotations

import numpy as np

STREAM_IDS = {
    "env": 0,
    "alice": 1,
    "bob": 2,
    "gen_a": 3,
    "gen_b": 4,
    "eval": 5,
}


def stream(seed: int, name: str) -> np.random.Generator:
    if name not in STREAM_IDS:
        raise ValueError(f"unknown rng stream {name!r}; valid: {sorted(STREAM_IDS)}")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAM_IDS[name],))
    return np.random.Generator(np.random.PCG64(seq))


def substream(seed: int, name: str, index: int) -> np.random.Generator:
    """A stream keyed by (seed, name, index); used for evaluations so that
    the evaluation at a given round is reproducible in isolation."""
    if name not in STREAM_IDS:
        raise ValueError(f"unknown rng stream {name!r}; valid: {sorted(STREAM_IDS)}")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAM_IDS[name], int(index)))
    return np.random.Generator(np.random.PCG64(seq))


def all_streams(seed: int) -> dict[str, np.random.Generator]:
    return {name: stream(seed, name) for name in STREAM_IDS}
