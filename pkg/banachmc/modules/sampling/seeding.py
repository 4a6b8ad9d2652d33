from __future__ import annotations

import hashlib

import numpy as np


def experiment_key(experiment_id: str) -> int:
    digest = hashlib.blake2b(experiment_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class ReplicateSeeder:
    """Counter-based streams keyed by (seed, experiment, replicate, level).

    Draws are consumed in sample order, so a run with M samples sees a prefix
    of the stream used by a run with more samples.
    """

    def __init__(self, seed: int = 0, experiment_id: str = "default"):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self.experiment_id = experiment_id
        self.key = experiment_key(experiment_id)

    def sequence(self, replicate: int, level: int) -> np.random.SeedSequence:
        if replicate < 0 or level < 0:
            raise ValueError("replicate and level must be non-negative")
        return np.random.SeedSequence([self.seed, self.key, int(replicate), int(level)])

    def generator(self, replicate: int = 0, level: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.sequence(replicate, level)))

    def sample_seed(self, replicate: int, level: int, sample: int) -> int:
        """A standalone 64-bit seed for one sample, for callers outside the stream."""
        words = self.sequence(replicate, level).spawn(sample + 1)[sample].generate_state(2)
        return int(words[0]) | (int(words[1]) << 32)

    def __repr__(self) -> str:
        return f"ReplicateSeeder(seed={self.seed}, experiment_id={self.experiment_id!r})"


def as_seeder(seed: ReplicateSeeder | int) -> ReplicateSeeder:
    if isinstance(seed, ReplicateSeeder):
        return seed
    return ReplicateSeeder(int(seed))
