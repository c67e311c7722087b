"""Master-seed fan-out into named, independent sub-seeds."""

import hashlib

import numpy as np


def derive_seed(master: int, *labels: object) -> int:
    """
    Derive a sub-seed from a master seed and a sequence of labels.

    Args:
        master: Master seed of the experiment
        *labels: Stream labels, e.g. ``("init", 3)`` for repeat run 3

    Returns:
        Non-negative 63-bit integer seed
    """
    key = ":".join([str(int(master))] + [str(label) for label in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def make_rng(seed: int) -> np.random.Generator:
    """Build the generator used everywhere in the toolkit."""
    return np.random.Generator(np.random.PCG64(seed))
