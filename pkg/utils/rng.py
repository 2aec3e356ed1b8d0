import zlib

import numpy as np
import torch


def _stream_state(seed, name):
    # (master seed, stream name) -> 64-bit state, stable across runs and platforms
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode("utf-8")),))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_generator(seed, name):
    generator = torch.Generator(device="cpu")
    generator.manual_seed(_stream_state(seed, name))
    return generator


def make_numpy_rng(seed, name):
    return np.random.default_rng(_stream_state(seed, name))


class Streams:
    """Named torch generators for one run; each consumer draws from its own stream."""

    def __init__(self, seed):
        self.seed = int(seed)
        self._generators = {}

    def __getitem__(self, name):
        if name not in self._generators:
            self._generators[name] = make_generator(self.seed, name)
        return self._generators[name]
