"""Shared instance builders for the test suite."""

from __future__ import annotations

import numpy as np

from bdris import Architecture, ArchitectureKind, ChannelSet, Mode

# (arch, mode, K) combinations valid for small element counts
VALID_COMBOS = []
for _K in (2, 4, 8, 16, 32):
    _archs = [Architecture.single_connected(), Architecture.fully_connected()]
    _archs += [
        Architecture.group_connected(_L)
        for _L in range(2, _K)
        if _K % _L == 0
    ]
    for _arch in _archs:
        for _mode in Mode:
            VALID_COMBOS.append((_arch, _mode, _K))

TRANSMIT_COMBOS = [c for c in VALID_COMBOS if c[1] is not Mode.REFLECTIVE]


def random_channels(num_elements: int, num_ues: int, seed: int, noise_mw: float = 1.0) -> ChannelSet:
    """Unit-variance i.i.d. channels with a unit-modulus feed, for unit tests."""
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal((num_ues, num_elements)) + 1j * rng.standard_normal((num_ues, num_elements))) / np.sqrt(2)
    phases = rng.uniform(0, 2 * np.pi, num_elements)
    feed = np.exp(1j * phases) / np.sqrt(num_elements)
    return ChannelSet(ue_channels=h, feed=feed, noise_mw=noise_mw)


def random_blocks(rng: np.random.Generator, groups: int, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((groups, rows, cols)) + 1j * rng.standard_normal((groups, rows, cols))
