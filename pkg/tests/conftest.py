from __future__ import annotations

import numpy as np
import pytest

from vamix.audio_io import AudioClip
from vamix.harness import StemPair
from vamix.spectral import StftParams

# A small analysis grid (33 bins) so mask/eval tests run in milliseconds.
SHORT_RATE = 8000


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def short_params():
    return StftParams(window_size=64, hop=32, sample_rate=SHORT_RATE)


def tiny_stem_pair(seed: int = 0, n: int = 4096, rate: int = SHORT_RATE) -> StemPair:
    """A miniature two-source pair: low tone stack vs noise bursts."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) / rate
    f0 = rng.uniform(120.0, 250.0)
    a = np.zeros(n)
    for k in (1, 2, 3):
        a += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
    b = np.zeros(n)
    for _ in range(4):
        start = int(rng.integers(0, n - 400))
        env = np.exp(-np.arange(400) / 60.0)
        b[start : start + 400] += env * rng.standard_normal(400)
    a *= 0.45 / np.max(np.abs(a))
    b *= 0.45 / np.max(np.abs(b))
    return StemPair(
        stem_a=AudioClip(a, rate),
        stem_b=AudioClip(b, rate),
        mixture=AudioClip(a + b, rate),
        labels=("tone", "bursts"),
    )


@pytest.fixture
def tiny_pair():
    return tiny_stem_pair(seed=5)
