"""Two-class stripe textures for smoke tests and demos.

Class +1 has vertical stripes (intensity varies along columns), class -1
horizontal ones. Each image is a square wave of period `period` with a
random phase: background 0.25, stripes 0.25 + amplitude, plus uniform
noise in [-noise, noise], clipped to [0, 1].
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .rng import stream
from .tensor import Tensor3


def stripe_image(vertical: bool, rng: np.random.Generator, size: int = 128, amplitude: float = 0.5,
                 noise: float = 0.2, period: int = 8) -> np.ndarray:
    phase = rng.integers(period)
    wave = ((np.arange(size) + phase) % period < period // 2).astype(np.float64)
    img = np.tile(wave, (size, 1)) if vertical else np.tile(wave[:, None], (1, size))
    img = 0.25 + amplitude * img + rng.uniform(-noise, noise, size=(size, size))
    return np.clip(img, 0.0, 1.0)


def make_stripes(n_per_class: int, seed: int = 0, size: int = 128, **kw) -> list[tuple[Tensor3, int]]:
    """Interleaved (+1, -1, +1, ...) list of 2 * n_per_class labelled tensors."""
    out = []
    for i in range(n_per_class):
        for label in (1, -1):
            rng = stream(seed, "stripes", i, label + 1)
            out.append((Tensor3(stripe_image(label == 1, rng, size, **kw)), label))
    return out


def write_stripes_dataset(root, n_per_class: int, seed: int = 0, size: int = 128,
                          class_names=("COVID", "non-COVID"), **kw) -> Path:
    """Write the stripe dataset as 8-bit PNGs under root/<class_name>/."""
    root = Path(root)
    for name in class_names:
        (root / name).mkdir(parents=True, exist_ok=True)
    for i in range(n_per_class):
        for label, name in zip((1, -1), class_names):
            rng = stream(seed, "stripes", i, label + 1)
            img = stripe_image(label == 1, rng, size, **kw)
            Image.fromarray(np.round(img * 255).astype(np.uint8)).save(root / name / f"img_{i:04d}.png")
    return root
